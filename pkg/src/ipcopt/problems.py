"""Benchmark oracles: the fractional and arctan-quadratic experiments plus
diagonal quadratics with a known minimizer.

Random quantities come from PCG64 streams keyed by ``(seed, slot)``. Each
named quantity owns a fixed slot, so adding a new one never perturbs the
existing draws.
"""

from __future__ import annotations

import numpy as np

from .core import ConvexityClass, DomainError, GradientOracle

# one independent stream per named random quantity; never renumber
_SLOTS = {
    "fractional.M": 0,
    "fractional.c": 1,
    "fractional.q": 2,
    "fractional.r": 3,
    "fractional.x0": 4,
    "arctan.A": 10,
    "arctan.C": 11,
    "arctan.q": 12,
    "arctan.x0": 13,
    "arctan.power": 14,
    "quadratic.x_star": 20,
    "quadratic.x0": 21,
}


def rng_for(seed: int, name: str) -> np.random.Generator:
    """Independent generator for the quantity ``name`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_SLOTS[name],))
    return np.random.Generator(np.random.PCG64(ss))


def spectral_norm(M: np.ndarray, rng: np.random.Generator | None = None, max_iter: int = 5000, rtol: float = 1e-13):
    """Largest singular value of ``M`` by power iteration on ``M^T M``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = np.sqrt(nw)
        if abs(new - sigma) <= rtol * new:
            sigma = new
            break
        sigma = new
    return float(np.linalg.norm(M @ v))


def fractional_oracle(Q, c, q_const, r, t_const, *, x0=None, seed=None) -> GradientOracle:
    """Oracle for ``f(x) = G(x)/D(x)`` with ``G = x'Qx/2 + c'x + q`` and
    ``D = r'x + t``.

    Line-search trial points may land where ``D <= 0``; the formulas are still
    evaluated there (the ratio test rejects them). Only ``D == 0`` raises.
    Solvers check ``in_domain`` on every iterate.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    r = np.asarray(r, dtype=float)
    q_const = float(q_const)
    t_const = float(t_const)

    def denom(x):
        d = r @ x + t_const
        if d == 0.0:
            raise DomainError("fractional objective evaluated on its pole r'x + t = 0")
        return d

    def eval_f(x):
        Qx = Q @ x
        return (0.5 * (x @ Qx) + c @ x + q_const) / denom(x)

    def eval_grad(x):
        Qx = Q @ x
        d = denom(x)
        ratio = (0.5 * (x @ Qx) + c @ x + q_const) / d
        return (Qx + c - ratio * r) / d

    return GradientOracle(
        dim=Q.shape[0],
        eval_f=eval_f,
        eval_grad=eval_grad,
        convexity_class=ConvexityClass.PSEUDO_CONVEX,
        x0=None if x0 is None else np.asarray(x0, dtype=float),
        name="fractional",
        in_domain=lambda x: float(r @ x + t_const) > 0,
        data={"Q": Q, "c": c, "q_const": q_const, "r": r, "t_const": t_const, "seed": seed},
    )


def make_fractional(n: int, seed: int) -> GradientOracle:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    M = rng_for(seed, "fractional.M").uniform(0.0, 1.0, size=(n, n))
    Q = M @ M.T + np.eye(n)
    Q = 0.5 * (Q + Q.T)
    c = rng_for(seed, "fractional.c").uniform(0.0, 2.0, size=n)
    q_const = rng_for(seed, "fractional.q").uniform(1.0, 2.0)
    r = rng_for(seed, "fractional.r").uniform(0.0, 2.0, size=n)
    x0 = rng_for(seed, "fractional.x0").uniform(1.0, 10.0, size=n)
    return fractional_oracle(Q, c, q_const, r, 1.0 + 4.0 * n, x0=x0, seed=seed)


def arctan_quadratic_oracle(A, B, q, *, x0=None, seed=None, lipschitz=None) -> GradientOracle:
    """Oracle for the convex arctan-quadratic benchmark.

    ``eval_grad`` is ``arctan(x) + Mx + q`` with ``M = A'A + B``. When the skew
    part ``B`` is nonzero this is not the gradient of ``eval_f`` (the skew part
    drops out of ``x'Mx``); ``grad_of_f`` holds the true gradient.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    q = np.asarray(q, dtype=float)
    M = A.T @ A + B
    M_sym = 0.5 * (M + M.T)
    if lipschitz is None:
        lipschitz = spectral_norm(M, rng_for(seed or 0, "arctan.power")) + 1.0

    def eval_f(x):
        return float(x @ np.arctan(x) - 0.5 * np.sum(np.log1p(x * x)) + 0.5 * (x @ (M @ x)) + q @ x)

    def eval_grad(x):
        return np.arctan(x) + M @ x + q

    def grad_of_f(x):
        return np.arctan(x) + M_sym @ x + q

    return GradientOracle(
        dim=M.shape[0],
        eval_f=eval_f,
        eval_grad=eval_grad,
        lipschitz=float(lipschitz),
        convexity_class=ConvexityClass.CONVEX,
        x0=None if x0 is None else np.asarray(x0, dtype=float),
        name="arctan_quadratic",
        grad_of_f=grad_of_f,
        data={"A": A, "B": B, "M": M, "q": q, "seed": seed},
    )


def make_arctan_quadratic(n: int, seed: int) -> GradientOracle:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    A = rng_for(seed, "arctan.A").uniform(-5.0, 5.0, size=(n, n))
    C = rng_for(seed, "arctan.C").uniform(-5.0, 5.0, size=(n, n))
    B = 0.5 * (C - C.T)
    q = rng_for(seed, "arctan.q").uniform(-500.0, 500.0, size=n)
    x0 = rng_for(seed, "arctan.x0").uniform(0.0, 1.0, size=n)
    return arctan_quadratic_oracle(A, B, q, x0=x0, seed=seed)


def quadratic_oracle(hessian_diag, x_star, *, x0=None, seed=None) -> GradientOracle:
    """``f(x) = (x - x*)' H (x - x*) / 2`` with diagonal ``H``."""
    H = np.asarray(hessian_diag, dtype=float)
    x_star = np.asarray(x_star, dtype=float)

    def eval_f(x):
        d = x - x_star
        return 0.5 * float(d @ (H * d))

    def eval_grad(x):
        return H * (x - x_star)

    return GradientOracle(
        dim=H.size,
        eval_f=eval_f,
        eval_grad=eval_grad,
        lipschitz=float(H.max()),
        known_solution=x_star,
        convexity_class=ConvexityClass.CONVEX,
        x0=None if x0 is None else np.asarray(x0, dtype=float),
        name="quadratic",
        data={"hessian_diag": H, "x_star": x_star, "seed": seed},
    )


def make_quadratic(n: int, cond: float, seed: int) -> GradientOracle:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not cond >= 1:
        raise ValueError(f"cond must be >= 1, got {cond}")
    H = np.logspace(0.0, np.log10(cond), n) if n > 1 else np.array([float(cond)])
    H[-1] = float(cond)
    x_star = rng_for(seed, "quadratic.x_star").uniform(-1.0, 1.0, size=n)
    x0 = x_star + rng_for(seed, "quadratic.x0").uniform(-1.0, 1.0, size=n)
    return quadratic_oracle(H, x_star, x0=x0, seed=seed)


GENERATORS = {
    "fractional": make_fractional,
    "arctan_quadratic": make_arctan_quadratic,
    "quadratic": make_quadratic,
}
