"""Domain types and closed-form formulas shared by the solvers.

Everything here is a pure function of its inputs. No iteration loops live in
this module; see :mod:`ipcopt.solvers` for those.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class IpcError(Exception):
    """Base class for all errors raised by the package."""


class ValidationError(IpcError, ValueError):
    """A configuration violates one of the algorithm's parameter ranges."""


class StationaryPoint(IpcError):
    """A quotient was requested at a point where the gradient vanishes."""


class InternalError(IpcError, RuntimeError):
    """An invariant that the theory guarantees was observed to fail."""


class LineSearchStall(IpcError):
    """The backtracking line search exhausted its evaluation budget."""


class DomainError(IpcError, ValueError):
    """An oracle was evaluated outside the region where it is defined."""


class ConvexityClass(str, enum.Enum):
    CONVEX = "Convex"
    PSEUDO_CONVEX = "PseudoConvex"
    UNKNOWN = "Unknown"


class Algorithm(str, enum.Enum):
    IPC_CONSTANT = "IpcConstant"
    IPC_ADAPTIVE = "IpcAdaptive"
    CONVEX_IPC = "ConvexIpc"


@dataclass(frozen=True, eq=False)
class GradientOracle:
    """First-order oracle for a smooth objective.

    ``grad_of_f`` is only set when ``eval_grad`` is deliberately *not* the
    gradient of ``eval_f`` (the arctan-quadratic benchmark); it then holds the
    true gradient of ``eval_f`` so finite-difference checks have something
    consistent to compare against.
    """

    dim: int
    eval_f: Callable[[np.ndarray], float]
    eval_grad: Callable[[np.ndarray], np.ndarray]
    lipschitz: Optional[float] = None
    known_solution: Optional[np.ndarray] = None
    convexity_class: ConvexityClass = ConvexityClass.UNKNOWN
    x0: Optional[np.ndarray] = None
    name: str = "custom"
    grad_of_f: Optional[Callable[[np.ndarray], np.ndarray]] = None
    in_domain: Optional[Callable[[np.ndarray], bool]] = None
    # generator-specific arrays (Q, M, hessian diagonal, ...) kept for
    # serialization and for closed-form reference solutions
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"dim must be positive, got {self.dim}")
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise ValidationError(f"lipschitz must be positive, got {self.lipschitz}")


@dataclass(frozen=True)
class LineSearchParams:
    mu: float
    nu: float
    theta: float
    tau: float
    gamma0_init: float
    h_lo: float
    h_hi: float
    max_evals: int = 100

    def validate(self) -> None:
        if not 0 < self.mu < self.nu < 1:
            raise ValidationError(f"need 0 < mu < nu < 1, got mu={self.mu}, nu={self.nu}")
        if not 0 < self.theta < 1:
            raise ValidationError(f"need theta in (0, 1), got {self.theta}")
        if not self.tau > 1:
            raise ValidationError(f"need tau > 1, got {self.tau}")
        # gamma0 >= 1 is not enforced: the exp2 preset uses gamma0 = 2/L < 1
        if not 0 < self.h_lo <= self.gamma0_init <= self.h_hi:
            raise ValidationError(
                "need 0 < h_lo <= gamma0_init <= h_hi, got "
                f"h_lo={self.h_lo}, gamma0_init={self.gamma0_init}, h_hi={self.h_hi}"
            )
        if self.max_evals < 1:
            raise ValidationError("max_evals must be at least 1")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one solver run.

    ``h_const`` is the fixed step of IpcConstant. For ConvexIpc it is optional:
    when set, the line search is skipped and every iteration uses that step.
    """

    algorithm: Algorithm
    beta: float
    eta: float = 1.0
    h_const: Optional[float] = None
    line_search: Optional[LineSearchParams] = None
    epsilon: float = 1e-3
    max_iters: int = 1_000_000
    trapezoid_mode: bool = False

    def validate(self, oracle: Optional[GradientOracle] = None) -> None:
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be positive, got {self.max_iters}")
        if not 0 <= self.beta <= 1:
            raise ValidationError(f"beta must lie in [0, 1], got {self.beta}")
        L = oracle.lipschitz if oracle is not None else None
        alg = Algorithm(self.algorithm)

        if alg is Algorithm.IPC_CONSTANT:
            if L is None:
                raise ValidationError("IpcConstant needs a known Lipschitz constant")
            if self.h_const is None or not 0 < self.h_const * L < 1:
                raise ValidationError(f"IpcConstant needs 0 < h < 1/L = {1 / L}, got h={self.h_const}")
            lo = beta_lower_bound_constant(self.h_const, L)
            if not lo < self.beta <= 1:
                raise ValidationError(f"beta={self.beta} outside ({lo:.12g}, 1] for h*L={self.h_const * L:.12g}")
            return

        if alg is Algorithm.IPC_ADAPTIVE:
            if self.line_search is None:
                raise ValidationError("IpcAdaptive needs line-search parameters")
            self.line_search.validate()
            lo = beta_lower_bound_adaptive(self.line_search.nu)
            if not lo < self.beta <= 1:
                raise ValidationError(
                    f"beta={self.beta} outside ({lo:.4f}, 1] for nu={self.line_search.nu}"
                )
            return

        # ConvexIpc
        if not 0 < self.eta < 2:
            raise ValidationError(f"eta must lie in (0, 2), got {self.eta}")
        if L is None:
            raise ValidationError("ConvexIpc needs a known Lipschitz constant")
        if self.line_search is None:
            raise ValidationError("ConvexIpc needs line-search parameters")
        self.line_search.validate()
        if not self.line_search.h_hi < 4 / L:
            raise ValidationError(f"ConvexIpc needs h_hi < 4/L = {4 / L}, got {self.line_search.h_hi}")
        if self.h_const is not None and not 0 < self.h_const < 4 / L:
            raise ValidationError(f"fixed step must lie in (0, 4/L), got {self.h_const}")


@dataclass(frozen=True)
class IterationState:
    k: int
    x: np.ndarray
    z: np.ndarray
    grad_x: np.ndarray
    grad_z: np.ndarray
    h_k: float
    r_k: float
    alpha_k: Optional[float]
    ls_evals: int
    d_k: np.ndarray


@dataclass(frozen=True)
class ContractionConstants:
    kappa1: float
    kappa2: float
    kappa3: float
    kappa4: float
    alpha_min: float
    h_min: float
    beta_lo: float
    beta_hi: float = 1.0

    def for_algorithm(self, algorithm: Algorithm) -> float:
        """The kappa that appears in the algorithm's Fejer inequality."""
        return {
            Algorithm.IPC_CONSTANT: self.kappa1,
            Algorithm.IPC_ADAPTIVE: self.kappa2,
            Algorithm.CONVEX_IPC: self.kappa4,
        }[Algorithm(algorithm)]


def beta_lower_bound_constant(h: float, L: float) -> float:
    """Open lower end of the admissible beta interval for a constant step."""
    if not L > 0:
        raise ValidationError(f"L must be positive, got {L}")
    s = h * L
    if not 0 < s < 1:
        raise ValidationError(f"need 0 < h*L < 1, got h*L={s}")
    s2 = s * s
    # (1 - sqrt(1 - s2)) / s2 rewritten to avoid cancellation for small s
    return 1.0 / (1.0 + math.sqrt(1.0 - s2))


def beta_lower_bound_adaptive(nu: float) -> float:
    if not 0 < nu < 1:
        raise ValidationError(f"need nu in (0, 1), got {nu}")
    return 1.0 / (1.0 + math.sqrt(1.0 - nu * nu))


def contraction_constants(cfg: SolverConfig, oracle: GradientOracle) -> ContractionConstants:
    """Evaluate every contraction constant that the configuration admits.

    Constants that need data the configuration lacks (no line search, no L)
    come back as NaN. The one belonging to ``cfg.algorithm`` must be positive.
    """
    beta = cfg.beta
    L = oracle.lipschitz
    ls = cfg.line_search
    nan = float("nan")
    alg = Algorithm(cfg.algorithm)

    kappa1 = nan
    if cfg.h_const is not None and L is not None:
        kappa1 = 2 * beta - 1 - beta**2 * cfg.h_const**2 * L**2

    kappa2 = kappa3 = alpha_min = kappa4 = h_min = nan
    if ls is not None:
        nu = ls.nu
        kappa2 = 2 * beta - 1 - beta**2 * nu**2
        if L is not None:
            kappa3 = (1 - beta) * (1 - L * ls.h_hi / 4) + beta * (1 - nu)
            alpha_min = kappa3 / (2 + 2 * beta**2 * nu**2)
            kappa4 = cfg.eta * (2 - cfg.eta) * alpha_min * kappa3
            h_min = min(ls.h_lo, nu * ls.theta / (ls.h_hi * max(L, 1.0) ** 2))

    if alg is Algorithm.IPC_CONSTANT:
        beta_lo = beta_lower_bound_constant(cfg.h_const, L) if (cfg.h_const and L) else nan
        if not kappa1 > 0:
            raise ValidationError(f"kappa1 = 2*beta - 1 - beta^2 h^2 L^2 = {kappa1} is not positive")
    elif alg is Algorithm.IPC_ADAPTIVE:
        beta_lo = beta_lower_bound_adaptive(ls.nu) if ls is not None else nan
        if not kappa2 > 0:
            raise ValidationError(f"kappa2 = 2*beta - 1 - beta^2 nu^2 = {kappa2} is not positive")
    else:
        beta_lo = 0.0
        if not kappa4 > 0:
            raise ValidationError(
                f"kappa4 = eta(2-eta) alpha_min kappa3 = {kappa4} is not positive (kappa3={kappa3})"
            )

    return ContractionConstants(
        kappa1=kappa1,
        kappa2=kappa2,
        kappa3=kappa3,
        kappa4=kappa4,
        alpha_min=alpha_min,
        h_min=h_min,
        beta_lo=beta_lo,
    )


def _check_shapes(*arrays: np.ndarray) -> None:
    n = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != n:
            raise ValueError(f"dimension mismatch: {a.shape} vs {n}")


def ipc_step(x, grad_x, grad_z, h, beta, scale=1.0) -> np.ndarray:
    """Corrected update ``x - scale*h*(grad_x - beta*(grad_x - grad_z))``.

    beta=0 is a gradient step, beta=1 the extra-gradient correction, and
    beta=1/2 the explicit trapezoidal scheme. ``scale`` is eta*alpha_k for
    ConvexIpc and 1 otherwise.
    """
    _check_shapes(x, grad_x, grad_z)
    return x - (scale * h) * _blend(grad_x, grad_z, beta)


def _blend(grad_x, grad_z, beta):
    # (1-beta)*gx + beta*gz reproduces gx, gz exactly at beta = 0, 1
    return (1.0 - beta) * grad_x + beta * grad_z


def correction_direction(grad_x, grad_z, h, beta) -> np.ndarray:
    """``d_k = h*(grad_x - beta*(grad_x - grad_z))``."""
    return h * _blend(grad_x, grad_z, beta)


def alpha_k(x, z, grad_x, grad_z, h, beta, L) -> float:
    """Optimal correction step length of the convex algorithm."""
    _check_shapes(x, z, grad_x, grad_z)
    diff = x - z
    dist_sq = float(np.dot(diff, diff))
    if dist_sq == 0.0:
        raise StationaryPoint("alpha_k requested with x == z")
    direction = _blend(grad_x, grad_z, beta)
    numer = (1 - beta) * (1 - L * h / 4) * dist_sq + beta * float(np.dot(diff, h * grad_z))
    denom = h * h * float(np.dot(direction, direction))
    if denom == 0.0:
        raise InternalError("alpha_k denominator vanished with x != z")
    return numer / denom


def finite_difference_grad(oracle: GradientOracle, x, step: float = 1e-4) -> np.ndarray:
    """Central-difference estimate of the gradient of ``oracle.eval_f``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for i in range(x.size):
        e[i] = step
        g[i] = (oracle.eval_f(x + e) - oracle.eval_f(x - e)) / (2 * step)
        e[i] = 0.0
    return g
