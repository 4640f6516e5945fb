"""Iteration loops for the three prediction-correction algorithms."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    Algorithm,
    ContractionConstants,
    ConvexityClass,
    DomainError,
    GradientOracle,
    InternalError,
    IpcError,
    LineSearchParams,
    LineSearchStall,
    SolverConfig,
    StationaryPoint,
    ValidationError,
    alpha_k,
    contraction_constants,
    ipc_step,
)

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    LINE_SEARCH_STALL = "LineSearchStall"
    VALIDATION_ERROR = "ValidationError"


@dataclass(frozen=True)
class IterationRecord:
    k: int
    f: float
    grad_norm: float
    h_k: Optional[float] = None
    alpha_k: Optional[float] = None
    r_k: Optional[float] = None
    ls_evals: int = 0
    dist_sq: Optional[float] = None
    # ConvexIpc trapezoid mode fell back to the configured eta this iteration
    fallback: bool = False


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    status: Status = Status.MAX_ITERS
    final_x: Optional[np.ndarray] = None
    total_grad_evals: int = 0
    constants: Optional[ContractionConstants] = None

    @property
    def iterations(self) -> int:
        """Number of completed update steps."""
        return sum(1 for r in self.records if r.h_k is not None)

    @property
    def final_grad_norm(self) -> float:
        return self.records[-1].grad_norm


@dataclass(frozen=True)
class LineSearchOutcome:
    h_k: float
    z: np.ndarray
    grad_z: np.ndarray
    r_k: float
    evals: int


def line_search(x, grad_x, gamma0, params: LineSearchParams, oracle: GradientOracle) -> LineSearchOutcome:
    """Backtrack from ``gamma0`` until the local Lipschitz ratio drops to ``nu``.

    The ratio is ``gamma*||grad f(z) - grad f(x)|| / ||z - x||`` with
    ``z = x - gamma*grad_x``; the trial step shrinks by
    ``theta*min(1, 1/ratio)`` after each rejection.
    """
    if not np.any(grad_x):
        raise InternalError("line search started at a stationary point")
    gamma = gamma0
    evals = 0
    while evals < params.max_evals:
        z = x - gamma * grad_x
        grad_z = oracle.eval_grad(z)
        evals += 1
        dz = np.linalg.norm(z - x)
        if dz == 0.0:
            raise LineSearchStall(f"trial step {gamma!r} too small to move x after {evals} evaluations")
        r = gamma * np.linalg.norm(grad_z - grad_x) / dz
        if r <= params.nu:
            return LineSearchOutcome(h_k=gamma, z=z, grad_z=grad_z, r_k=float(r), evals=evals)
        gamma = gamma * params.theta * min(1.0, 1.0 / r)
    raise LineSearchStall(f"no acceptable step after {evals} gradient evaluations (last trial {gamma:.3e})")


def adaptive_initial_step(h_k: float, r_k: float, params: LineSearchParams) -> float:
    candidate = params.tau * h_k if r_k <= params.mu else h_k
    return min(max(candidate, params.h_lo), params.h_hi)


def _dist_sq(x, x_star):
    if x_star is None:
        return None
    d = x - x_star
    return float(np.dot(d, d))


def _run(oracle: GradientOracle, cfg: SolverConfig, x0, algorithm: Algorithm) -> RunTrace:
    if Algorithm(cfg.algorithm) is not algorithm:
        raise ValidationError(f"config is for {cfg.algorithm}, solver expects {algorithm.value}")
    cfg.validate(oracle)
    consts = contraction_constants(cfg, oracle)
    if algorithm is Algorithm.CONVEX_IPC and oracle.convexity_class is not ConvexityClass.CONVEX:
        log.warning("ConvexIpc run on an oracle of class %s", oracle.convexity_class.value)

    x = np.array(x0, dtype=float, copy=True)
    if x.shape != (oracle.dim,):
        raise ValidationError(f"x0 has shape {x.shape}, oracle dimension is {oracle.dim}")
    x_star = oracle.known_solution
    ls = cfg.line_search
    gamma0 = ls.gamma0_init if ls is not None else None
    L = oracle.lipschitz
    beta = cfg.beta

    trace = RunTrace()
    k = 0
    while True:
        if oracle.in_domain is not None and not oracle.in_domain(x):
            raise DomainError(f"iterate {k} left the objective's domain")
        grad_x = oracle.eval_grad(x)
        trace.total_grad_evals += 1
        g_norm = float(np.linalg.norm(grad_x))
        fx = float(oracle.eval_f(x))
        dist_sq = _dist_sq(x, x_star)
        if g_norm < cfg.epsilon:
            trace.records.append(IterationRecord(k=k, f=fx, grad_norm=g_norm, dist_sq=dist_sq))
            trace.status = Status.CONVERGED
            break
        if k >= cfg.max_iters:
            trace.records.append(IterationRecord(k=k, f=fx, grad_norm=g_norm, dist_sq=dist_sq))
            trace.status = Status.MAX_ITERS
            break

        alpha = None
        fallback = False
        ls_evals = 0
        if algorithm is Algorithm.IPC_CONSTANT or cfg.h_const is not None:
            h = cfg.h_const
            z = x - h * grad_x
            grad_z = oracle.eval_grad(z)
            trace.total_grad_evals += 1
            r = h * float(np.linalg.norm(grad_z - grad_x)) / float(np.linalg.norm(z - x))
        else:
            try:
                out = line_search(x, grad_x, gamma0, ls, oracle)
            except LineSearchStall as exc:
                log.warning("iteration %d: %s", k, exc)
                trace.records.append(IterationRecord(k=k, f=fx, grad_norm=g_norm, dist_sq=dist_sq))
                trace.status = Status.LINE_SEARCH_STALL
                break
            h, z, grad_z, r, ls_evals = out.h_k, out.z, out.grad_z, out.r_k, out.evals
            # the accepted trial already holds grad f(z)
            trace.total_grad_evals += ls_evals

        if algorithm is Algorithm.CONVEX_IPC:
            try:
                alpha = alpha_k(x, z, grad_x, grad_z, h, beta, L)
            except StationaryPoint as exc:
                raise InternalError(str(exc)) from exc
            if not alpha > 0:
                raise InternalError(f"alpha_k = {alpha} <= 0 at iteration {k}; oracle is not monotone/Lipschitz")
            scale = cfg.eta * alpha
            if cfg.trapezoid_mode:
                if alpha > 0.5:
                    # eta = 1/alpha_k lies in (0, 2), so eta*alpha_k is exactly 1
                    scale = 1.0
                else:
                    fallback = True
            x_next = ipc_step(x, grad_x, grad_z, h, beta, scale)
        else:
            x_next = ipc_step(x, grad_x, grad_z, h, beta, 1.0)

        trace.records.append(
            IterationRecord(
                k=k,
                f=fx,
                grad_norm=g_norm,
                h_k=float(h),
                alpha_k=alpha,
                r_k=float(r),
                ls_evals=ls_evals,
                dist_sq=dist_sq,
                fallback=fallback,
            )
        )
        if ls is not None and cfg.h_const is None:
            gamma0 = adaptive_initial_step(h, r, ls)
        x = x_next
        k += 1

    trace.final_x = x
    trace.constants = consts
    return trace


def solve_ipc_constant(oracle: GradientOracle, cfg: SolverConfig, x0) -> RunTrace:
    """Constant-step method; needs 0 < h < 1/L."""
    return _run(oracle, cfg, x0, Algorithm.IPC_CONSTANT)


def solve_ipc_adaptive(oracle: GradientOracle, cfg: SolverConfig, x0) -> RunTrace:
    """Line-search method that never touches the global Lipschitz constant."""
    return _run(oracle, cfg, x0, Algorithm.IPC_ADAPTIVE)


def solve_convex_ipc(oracle: GradientOracle, cfg: SolverConfig, x0) -> RunTrace:
    """Convex variant with the relaxed correction length ``eta*alpha_k``.

    With ``trapezoid_mode`` each iteration uses ``eta = 1/alpha_k`` whenever
    that lies in (0, 2), which turns the update into the explicit
    trapezoidal scheme. Iterations where it does not are flagged.
    """
    return _run(oracle, cfg, x0, Algorithm.CONVEX_IPC)


def solve(oracle: GradientOracle, cfg: SolverConfig, x0=None) -> RunTrace:
    if x0 is None:
        if oracle.x0 is None:
            raise ValidationError("no starting point given and the oracle has no default")
        x0 = oracle.x0
    return _run(oracle, cfg, x0, Algorithm(cfg.algorithm))


@dataclass(frozen=True)
class VerificationReport:
    fejer_ok: bool
    ergodic_ok: bool
    h_floor_ok: Optional[bool]
    alpha_floor_ok: Optional[bool]
    worst_fejer_excess: float = 0.0

    @property
    def all_ok(self) -> bool:
        return all(v is not False for v in (self.fejer_ok, self.ergodic_ok, self.h_floor_ok, self.alpha_floor_ok))


class MissingSolution(IpcError, ValueError):
    """Verification needs the oracle's known minimizer."""


def verify_trace(trace: RunTrace, oracle: GradientOracle, cfg: SolverConfig) -> VerificationReport:
    """Check a finished run against the descent and rate guarantees.

    Uses only stored per-iteration scalars: since ``x - z = h*grad f(x)``,
    ``||x - z||^2 = h^2 * grad_norm^2``.
    """
    if oracle.known_solution is None:
        raise MissingSolution("verify_trace needs oracle.known_solution")
    alg = Algorithm(cfg.algorithm)
    consts: ContractionConstants = contraction_constants(cfg, oracle)
    kappa = consts.for_algorithm(alg)
    recs = trace.records
    d0 = recs[0].dist_sq
    slack = 1e-10 * d0

    fejer_ok = True
    worst = -np.inf
    for cur, nxt in zip(recs, recs[1:]):
        step_sq = (cur.h_k * cur.grad_norm) ** 2
        excess = nxt.dist_sq - (cur.dist_sq - kappa * step_sq)
        worst = max(worst, excess)
        if excess > slack:
            fejer_ok = False

    if alg is Algorithm.IPC_CONSTANT:
        h_rate = cfg.h_const
    else:
        h_rate = consts.h_min
    ergodic_ok = True
    if np.isfinite(h_rate):
        running = 0.0
        for K, rec in enumerate(recs, start=1):
            running += rec.grad_norm**2
            if running / K > d0 / (K * kappa * h_rate**2) * (1 + 1e-12):
                ergodic_ok = False
                break
    else:
        ergodic_ok = False

    stepped = [r for r in recs if r.h_k is not None]
    h_floor_ok = None
    if alg is not Algorithm.IPC_CONSTANT and cfg.h_const is None and np.isfinite(consts.h_min):
        h_floor_ok = all(r.h_k >= consts.h_min for r in stepped)
    alpha_floor_ok = None
    if alg is Algorithm.CONVEX_IPC:
        alpha_floor_ok = all(r.alpha_k >= consts.alpha_min for r in stepped)

    return VerificationReport(
        fejer_ok=fejer_ok,
        ergodic_ok=ergodic_ok,
        h_floor_ok=h_floor_ok,
        alpha_floor_ok=alpha_floor_ok,
        worst_fejer_excess=float(worst) if stepped else 0.0,
    )
