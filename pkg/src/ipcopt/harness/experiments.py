"""Experiment orchestration: single runs, beta sweeps, and the order study."""

from __future__ import annotations

import datetime as _dt
import enum
import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..core import Algorithm, GradientOracle, IpcError, LineSearchParams, SolverConfig, ValidationError
from ..gradient_flow import FlowScheme, SchemeKind, estimate_order
from ..problems import make_arctan_quadratic, make_fractional, make_quadratic
from ..solvers import Status, VerificationReport, solve, verify_trace
from . import io as hio

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 1_000_000


class Problem(str, enum.Enum):
    FRACTIONAL = "fractional"
    ARCTAN_QUADRATIC = "arctan_quadratic"
    QUADRATIC = "quadratic"


def profile_params(profile: str, oracle: GradientOracle) -> dict:
    """Parameter presets of the two benchmark experiments.

    exp2 ties gamma0 and h_hi to 2/L, so it needs the oracle.
    """
    if profile == "exp1":
        return dict(mu=0.3, nu=0.5, tau=1.5, theta=0.67, gamma0_init=1.0, h_hi=3.0, h_lo=1e-6, epsilon=1e-3)
    if profile == "exp2":
        if oracle.lipschitz is None:
            raise ValidationError("profile exp2 needs a known Lipschitz constant")
        top = 2.0 / oracle.lipschitz
        return dict(mu=0.4, nu=0.9, h_lo=1e-6, gamma0_init=top, h_hi=top, theta=0.7, tau=1.5, eta=1.9, epsilon=1e-3)
    raise ValidationError(f"unknown profile {profile!r} (expected exp1 or exp2)")


_LS_KEYS = ("mu", "nu", "theta", "tau", "gamma0_init", "h_lo", "h_hi")


@dataclass
class ExperimentSpec:
    problem: Problem = Problem.QUADRATIC
    n: int = 10
    seed: int = 0
    cond: float = 10.0
    algorithm: Algorithm = Algorithm.IPC_ADAPTIVE
    beta: Optional[float] = None
    beta_list: Sequence[float] = ()
    eta: Optional[float] = None
    h: Optional[float] = None
    profile: Optional[str] = None
    epsilon: Optional[float] = None
    max_iters: int = DEFAULT_MAX_ITERS
    trapezoid_mode: bool = False
    output_path: Optional[str] = None
    problem_file: Optional[str] = None
    # explicit line-search overrides, keyed like LineSearchParams fields
    line_search: dict = field(default_factory=dict)


def build_oracle(spec: ExperimentSpec) -> GradientOracle:
    if spec.problem_file:
        oracle, _ = hio.load_problem(spec.problem_file)
        return oracle
    problem = Problem(spec.problem)
    if problem is Problem.FRACTIONAL:
        return make_fractional(spec.n, spec.seed)
    if problem is Problem.ARCTAN_QUADRATIC:
        return make_arctan_quadratic(spec.n, spec.seed)
    return make_quadratic(spec.n, spec.cond, spec.seed)


def build_config(spec: ExperimentSpec, oracle: GradientOracle, beta: Optional[float] = None) -> SolverConfig:
    """Resolve profile defaults, explicit overrides and beta into a config."""
    alg = Algorithm(spec.algorithm)
    profile = spec.profile
    if profile is None and alg is not Algorithm.IPC_CONSTANT:
        profile = "exp1" if alg is Algorithm.IPC_ADAPTIVE else "exp2"
    params = profile_params(profile, oracle) if profile else {}
    params.update({k: v for k, v in spec.line_search.items() if v is not None})

    beta = spec.beta if beta is None else beta
    if beta is None:
        raise ValidationError("no beta given")
    eta = spec.eta if spec.eta is not None else params.get("eta", 1.0)
    epsilon = spec.epsilon if spec.epsilon is not None else params.get("epsilon", 1e-3)

    h = spec.h
    if alg is Algorithm.IPC_CONSTANT and h is None:
        if oracle.lipschitz is None:
            raise ValidationError("IpcConstant needs --h or an oracle with known L")
        h = 0.9 / oracle.lipschitz

    ls = None
    if alg is not Algorithm.IPC_CONSTANT:
        ls = LineSearchParams(**{k: float(params[k]) for k in _LS_KEYS})

    return SolverConfig(
        algorithm=alg,
        beta=float(beta),
        eta=float(eta),
        h_const=None if h is None else float(h),
        line_search=ls,
        epsilon=float(epsilon),
        max_iters=int(spec.max_iters),
        trapezoid_mode=bool(spec.trapezoid_mode),
    )


def trace_meta(spec: ExperimentSpec, oracle: GradientOracle, cfg: SolverConfig) -> dict:
    meta = {
        "format": "ipcopt-trace/1",
        "problem": oracle.name,
        "n": oracle.dim,
        "seed": spec.seed,
    }
    if spec.problem_file:
        meta["problem_file"] = spec.problem_file
    if Problem(spec.problem) is Problem.QUADRATIC and not spec.problem_file:
        meta["cond"] = hio.fmt(spec.cond)
    meta.update(
        algorithm=cfg.algorithm.value,
        beta=hio.fmt(cfg.beta),
        eta=hio.fmt(cfg.eta),
        h=hio.fmt(cfg.h_const),
        epsilon=hio.fmt(cfg.epsilon),
        max_iters=cfg.max_iters,
        trapezoid_mode=hio.fmt(cfg.trapezoid_mode),
    )
    if cfg.line_search is not None:
        for k in _LS_KEYS:
            meta[k] = hio.fmt(getattr(cfg.line_search, k))
    if oracle.lipschitz is not None:
        meta["lipschitz"] = hio.fmt(oracle.lipschitz)
    return meta


def run_single(spec: ExperimentSpec, oracle: Optional[GradientOracle] = None):
    """Build the oracle, run the solver, write the trace, verify if possible.

    Returns ``(trace, report)``; ``report`` is None when the oracle has no
    known minimizer.
    """
    oracle = oracle if oracle is not None else build_oracle(spec)
    cfg = build_config(spec, oracle)
    trace = solve(oracle, cfg)
    report = verify_trace(trace, oracle, cfg) if oracle.known_solution is not None else None
    if spec.output_path:
        hio.write_trace(spec.output_path, trace, trace_meta(spec, oracle, cfg))
    return trace, report


@dataclass
class SweepRow:
    beta: float
    status: str
    iterations: int = 0
    grad_evals: int = 0
    final_grad_norm: float = float("nan")
    report: Optional[VerificationReport] = None
    error: str = ""
    epsilon: float = 1e-3

    @property
    def flagged(self) -> bool:
        return self.status != Status.CONVERGED.value or not self.final_grad_norm < self.epsilon


@dataclass
class SweepReport:
    rows: list
    meta: dict = field(default_factory=dict)

    @property
    def argmin_beta(self) -> Optional[float]:
        ok = [r for r in self.rows if r.status == Status.CONVERGED.value]
        if not ok:
            return None
        return min(ok, key=lambda r: (r.iterations, r.beta)).beta

    def iterations(self) -> dict:
        return {r.beta: r.iterations for r in self.rows}


def _threads() -> int:
    raw = os.environ.get("IPC_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def run_sweep(spec: ExperimentSpec, oracle: Optional[GradientOracle] = None) -> SweepReport:
    """One run per beta from the same oracle and starting point."""
    betas = sorted(float(b) for b in spec.beta_list)
    if not betas:
        raise ValidationError("beta_list is empty")
    oracle = oracle if oracle is not None else build_oracle(spec)
    # fail fast on the whole sweep before any run starts
    configs = [build_config(spec, oracle, beta=b) for b in betas]
    for cfg in configs:
        cfg.validate(oracle)

    def one(cfg: SolverConfig) -> SweepRow:
        try:
            trace = solve(oracle, cfg)
        except IpcError as exc:
            log.warning("beta=%s failed: %s", cfg.beta, exc)
            return SweepRow(beta=cfg.beta, status=type(exc).__name__, error=str(exc), epsilon=cfg.epsilon)
        report = verify_trace(trace, oracle, cfg) if oracle.known_solution is not None else None
        return SweepRow(
            beta=cfg.beta,
            status=trace.status.value,
            iterations=trace.iterations,
            grad_evals=trace.total_grad_evals,
            final_grad_norm=trace.final_grad_norm,
            report=report,
            epsilon=cfg.epsilon,
        )

    workers = min(_threads(), len(configs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, configs))
    else:
        rows = [one(c) for c in configs]

    meta = trace_meta(spec, oracle, configs[0])
    meta.pop("beta")
    report = SweepReport(rows=rows, meta=meta)
    if spec.output_path:
        write_sweep(spec.output_path, report)
    return report


SWEEP_COLUMNS = [
    "beta", "status", "iterations", "grad_evals", "final_grad_norm",
    "fejer_ok", "ergodic_ok", "h_floor_ok", "alpha_floor_ok", "flagged", "error",
]


def sweep_to_csv(report: SweepReport, timestamp: Optional[str] = None) -> str:
    buf = io.StringIO()
    stamp = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    buf.write(f"# generated={stamp}\n")
    for key, value in report.meta.items():
        buf.write(f"# {key}={value}\n")
    buf.write(f"# argmin_beta={hio.fmt(report.argmin_beta)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in report.rows:
        rep = r.report
        flags = [None] * 4 if rep is None else [rep.fejer_ok, rep.ergodic_ok, rep.h_floor_ok, rep.alpha_floor_ok]
        writer.writerow(
            [hio.fmt(r.beta), r.status, r.iterations, r.grad_evals, hio.fmt(r.final_grad_norm)]
            + [hio.fmt(f) for f in flags]
            + [hio.fmt(r.flagged), r.error]
        )
    return buf.getvalue()


def write_sweep(path, report: SweepReport) -> None:
    hio.atomic_write_text(path, sweep_to_csv(report))


DEFAULT_ORDER_STEPS = (0.1, 0.05, 0.025, 0.0125)


def run_order_study(scheme_list=None, T: float = 1.0, h_list=DEFAULT_ORDER_STEPS, oracle=None, output_path=None):
    """Estimated global error order per scheme on a closed-form quadratic flow.

    Defaults to the scalar flow ``x' = -x``.
    """
    if oracle is None:
        oracle = make_quadratic(1, 1.0, 0)
    kinds = [SchemeKind(s) for s in (scheme_list or list(SchemeKind))]
    slopes = {k.value: estimate_order(FlowScheme(k), oracle, T, h_list) for k in kinds}
    if output_path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scheme", "slope"])
        for name, slope in slopes.items():
            writer.writerow([name, hio.fmt(slope)])
        hio.atomic_write_text(output_path, buf.getvalue())
    return slopes
