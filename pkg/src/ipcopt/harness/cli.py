"""Prediction-correction gradient solvers and benchmarks from the command line.

Exit codes: 0 success, 2 validation error, 3 solver non-convergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..core import Algorithm, IpcError, ValidationError
from ..gradient_flow import SchemeKind
from ..problems import make_quadratic
from ..solvers import Status
from . import io as hio
from .experiments import (
    DEFAULT_MAX_ITERS,
    DEFAULT_ORDER_STEPS,
    ExperimentSpec,
    Problem,
    build_oracle,
    run_order_study,
    run_single,
    run_sweep,
)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

_ALGORITHMS = {
    "ipc-constant": Algorithm.IPC_CONSTANT,
    "ipc-adaptive": Algorithm.IPC_ADAPTIVE,
    "convex-ipc": Algorithm.CONVEX_IPC,
}
_PROBLEMS = {"fractional": "fractional", "arctan": "arctan_quadratic", "arctan_quadratic": "arctan_quadratic", "quadratic": "quadratic"}
# line-search overrides accepted from flags and config files
_LS_FLAGS = ("mu", "nu", "theta", "tau", "gamma0", "h_lo", "h_hi")


def _algorithm(value: str) -> Algorithm:
    key = value.lower()
    if key in _ALGORITHMS:
        return _ALGORITHMS[key]
    try:
        return Algorithm(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown algorithm {value!r}") from None


def _problem(value: str) -> str:
    try:
        return _PROBLEMS[value.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown problem {value!r}") from None


def _float_list(value: str):
    return [float(v) for v in value.split(",") if v.strip()]


def _problem_args(p):
    p.add_argument("--problem", type=_problem, help="fractional | arctan | quadratic")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cond", type=float, help="condition number of the quadratic problem")


def _run_args(p):
    _problem_args(p)
    p.add_argument("--problem-file", help="load the problem from a gen-problem file instead")
    p.add_argument("--algorithm", type=_algorithm, help="ipc-constant | ipc-adaptive | convex-ipc")
    p.add_argument("--eta", type=float)
    p.add_argument("--h", type=float, help="fixed step (IpcConstant; fixed-step ConvexIpc)")
    p.add_argument("--profile", choices=["exp1", "exp2"])
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--trapezoid-mode", action="store_true", default=None)
    for name in _LS_FLAGS:
        p.add_argument(f"--{name.replace('_', '-')}", type=float, dest=name)
    p.add_argument("--out")
    p.add_argument("--config", help="key=value file; flags override its values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipcopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one solver configuration")
    _run_args(p)
    p.add_argument("--beta", type=float)

    p = sub.add_parser("sweep", help="run one configuration per beta")
    _run_args(p)
    p.add_argument("--betas", type=_float_list, help="comma-separated beta values")

    p = sub.add_parser("ode-order", help="estimate global error orders of the flow schemes")
    p.add_argument("--schemes", default=",".join(k.value for k in SchemeKind))
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--hs", type=_float_list, default=list(DEFAULT_ORDER_STEPS))
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--cond", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("gen-problem", help="write a generated problem to a file")
    _problem_args(p)
    p.add_argument("--out", required=True)
    return parser


_CONFIG_TYPES = {
    "problem": _problem, "problem_file": str, "n": int, "seed": int, "cond": float,
    "algorithm": _algorithm, "beta": float, "betas": _float_list, "eta": float, "h": float,
    "profile": str, "epsilon": float, "max_iters": int, "out": str,
    "trapezoid_mode": lambda s: s.strip().lower() in {"1", "true", "yes", "on"},
    **{k: float for k in _LS_FLAGS},
}


def _merged(args) -> dict:
    values = {}
    if getattr(args, "config", None):
        for key, raw in hio.read_config(args.config).items():
            if key not in _CONFIG_TYPES:
                raise ValidationError(f"unknown config key {key!r}")
            try:
                values[key] = _CONFIG_TYPES[key](raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ValidationError(f"bad value for {key}: {exc}") from None
    for key, value in vars(args).items():
        if value is not None and key not in {"config", "command", "verbose"}:
            values[key] = value
    return values


def _spec(values: dict) -> ExperimentSpec:
    ls = {("gamma0_init" if k == "gamma0" else k): values[k] for k in _LS_FLAGS if k in values}
    beta_list = values.get("betas") or ()
    return ExperimentSpec(
        problem=Problem(values.get("problem", "quadratic")),
        n=values.get("n", 10),
        seed=values.get("seed", 0),
        cond=values.get("cond", 10.0),
        algorithm=values.get("algorithm", Algorithm.IPC_ADAPTIVE),
        beta=values.get("beta"),
        beta_list=beta_list,
        eta=values.get("eta"),
        h=values.get("h"),
        profile=values.get("profile"),
        epsilon=values.get("epsilon"),
        max_iters=values.get("max_iters", DEFAULT_MAX_ITERS),
        trapezoid_mode=bool(values.get("trapezoid_mode", False)),
        output_path=values.get("out"),
        problem_file=values.get("problem_file"),
        line_search=ls,
    )


def _flags_line(report) -> str:
    if report is None:
        return "verification: skipped (no known solution)"
    return (
        f"verification: fejer_ok={report.fejer_ok} ergodic_ok={report.ergodic_ok} "
        f"h_floor_ok={report.h_floor_ok} alpha_floor_ok={report.alpha_floor_ok}"
    )


def _cmd_solve(args) -> int:
    spec = _spec(_merged(args))
    trace, report = run_single(spec)
    print(f"status: {trace.status.value}")
    print(f"iterations: {trace.iterations}")
    print(f"gradient evaluations: {trace.total_grad_evals}")
    print(f"final grad norm: {trace.final_grad_norm:.6e}")
    print(_flags_line(report))
    if spec.output_path:
        print(f"trace written to {spec.output_path}")
    return EXIT_OK if trace.status is Status.CONVERGED else EXIT_SOLVER


def _cmd_sweep(args) -> int:
    spec = _spec(_merged(args))
    if not spec.beta_list and spec.beta is not None:
        spec.beta_list = [spec.beta]
    report = run_sweep(spec)
    print(f"{'beta':>6} {'status':>16} {'iters':>9} {'grad evals':>11} {'final |g|':>12}")
    for r in report.rows:
        print(f"{r.beta:>6.3g} {r.status:>16} {r.iterations:>9} {r.grad_evals:>11} {r.final_grad_norm:>12.4e}")
    print(f"argmin beta (iterations): {report.argmin_beta}")
    if spec.output_path:
        print(f"sweep written to {spec.output_path}")
    return EXIT_SOLVER if any(r.flagged for r in report.rows) else EXIT_OK


def _cmd_ode_order(args) -> int:
    oracle = make_quadratic(args.n, args.cond, args.seed)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    slopes = run_order_study(schemes, args.T, args.hs, oracle=oracle, output_path=args.out)
    for name, slope in slopes.items():
        print(f"{name:>20} {slope:.4f}")
    return EXIT_OK


def _cmd_gen_problem(args) -> int:
    spec = ExperimentSpec(
        problem=Problem(args.problem or "quadratic"),
        n=args.n if args.n is not None else 10,
        seed=args.seed if args.seed is not None else 0,
        cond=args.cond if args.cond is not None else 10.0,
    )
    oracle = build_oracle(spec)
    params = {"cond": spec.cond} if spec.problem is Problem.QUADRATIC else {}
    hio.save_problem(args.out, oracle, spec.problem.value, spec.seed, **params)
    print(f"{spec.problem.value} problem (n={spec.n}, seed={spec.seed}) written to {args.out}")
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "sweep": _cmd_sweep, "ode-order": _cmd_ode_order, "gen-problem": _cmd_gen_problem}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IpcError as exc:
        print(f"solver error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        # malformed files and similar
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
