"""One-step discretizations of the gradient flow ``x' = -grad f(x)`` and an
empirical global-error-order estimate on quadratics with closed-form flows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import GradientOracle, IpcError, ValidationError


class NoConvergence(IpcError):
    """An implicit stage did not reach its fixed-point tolerance."""


class SchemeKind(str, enum.Enum):
    EXPLICIT_EULER = "ExplicitEuler"
    IMPLICIT_EULER = "ImplicitEuler"
    MIDPOINT = "Midpoint"
    TRAPEZOIDAL = "Trapezoidal"
    EXPLICIT_TRAPEZOIDAL = "ExplicitTrapezoidal"


IMPLICIT_KINDS = {SchemeKind.IMPLICIT_EULER, SchemeKind.MIDPOINT, SchemeKind.TRAPEZOIDAL}

# h*L above this makes the implicit stages' fixed-point iteration too slow
# or divergent; explicit schemes have no inner solve and are not gated
MAX_HL = 0.5


@dataclass(frozen=True)
class FlowScheme:
    kind: SchemeKind
    tol: float = 1e-12
    max_inner: int = 200


def _fixed_point(update, y0, tol, max_inner):
    y = y0
    for _ in range(max_inner):
        y_new = update(y)
        if np.linalg.norm(y_new - y) <= tol * max(1.0, np.linalg.norm(y_new)):
            return y_new
        y = y_new
    raise NoConvergence(f"fixed-point iteration did not reach tol={tol} in {max_inner} steps")


def flow_step(scheme: FlowScheme, oracle: GradientOracle, x, h: float) -> np.ndarray:
    if not h > 0:
        raise ValidationError(f"step must be positive, got {h}")
    kind = SchemeKind(scheme.kind)
    if kind in IMPLICIT_KINDS and oracle.lipschitz is not None and h * oracle.lipschitz > MAX_HL:
        raise ValidationError(f"h*L = {h * oracle.lipschitz} exceeds {MAX_HL} for an implicit scheme")
    grad = oracle.eval_grad
    g = grad(x)

    if kind is SchemeKind.EXPLICIT_EULER:
        return x - h * g
    if kind is SchemeKind.EXPLICIT_TRAPEZOIDAL:
        z = x - h * g
        gz = grad(z)
        return x - (0.5 * h) * (g + gz)
    if kind is SchemeKind.IMPLICIT_EULER:
        return _fixed_point(lambda y: x - h * grad(y), x - h * g, scheme.tol, scheme.max_inner)
    if kind is SchemeKind.MIDPOINT:
        # z = (x_next + x)/2 solves z = x - (h/2) grad(z)
        z = _fixed_point(lambda y: x - 0.5 * h * grad(y), x - 0.5 * h * g, scheme.tol, scheme.max_inner)
        return 2 * z - x
    # trapezoidal
    return _fixed_point(lambda y: x - 0.5 * h * (g + grad(y)), x - h * g, scheme.tol, scheme.max_inner)


def exact_quadratic_flow(oracle: GradientOracle, x0, t):
    """Closed-form flow of a diagonal quadratic oracle at time ``t``."""
    try:
        H = oracle.data["hessian_diag"]
        x_star = oracle.data["x_star"]
    except KeyError:
        raise ValidationError("order estimation needs a diagonal quadratic oracle with a closed-form flow") from None
    return x_star + np.exp(-H * t) * (np.asarray(x0) - x_star)


def global_error(scheme: FlowScheme, oracle: GradientOracle, T: float, h: float, x0=None) -> float:
    """``max_k ||x^k - x(t_k)||`` over the grid ``t_k = k*h`` up to ``T``."""
    x0 = np.asarray(oracle.x0 if x0 is None else x0, dtype=float)
    steps = int(round(T / h))
    x = x0
    err = 0.0
    for k in range(1, steps + 1):
        x = flow_step(scheme, oracle, x, h)
        err = max(err, float(np.linalg.norm(x - exact_quadratic_flow(oracle, x0, k * h))))
    return err


def estimate_order(scheme: FlowScheme, oracle: GradientOracle, T: float, h_list, x0=None) -> float:
    """Least-squares slope of ``log E(h)`` against ``log h``."""
    h_list = np.asarray(h_list, dtype=float)
    if h_list.size < 3:
        raise ValidationError("need at least three step sizes")
    if np.any(np.diff(h_list) >= 0):
        raise ValidationError("step sizes must be strictly decreasing")
    exact_quadratic_flow(oracle, np.zeros(oracle.dim), 0.0)
    errors = np.array([global_error(scheme, oracle, T, h, x0) for h in h_list])
    slope, _ = np.polyfit(np.log(h_list), np.log(errors), 1)
    return float(slope)
