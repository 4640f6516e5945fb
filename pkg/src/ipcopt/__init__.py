"""Prediction-correction first-order methods with a tunable adjustment
coefficient beta, benchmark problems, and gradient-flow discretizations."""

from .core import (
    Algorithm,
    ContractionConstants,
    ConvexityClass,
    DomainError,
    GradientOracle,
    InternalError,
    IpcError,
    IterationState,
    LineSearchParams,
    LineSearchStall,
    SolverConfig,
    StationaryPoint,
    ValidationError,
    alpha_k,
    beta_lower_bound_adaptive,
    beta_lower_bound_constant,
    contraction_constants,
    finite_difference_grad,
    ipc_step,
)
from .gradient_flow import FlowScheme, NoConvergence, SchemeKind, estimate_order, flow_step
from .problems import make_arctan_quadratic, make_fractional, make_quadratic
from .solvers import (
    IterationRecord,
    LineSearchOutcome,
    MissingSolution,
    RunTrace,
    Status,
    VerificationReport,
    adaptive_initial_step,
    line_search,
    solve,
    solve_convex_ipc,
    solve_ipc_adaptive,
    solve_ipc_constant,
    verify_trace,
)

__version__ = "0.1.0"
