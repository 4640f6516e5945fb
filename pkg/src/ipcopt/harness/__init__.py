"""Experiment harness and command-line interface."""

from .experiments import (
    ExperimentSpec,
    Problem,
    SweepReport,
    SweepRow,
    build_config,
    build_oracle,
    profile_params,
    run_order_study,
    run_single,
    run_sweep,
)

__all__ = [
    "ExperimentSpec",
    "Problem",
    "SweepReport",
    "SweepRow",
    "build_config",
    "build_oracle",
    "profile_params",
    "run_order_study",
    "run_single",
    "run_sweep",
]
