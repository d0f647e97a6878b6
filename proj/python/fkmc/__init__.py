"""Backward Feynman-Kac Monte-Carlo solver for linear parabolic PDEs."""

from ._fkmc import (
    BinnedSolution,
    EndpointSet,
    Expression,
    GridSolution,
    ParseError,
    PointEstimate,
    Problem,
    SpecFileError,
    ValidationError,
    compare_methods,
    dt_scaling_study,
    evaluate_with_endpoints,
    fd_solve,
    gaussian_oracle,
    n_scaling_study,
    quadratic_variation_experiment,
    solve_forward,
    solve_grid,
    solve_point,
    trace_endpoints,
)

__all__ = [
    "BinnedSolution",
    "EndpointSet",
    "Expression",
    "GridSolution",
    "ParseError",
    "PointEstimate",
    "Problem",
    "SpecFileError",
    "ValidationError",
    "compare_methods",
    "dt_scaling_study",
    "evaluate_with_endpoints",
    "fd_solve",
    "gaussian_oracle",
    "n_scaling_study",
    "quadratic_variation_experiment",
    "solve_forward",
    "solve_grid",
    "solve_point",
    "trace_endpoints",
]
