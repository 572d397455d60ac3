"""Rate evaluation, max-min precoder design and a grid reference solver."""

from .oracle import grid_directions, grid_oracle_maxmin, oracle_objective
from .rates import (
    PrecoderSet,
    RateReport,
    common_rate,
    common_rate_group,
    group_rates,
    private_rate_group,
    rate_report,
    scheme_objective,
    stack_csit,
)
from .wmmse import SolveResult, SolverConfig, solve_maxmin

__all__ = [
    "PrecoderSet", "RateReport", "SolveResult", "SolverConfig", "common_rate", "common_rate_group",
    "grid_directions", "grid_oracle_maxmin", "group_rates", "oracle_objective", "private_rate_group",
    "rate_report", "scheme_objective", "solve_maxmin", "stack_csit",
]
