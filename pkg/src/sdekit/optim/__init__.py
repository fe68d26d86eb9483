"""Capacity expansion and dispatch LPs with nodal price extraction."""
from .lp import DESIGN, VALIDATION, Block, LpModel, build_design, build_validation
from .solution import (
    DEFAULT_TOL,
    Solution,
    expanded_assets,
    export_solution,
    load_solution,
    revenue_ledger,
    solve,
)
from .solver import (
    INFEASIBLE,
    NUMERICAL_FAILURE,
    OPTIMAL,
    UNBOUNDED,
    HighsSolver,
    RawResult,
    SolverConfigError,
)
