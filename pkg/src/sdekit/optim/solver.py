"""Solver backends.

A backend takes the LP in sparse form and returns primal values, duals of
every constraint and of the variable bounds, and a status string. Any
object with ``name``, ``supports_duals`` and ``solve(...)`` matching
:class:`HighsSolver` can be plugged into :func:`sdekit.optim.solve`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"


class SolverConfigError(RuntimeError):
    """The configured backend cannot provide what the caller needs."""


@dataclass
class RawResult:
    status: str
    objective: float
    x: np.ndarray | None
    y_eq: np.ndarray | None
    y_ub: np.ndarray | None
    z_lower: np.ndarray | None
    z_upper: np.ndarray | None
    message: str = ""
    iterations: int = 0
    runtime: float = 0.0


_STATUS = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}


class HighsSolver:
    """HiGHS through :func:`scipy.optimize.linprog`.

    Duals follow the sensitivity convention d(objective)/d(rhs), so a
    ``<=`` row has a non-positive dual in a minimisation.
    """

    name = "highs"
    supports_duals = True

    def __init__(self, method: str = "highs-ds", time_limit: float | None = None):
        self.method = method
        self.time_limit = time_limit

    def solve(self, c, A_eq, b_eq, A_ub, b_ub, lb, ub, tol: float = 1e-6) -> RawResult:
        ftol = min(1e-7, tol * 0.1)
        options = {
            "primal_feasibility_tolerance": ftol,
            "dual_feasibility_tolerance": ftol,
            "presolve": True,
        }
        if self.time_limit:
            options["time_limit"] = self.time_limit
        t0 = time.perf_counter()
        res = linprog(
            c,
            A_ub=A_ub if A_ub.shape[0] else None,
            b_ub=b_ub if A_ub.shape[0] else None,
            A_eq=A_eq if A_eq.shape[0] else None,
            b_eq=b_eq if A_eq.shape[0] else None,
            bounds=np.column_stack([lb, ub]),
            method=self.method,
            options=options,
        )
        runtime = time.perf_counter() - t0
        status = _STATUS.get(res.status, NUMERICAL_FAILURE)
        if status != OPTIMAL:
            return RawResult(status, np.nan, None, None, None, None, res.message,
                             int(getattr(res, "nit", 0)), runtime)

        def marg(part, n):
            return np.asarray(part.marginals) if part is not None and n else np.zeros(n)

        return RawResult(
            status=status,
            objective=float(res.fun),
            x=np.asarray(res.x),
            y_eq=marg(res.eqlin, A_eq.shape[0]),
            y_ub=marg(res.ineqlin, A_ub.shape[0]),
            z_lower=np.asarray(res.lower.marginals),
            z_upper=np.asarray(res.upper.marginals),
            message=res.message,
            iterations=int(res.nit),
            runtime=runtime,
        )
