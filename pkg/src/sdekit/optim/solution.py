"""Solving LpModels and reading results back into asset/hour tables."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..model import Network, flex_category
from ..timeseries import block_average
from .lp import LpModel
from .solver import OPTIMAL, HighsSolver, SolverConfigError

DEFAULT_TOL = 1e-6


@dataclass(eq=False)
class Solution:
    """Primal and dual results of one solve.

    Hourly tables are indexed by hour of the weather year; powers in MW,
    prices in EUR/MWh. ``capacities`` maps ``(asset_id, attribute)`` to MW
    (``p_nom``, ``charger``, ``discharger``) or MWh (``energy``).
    """

    status: str
    mode: str
    label: str
    objective: float = np.nan
    capacities: dict = field(default_factory=dict)
    dispatch: pd.DataFrame | None = None
    charge: pd.DataFrame | None = None
    discharge: pd.DataFrame | None = None
    soc: pd.DataFrame | None = None
    flows: pd.DataFrame | None = None
    duals_balance: pd.DataFrame | None = None
    dual_co2: float | None = None
    unserved: pd.DataFrame | None = None
    demand: pd.DataFrame | None = None
    duals: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def capacity_table(self) -> pd.DataFrame:
        rows = [(a, attr, v) for (a, attr), v in self.capacities.items()]
        return pd.DataFrame(rows, columns=["asset", "attribute", "value"])


def _frame(values, ids, resolution=1):
    arr = np.asarray(values).reshape(len(ids), -1)
    if resolution > 1:
        arr = np.repeat(arr, resolution, axis=1)
    return pd.DataFrame(arr.T, columns=list(ids))


def _hourly_soc(values, ids, resolution):
    """Expand snapshot end-of-period storage levels to hours, filling linearly."""
    end = np.asarray(values).reshape(len(ids), -1)
    if resolution == 1:
        return pd.DataFrame(end.T, columns=list(ids))
    start = np.roll(end, 1, axis=1)
    frac = np.arange(1, resolution + 1) / resolution
    arr = start[:, :, None] + (end - start)[:, :, None] * frac
    return pd.DataFrame(arr.reshape(len(ids), -1).T, columns=list(ids))


def solve(model: LpModel, tol: float = DEFAULT_TOL, solver=None) -> Solution:
    """Solve ``model`` and return a :class:`Solution`.

    Non-optimal outcomes are returned with their status and empty tables,
    not raised. On optimal solves ``stats`` records the balance residual and
    the primal-dual objective gap.
    """
    solver = solver or HighsSolver()
    if not getattr(solver, "supports_duals", False):
        raise SolverConfigError(f"solver {getattr(solver, 'name', solver)!r} does not return dual values")
    raw = solver.solve(model.c, model.A_eq, model.b_eq, model.A_ub, model.b_ub,
                       model.lb, model.ub, tol)
    network, series = model.network, model.series
    stats = {"solver": solver.name, "runtime_s": raw.runtime, "iterations": raw.iterations,
             "message": raw.message, **model.summary()}
    if raw.status != OPTIMAL:
        return Solution(status=raw.status, mode=model.mode, label=series.label, stats=stats)

    x = raw.x
    V = model.variables

    def values(name):
        blk = V.get(name)
        if blk is None:
            return None
        return x[blk.index()]

    hours = series.n_hours
    res = model.resolution
    bus_ids = network.bus_ids
    demand = pd.DataFrame({b: np.repeat(block_average(np.asarray(series.demand[b]), res), res)
                           for b in bus_ids})

    capacities = {}
    gen_cap = dict(zip(V["gen_cap"].ids, values("gen_cap"))) if "gen_cap" in V else {}
    for g in network.generators:
        fallback = model.fixed.get((g.id, "p_nom"), g.p_nom_fixed) if g.extendable else g.p_nom_fixed
        capacities[(g.id, "p_nom")] = float(gen_cap.get(g.id, fallback))
    for attr in ("charger", "discharger", "energy"):
        built = dict(zip(V[f"sto_{attr}_cap"].ids, values(f"sto_{attr}_cap"))) if f"sto_{attr}_cap" in V else {}
        for s in network.storage_systems:
            fallback = getattr(s, "fixed_" + attr)
            if s.extendable:
                fallback = model.fixed.get((s.id, attr), fallback)
            capacities[(s.id, attr)] = float(built.get(s.id, fallback))
    line_cap = dict(zip(V["line_cap"].ids, values("line_cap"))) if "line_cap" in V else {}
    for ln in network.lines:
        capacities[(ln.id, "p_nom")] = float(line_cap.get(ln.id, ln.p_nom_existing))

    gen_ids = [g.id for g in network.generators]
    sto_ids = [s.id for s in network.storage_systems]
    line_ids = [ln.id for ln in network.lines]
    empty = lambda ids: pd.DataFrame(np.zeros((hours, len(ids))), columns=ids)

    dispatch = _frame(values("gen_p"), gen_ids, res) if gen_ids else empty([])
    charge = _frame(values("sto_charge"), sto_ids, res) if sto_ids else empty([])
    discharge = _frame(values("sto_discharge"), sto_ids, res) if sto_ids else empty([])
    soc = _hourly_soc(values("sto_soc"), sto_ids, res) if sto_ids else empty([])
    flows = _frame(values("flow"), line_ids, res) if line_ids else empty([])
    unserved = _frame(values("shed"), bus_ids, res) if "shed" in V else empty(bus_ids)

    duals = {name: raw.y_eq[blk.index()] for name, blk in model.eq_rows.items()}
    duals.update({name: raw.y_ub[blk.index()] for name, blk in model.ub_rows.items()})
    # balance duals are per snapshot; divide by its length for EUR/MWh
    lam = _frame(duals["balance"] / res, bus_ids, res)
    dual_co2 = float(duals["co2"][0]) if "co2" in duals else None

    # quality checks
    r_eq = model.A_eq @ x - model.b_eq
    r_ub = np.maximum(model.A_ub @ x - model.b_ub, 0.0) if len(model.b_ub) else np.zeros(0)
    bal = model.eq_rows["balance"]
    dual_obj = float(model.b_eq @ raw.y_eq + model.b_ub @ raw.y_ub
                     + _finite_dot(model.lb, raw.z_lower) + _finite_dot(model.ub, raw.z_upper))
    stats.update(
        balance_residual=float(np.abs(r_eq[bal.index()]).max()) if bal.size else 0.0,
        primal_residual=float(max(np.abs(r_eq).max(initial=0.0), r_ub.max(initial=0.0))),
        dual_objective=dual_obj,
        duality_gap=abs(raw.objective - dual_obj),
        peak_load=float(demand.sum(axis=1).max()) if len(demand) else 0.0,
    )
    return Solution(
        status=raw.status, mode=model.mode, label=series.label, objective=raw.objective,
        capacities=capacities, dispatch=dispatch, charge=charge, discharge=discharge, soc=soc,
        flows=flows, duals_balance=lam, dual_co2=dual_co2, unserved=unserved, demand=demand,
        duals=duals, stats=stats,
    )


def _finite_dot(bound, z):
    mask = np.isfinite(bound) & (z != 0)
    return float(bound[mask] @ z[mask])


def revenue_ledger(solution: Solution, network: Network, hours=None) -> pd.DataFrame:
    """Market revenue, operating and capital cost per asset.

    Revenue is nodal price times net injection. ``hours`` optionally
    restricts revenue and operating cost to a subset of hours (boolean mask
    or index array); capital cost always covers the full year and is only
    charged for extendable (newly built) assets.
    """
    lam = solution.duals_balance
    n = len(lam)
    mask = np.zeros(n, dtype=bool)
    if hours is None:
        mask[:] = True
    else:
        mask[np.asarray(hours)] = True
    rows = []
    for g in network.generators:
        p = solution.dispatch[g.id].to_numpy()
        price = lam[g.bus].to_numpy()
        cap = solution.capacities[(g.id, "p_nom")]
        rows.append(dict(
            asset=g.id, kind="generator", category=flex_category(g), bus=g.bus,
            revenue=float(price[mask] @ p[mask]),
            operating_cost=float(g.marginal_cost * p[mask].sum()),
            capital_cost=float(g.capital_cost * cap) if g.extendable else 0.0,
            extendable=g.extendable, capacity=cap,
        ))
    for s in network.storage_systems:
        net = (solution.discharge[s.id] - solution.charge[s.id]).to_numpy()
        price = lam[s.bus].to_numpy()
        caps = {a: solution.capacities[(s.id, a)] for a in ("charger", "discharger", "energy")}
        capex = (s.charger_cost * caps["charger"] + s.discharger_cost * caps["discharger"]
                 + s.energy_cost * caps["energy"])
        rows.append(dict(
            asset=s.id, kind="storage", category=flex_category(s), bus=s.bus,
            revenue=float(price[mask] @ net[mask]), operating_cost=0.0,
            capital_cost=float(capex) if s.extendable else 0.0,
            extendable=s.extendable, capacity=caps["discharger"],
        ))
    for ln in network.lines:
        f = solution.flows[ln.id].to_numpy()
        spread = (lam[ln.bus1] - lam[ln.bus0]).to_numpy()
        rows.append(dict(
            asset=ln.id, kind="line", category="transmission", bus=f"{ln.bus0}-{ln.bus1}",
            revenue=float(spread[mask] @ f[mask]), operating_cost=0.0, capital_cost=0.0,
            extendable=ln.extendable, capacity=solution.capacities[(ln.id, "p_nom")],
        ))
    out = pd.DataFrame(rows).set_index("asset") if rows else pd.DataFrame()
    if len(out):
        out["profit"] = out["revenue"] - out["operating_cost"] - out["capital_cost"]
    return out


def expanded_assets(solution: Solution, network: Network, atol: float = 1e-6) -> list[str]:
    """Extendable generators and stores built above their lower bound of zero."""
    out = [g.id for g in network.generators
           if g.extendable and solution.capacities[(g.id, "p_nom")] > atol]
    out += [s.id for s in network.storage_systems
            if s.extendable and any(solution.capacities[(s.id, a)] > atol
                                    for a in ("charger", "discharger", "energy"))]
    return out


def _write_csv(frame: pd.DataFrame, path: Path, index_label="hour"):
    frame.to_csv(path, index=True, index_label=index_label, float_format="%.10g",
                 lineterminator="\n")


def export_solution(solution: Solution, directory: str | Path) -> list[Path]:
    """Write capacities, hourly tables and a JSON summary into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    summary = {
        "label": solution.label, "mode": solution.mode, "status": solution.status,
        "objective_eur": solution.objective, "dual_co2_eur_per_t": solution.dual_co2,
        "stats": {k: v for k, v in solution.stats.items() if k != "runtime_s"},
    }
    path = d / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
    written.append(path)
    if not solution.optimal:
        return written
    cap = solution.capacity_table()
    path = d / "capacities.csv"
    # full precision: validation runs read these back as fixed capacities
    cap.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    written.append(path)
    for name in ("dispatch", "charge", "discharge", "soc", "flows", "unserved", "demand"):
        path = d / f"{name}_mw.csv" if name != "soc" else d / "soc_mwh.csv"
        _write_csv(getattr(solution, name), path)
        written.append(path)
    path = d / "lambda_eur_per_mwh.csv"
    _write_csv(solution.duals_balance, path)
    written.append(path)
    return written


def load_solution(directory: str | Path) -> Solution:
    """Inverse of :func:`export_solution` (per-constraint duals are not kept)."""
    d = Path(directory)
    summary = json.loads((d / "summary.json").read_text())
    sol = Solution(status=summary["status"], mode=summary["mode"], label=summary["label"],
                   objective=summary["objective_eur"], dual_co2=summary["dual_co2_eur_per_t"],
                   stats=summary["stats"])
    if not sol.optimal:
        return sol
    cap = pd.read_csv(d / "capacities.csv", dtype={"asset": str, "attribute": str},
                      float_precision="round_trip")
    sol.capacities = {(a, attr): float(v) for a, attr, v in cap.itertuples(index=False)}
    read = lambda name: pd.read_csv(d / name, index_col=0, float_precision="round_trip")
    sol.dispatch = read("dispatch_mw.csv")
    sol.charge = read("charge_mw.csv")
    sol.discharge = read("discharge_mw.csv")
    sol.soc = read("soc_mwh.csv")
    sol.flows = read("flows_mw.csv")
    sol.unserved = read("unserved_mw.csv")
    sol.demand = read("demand_mw.csv")
    sol.duals_balance = read("lambda_eur_per_mwh.csv")
    return sol
