"""Sparse LP assembly for the design (capacity expansion) and validation
(fixed capacity dispatch with load shedding) problems.

Variables and constraints are registered in named blocks so that results can
be mapped back to assets and hours. Constraint conventions::

    A_eq x == b_eq
    A_ub x <= b_ub
    lb <= x <= ub

Balance rows are written as ``supply - withdrawal == demand`` so that their
duals are the nodal prices in EUR/MWh.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..model import ConfigError, Network, validate_network
from ..timeseries import WeatherYearSeries, block_average

DESIGN = "design"
VALIDATION = "validation"


@dataclass
class Block:
    start: int
    ids: list[str]
    n_hours: int | None  # None for scalar-per-asset blocks

    @property
    def size(self) -> int:
        return len(self.ids) * (self.n_hours or 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (len(self.ids), self.n_hours) if self.n_hours else (len(self.ids),)

    def index(self) -> np.ndarray:
        return self.start + np.arange(self.size).reshape(self.shape)


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []
        self.rhs: list[np.ndarray] = []
        self.n = 0

    def add(self, rows, cols, vals):
        rows, cols = np.broadcast_arrays(np.asarray(rows), np.asarray(cols))
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape)
        self.rows.append(rows.ravel())
        self.cols.append(cols.ravel())
        self.vals.append(vals.ravel())

    def matrix(self, n_cols) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((self.n, n_cols))
        return sp.coo_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n, n_cols),
        ).tocsr()


@dataclass
class LpModel:
    """A linear program in sparse triplet form plus block bookkeeping."""

    mode: str
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    variables: dict[str, Block]
    eq_rows: dict[str, Block]
    ub_rows: dict[str, Block]
    network: Network
    series: WeatherYearSeries
    diagnostics: list[str] = field(default_factory=list)
    fixed: dict = field(default_factory=dict)
    resolution: int = 1  # hours per snapshot

    @property
    def n_vars(self) -> int:
        return len(self.c)

    def var(self, name: str) -> Block:
        return self.variables[name]

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "variables": self.n_vars,
            "eq_rows": len(self.b_eq),
            "ub_rows": len(self.b_ub),
            "nonzeros": int(self.A_eq.nnz + self.A_ub.nnz),
        }


class _Builder:
    def __init__(self, network: Network, series: WeatherYearSeries, mode: str, resolution: int):
        self.network = network
        self.series = series
        self.mode = mode
        self.T = series.n_hours // resolution
        self.resolution = resolution
        self.c, self.lb, self.ub = [], [], []
        self.n_vars = 0
        self.variables: dict[str, Block] = {}
        self.eq, self.ubm = _Triplets(), _Triplets()
        self.eq_rows: dict[str, Block] = {}
        self.ub_rows: dict[str, Block] = {}
        self.diagnostics: list[str] = []

    def add_vars(self, name, ids, hourly, lb=0.0, ub=np.inf, cost=0.0) -> np.ndarray:
        block = Block(self.n_vars, list(ids), self.T if hourly else None)
        shape = block.shape
        self.lb.append(np.broadcast_to(np.asarray(lb, dtype=float), shape).ravel())
        self.ub.append(np.broadcast_to(np.asarray(ub, dtype=float), shape).ravel())
        self.c.append(np.broadcast_to(np.asarray(cost, dtype=float), shape).ravel())
        self.n_vars += block.size
        self.variables[name] = block
        return block.index()

    def add_rows(self, kind, name, ids, hourly, rhs) -> np.ndarray:
        trip, reg = (self.eq, self.eq_rows) if kind == "eq" else (self.ubm, self.ub_rows)
        block = Block(trip.n, list(ids), self.T if hourly else None)
        trip.rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), block.shape).ravel())
        trip.n += block.size
        reg[name] = block
        return block.index()

    def hourly_copy(self, name, cap) -> np.ndarray:
        """Per-hour copies of scalar capacity variables, chained by equalities.

        Coupling every hour to one capacity column creates dense columns that
        slow interior-point solvers badly; the chain keeps the matrix sparse.
        """
        ids = [f"{i}" for i in range(len(cap))]
        copy = self.add_vars(name, ids, True, -np.inf, np.inf)
        rows = self.add_rows("eq", name + "_link", ids, True, 0.0)
        self.eq.add(rows, copy, 1.0)
        self.eq.add(rows[:, 1:], copy[:, :-1], -1.0)
        self.eq.add(rows[:, 0], cap, -1.0)
        return copy

    def model(self) -> LpModel:
        cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0)
        return LpModel(
            mode=self.mode,
            c=cat(self.c), lb=cat(self.lb), ub=cat(self.ub),
            A_eq=self.eq.matrix(self.n_vars), b_eq=cat(self.eq.rhs),
            A_ub=self.ubm.matrix(self.n_vars), b_ub=cat(self.ubm.rhs),
            variables=self.variables, eq_rows=self.eq_rows, ub_rows=self.ub_rows,
            network=self.network, series=self.series, diagnostics=self.diagnostics,
            resolution=self.resolution,
        )


def _check_inputs(network: Network, series: WeatherYearSeries):
    problems = validate_network(network, series.profile_ids())
    missing = set(network.bus_ids) - set(series.demand)
    problems += [f"series {series.label}: no demand for bus {b!r}" for b in sorted(missing)]
    if problems:
        raise ConfigError("; ".join(problems))


def _availability(series: WeatherYearSeries, gens) -> np.ndarray:
    T = series.n_hours
    out = np.ones((len(gens), T))
    for i, g in enumerate(gens):
        if g.cf_profile:
            out[i] = series.profile(g.cf_profile)
    return out


def _storage_inflow(series: WeatherYearSeries, stores) -> np.ndarray:
    out = np.zeros((len(stores), series.n_hours))
    for i, s in enumerate(stores):
        if s.inflow_profile:
            out[i] = series.profile(s.inflow_profile)
    return out


def _build(network: Network, series: WeatherYearSeries, mode: str, fixed=None,
           resolution: int = 1) -> LpModel:
    _check_inputs(network, series)
    if resolution < 1 or series.n_hours % resolution:
        raise ConfigError(f"resolution {resolution} h does not divide {series.n_hours} hours")
    b = _Builder(network, series, mode, resolution)
    T = b.T
    w = float(resolution)  # hours represented by each snapshot
    sc = network.scenario
    bus_pos = {bus: i for i, bus in enumerate(network.bus_ids)}
    hours = np.arange(T)
    demand = block_average(np.vstack([series.demand[bus] for bus in network.bus_ids]), resolution)

    gens = list(network.generators)
    stores = list(network.storage_systems)
    lines = list(network.lines)
    design = mode == DESIGN

    def built(asset, attr, default):
        if design or not asset.extendable:
            return default
        return float(fixed[(asset.id, attr)])

    # generators
    avail = block_average(_availability(series, gens), resolution)
    ext_g = [i for i, g in enumerate(gens) if g.extendable and design]
    fixed_cap = np.array([built(g, "p_nom", g.p_nom_fixed) for g in gens], dtype=float)
    with np.errstate(invalid="ignore"):
        gen_ub = np.where(avail > 0, avail * fixed_cap[:, None], 0.0)
    gen_ub[ext_g] = np.inf
    p = b.add_vars("gen_p", [g.id for g in gens], True, 0.0, gen_ub,
                   w * np.array([g.marginal_cost for g in gens])[:, None])
    if ext_g:
        cap = b.add_vars("gen_cap", [gens[i].id for i in ext_g], False, 0.0, np.inf,
                         [gens[i].capital_cost for i in ext_g])
        rows = b.add_rows("ub", "gen_cap_limit", [gens[i].id for i in ext_g], True, 0.0)
        b.ubm.add(rows, p[ext_g], 1.0)
        b.ubm.add(rows, b.hourly_copy("gen_cap_h", cap), -avail[ext_g])

    # storage
    if stores:
        ids = [s.id for s in stores]
        ext_s = [i for i, s in enumerate(stores) if s.extendable and design]
        caps = {
            attr: np.array([built(s, attr, getattr(s, "fixed_" + attr)) for s in stores], dtype=float)
            for attr in ("charger", "discharger", "energy")
        }
        for attr in caps:
            caps[attr][ext_s] = np.inf
        ch = b.add_vars("sto_charge", ids, True, 0.0, caps["charger"][:, None])
        dis = b.add_vars("sto_discharge", ids, True, 0.0, caps["discharger"][:, None])
        soc = b.add_vars("sto_soc", ids, True, 0.0, caps["energy"][:, None])
        inflow = block_average(_storage_inflow(series, stores), resolution)
        has_inflow = [i for i, s in enumerate(stores) if s.inflow_profile]
        if has_inflow:
            spill = b.add_vars("sto_spill", [ids[i] for i in has_inflow], True)
        eta_c = np.array([s.eta_charge for s in stores])[:, None]
        eta_d = np.array([s.eta_discharge for s in stores])[:, None]
        rows = b.add_rows("eq", "soc_balance", ids, True, w * inflow)
        prev = np.roll(hours, 1)  # cyclic closure
        b.eq.add(rows, soc, 1.0)
        b.eq.add(rows, soc[:, prev], -1.0)
        b.eq.add(rows, ch, -w * eta_c)
        b.eq.add(rows, dis, w / eta_d)
        if has_inflow:
            b.eq.add(rows[has_inflow], spill, w)
        if ext_s:
            ext_ids = [ids[i] for i in ext_s]
            for attr, var, cost_attr in (("charger", ch, "charger_cost"),
                                         ("discharger", dis, "discharger_cost"),
                                         ("energy", soc, "energy_cost")):
                kcap = b.add_vars(f"sto_{attr}_cap", ext_ids, False, 0.0, np.inf,
                                  [getattr(stores[i], cost_attr) for i in ext_s])
                rows = b.add_rows("ub", f"sto_{attr}_limit", ext_ids, True, 0.0)
                b.ubm.add(rows, var[ext_s], 1.0)
                b.ubm.add(rows, b.hourly_copy(f"sto_{attr}_cap_h", kcap), -1.0)

    # transmission
    if lines:
        lids = [ln.id for ln in lines]
        existing = np.array([ln.p_nom_existing for ln in lines], dtype=float)
        ext_l = [i for i, ln in enumerate(lines) if ln.extendable and design]
        flow_cap = existing.copy()
        flow_cap[ext_l] = np.inf
        flow = b.add_vars("flow", lids, True, -flow_cap[:, None], flow_cap[:, None])
        if ext_l:
            ext_ids = [lids[i] for i in ext_l]
            cap_ub = existing[ext_l] if sc.transmission_expansion == 0 else np.inf
            lcap = b.add_vars("line_cap", ext_ids, False, existing[ext_l], cap_ub)
            lcap_h = b.hourly_copy("line_cap_h", lcap)
            for sign, name in ((1.0, "flow_fwd_limit"), (-1.0, "flow_bwd_limit")):
                rows = b.add_rows("ub", name, ext_ids, True, 0.0)
                b.ubm.add(rows, flow[ext_l], sign)
                b.ubm.add(rows, lcap_h, -1.0)
            length = np.array([lines[i].length for i in ext_l])
            volume = float(length @ existing[ext_l])
            row = b.add_rows("ub", "transmission_volume", ["volume"], False,
                             (1.0 + sc.transmission_expansion) * volume)
            b.ubm.add(row[0], lcap, length)

    # shedding
    if not design:
        shed = b.add_vars("shed", network.bus_ids, True, 0.0, demand, w * sc.load_shedding_cost)

    # nodal balance
    bal = b.add_rows("eq", "balance", network.bus_ids, True, demand)
    gbus = np.array([bus_pos[g.bus] for g in gens], dtype=int)
    if gens:
        b.eq.add(bal[gbus], p, 1.0)
    if stores:
        sbus = np.array([bus_pos[s.bus] for s in stores], dtype=int)
        b.eq.add(bal[sbus], dis, 1.0)
        b.eq.add(bal[sbus], ch, -1.0)
    if lines:
        b0 = np.array([bus_pos[ln.bus0] for ln in lines], dtype=int)
        b1 = np.array([bus_pos[ln.bus1] for ln in lines], dtype=int)
        b.eq.add(bal[b0], flow, -1.0)
        b.eq.add(bal[b1], flow, 1.0)
    if not design:
        b.eq.add(bal, shed, 1.0)

    # CO2 cap
    ef = np.array([g.emission_factor for g in gens])
    if np.any(ef > 0):
        emitters = np.flatnonzero(ef > 0)
        row = b.add_rows("ub", "co2", ["co2"], False, (1.0 - sc.co2_reduction) * sc.co2_baseline)
        b.ubm.add(row[0], p[emitters], w * ef[emitters][:, None])

    # national self-supply share
    if sc.equity_share is not None and design:
        countries = sorted({bus.country for bus in network.buses})
        country_of = {bus.id: bus.country for bus in network.buses}
        rows = b.add_rows("ub", "equity", countries, False, 0.0)
        rhs = b.ubm.rhs[-1] = np.zeros(len(countries))
        for k, country in enumerate(countries):
            in_bus = [i for i, bus in enumerate(network.bus_ids) if country_of[bus] == country]
            rhs[k] = -sc.equity_share * w * demand[in_bus].sum()
            g_in = [i for i, g in enumerate(gens) if country_of[g.bus] == country]
            s_in = [i for i, s in enumerate(stores) if country_of[s.bus] == country]
            if g_in:
                b.ubm.add(rows[k], p[g_in], -w)
            if s_in:
                b.ubm.add(rows[k], dis[s_in], -w)
                b.ubm.add(rows[k], ch[s_in], w)
            if not g_in and rhs[k] < 0:
                b.diagnostics.append(
                    f"equity: country {country!r} has no generators but must supply "
                    f"{sc.equity_share:.0%} of its demand; the model is infeasible")

    model = b.model()
    model.fixed = dict(fixed or {})
    return model


def build_design(network: Network, series: WeatherYearSeries, resolution: int = 1) -> LpModel:
    """Capacity expansion LP co-optimising investment and dispatch.

    With ``resolution > 1`` consecutive hours are merged into snapshots of
    that many hours (inputs averaged, costs and storage flows weighted).
    """
    return _build(network, series, DESIGN, resolution=resolution)


def build_validation(network: Network, fixed, series: WeatherYearSeries,
                     resolution: int = 1) -> LpModel:
    """Dispatch-only LP with fixed capacities and priced load shedding.

    ``fixed`` is a mapping ``(asset_id, attribute) -> capacity`` (as in
    ``Solution.capacities``) and must cover every extendable generator and
    storage system. Lines are held at their existing capacity.
    """
    missing = []
    for g in network.generators:
        if g.extendable and (g.id, "p_nom") not in fixed:
            missing.append(f"{g.id}/p_nom")
    for s in network.storage_systems:
        if s.extendable:
            missing += [f"{s.id}/{a}" for a in ("charger", "discharger", "energy")
                        if (s.id, a) not in fixed]
    if missing:
        raise ConfigError(f"missing fixed capacities: {', '.join(missing)}")
    return _build(network, series, VALIDATION, fixed, resolution)
