"""Network data model, scenario knobs and validation.

All containers are frozen dataclasses; use :func:`apply_scenario` or
:func:`dataclasses.replace` to derive modified copies.
"""
from __future__ import annotations

import dataclasses
import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

GENERATOR_CATEGORIES = ("existing-dispatch", "renewable", "resilience-backup")
STORAGE_KINDS = ("battery", "hydrogen", "pumped-hydro", "reservoir")
# storage kinds that are never built by the optimiser
FIXED_STORAGE_KINDS = ("pumped-hydro", "reservoir")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


@dataclass(frozen=True)
class Bus:
    id: str
    country: str


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    category: str
    marginal_cost: float = 0.0
    capital_cost: float = 0.0
    emission_factor: float = 0.0
    extendable: bool = False
    p_nom_fixed: float = 0.0
    cf_profile: str | None = None  # None means constant availability of 1
    carrier: str = ""  # free tag, e.g. "wind", "solar", "gas"


@dataclass(frozen=True)
class StorageSystem:
    id: str
    bus: str
    kind: str
    charger_cost: float = 0.0
    discharger_cost: float = 0.0
    energy_cost: float = 0.0
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    extendable: bool = False
    fixed_charger: float = 0.0
    fixed_discharger: float = 0.0
    fixed_energy: float = 0.0
    inflow_profile: str | None = None


@dataclass(frozen=True)
class TransmissionLine:
    id: str
    bus0: str
    bus1: str
    p_nom_existing: float
    length: float
    extendable: bool = True


@dataclass(frozen=True)
class Scenario:
    """Scenario knobs. Thresholds in EUR, windows in hours, costs in EUR/MWh."""

    co2_reduction: float = 1.0
    co2_baseline: float = 0.0
    transmission_expansion: float = 0.25
    equity_share: float | None = None
    sde_threshold_C: float = 1e11
    sde_window_T: int = 336
    load_shedding_cost: float = 1e5


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    generators: tuple[Generator, ...] = ()
    storage_systems: tuple[StorageSystem, ...] = ()
    lines: tuple[TransmissionLine, ...] = ()
    scenario: Scenario = field(default_factory=Scenario)

    def __post_init__(self):
        # accept lists but store tuples so instances stay hashable and immutable
        for name in ("buses", "generators", "storage_systems", "lines"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def bus_ids(self) -> list[str]:
        return [b.id for b in self.buses]

    def profile_ids(self) -> set[str]:
        ids = {g.cf_profile for g in self.generators if g.cf_profile}
        ids |= {s.inflow_profile for s in self.storage_systems if s.inflow_profile}
        return ids

    def asset(self, asset_id: str):
        for group in (self.generators, self.storage_systems, self.lines):
            for a in group:
                if a.id == asset_id:
                    return a
        raise KeyError(asset_id)


STORAGE_CATEGORY = {
    "battery": "daily-balancing",
    "hydrogen": "resilience-backup",
    "pumped-hydro": "existing-dispatch",
    "reservoir": "existing-dispatch",
}
FLEX_CATEGORIES = ("existing-dispatch", "daily-balancing", "resilience-backup")


def flex_category(asset) -> str:
    """Reporting category of a generator or storage system.

    Batteries provide daily balancing, hydrogen storage (electrolyser, cavern,
    fuel cell) is resilience back-up, hydro storage counts as existing
    dispatchable capacity. Generators carry their category explicitly.
    """
    if isinstance(asset, StorageSystem):
        return STORAGE_CATEGORY[asset.kind]
    return asset.category


def _duplicates(ids: Iterable[str]) -> list[str]:
    seen, dup = set(), []
    for i in ids:
        if i in seen:
            dup.append(i)
        seen.add(i)
    return dup


def scenario_violations(s: Scenario) -> list[str]:
    out = []
    if not 0.0 <= s.co2_reduction <= 1.0:
        out.append(f"scenario: co2_reduction={s.co2_reduction} outside [0, 1]")
    if s.co2_baseline < 0:
        out.append(f"scenario: co2_baseline={s.co2_baseline} is negative")
    if s.transmission_expansion < 0:
        out.append(f"scenario: transmission_expansion={s.transmission_expansion} is negative")
    if s.equity_share is not None and not 0.0 <= s.equity_share <= 1.0:
        out.append(f"scenario: equity_share={s.equity_share} outside [0, 1]")
    if s.sde_threshold_C <= 0:
        out.append(f"scenario: sde_threshold_C={s.sde_threshold_C} must be positive")
    if s.sde_window_T < 1:
        out.append(f"scenario: sde_window_T={s.sde_window_T} must be >= 1")
    if s.load_shedding_cost < 0:
        out.append(f"scenario: load_shedding_cost={s.load_shedding_cost} is negative")
    return out


def validate_network(network: Network, profile_ids: Iterable[str] | None = None) -> list[str]:
    """Return a list of human-readable rule violations (empty if valid).

    If ``profile_ids`` is given, every profile referenced by a generator or
    storage system must be among them.
    """
    v: list[str] = []
    if not network.buses:
        v.append("network: at least one bus required")
    for d in _duplicates(network.bus_ids):
        v.append(f"bus {d!r}: duplicate id")
    for b in network.buses:
        if not b.country:
            v.append(f"bus {b.id!r}: country must be nonempty")
    asset_ids = [a.id for a in (*network.generators, *network.storage_systems, *network.lines)]
    for d in _duplicates(asset_ids):
        v.append(f"asset {d!r}: duplicate id")

    buses = set(network.bus_ids)
    known_profiles = None if profile_ids is None else set(profile_ids)

    for g in network.generators:
        tag = f"generator {g.id!r}"
        if g.bus not in buses:
            v.append(f"{tag}: unknown bus {g.bus!r}")
        if g.category not in GENERATOR_CATEGORIES:
            v.append(f"{tag}: category {g.category!r} not in {GENERATOR_CATEGORIES}")
        for attr in ("marginal_cost", "capital_cost", "emission_factor", "p_nom_fixed"):
            if getattr(g, attr) < 0:
                v.append(f"{tag}: {attr} must be >= 0")
        if g.extendable and g.category not in ("renewable", "resilience-backup"):
            v.append(f"{tag}: only renewable or resilience-backup generators may be extendable")
        if known_profiles is not None and g.cf_profile and g.cf_profile not in known_profiles:
            v.append(f"{tag}: unknown profile {g.cf_profile!r}")

    for s in network.storage_systems:
        tag = f"storage {s.id!r}"
        if s.bus not in buses:
            v.append(f"{tag}: unknown bus {s.bus!r}")
        if s.kind not in STORAGE_KINDS:
            v.append(f"{tag}: kind {s.kind!r} not in {STORAGE_KINDS}")
        for attr in ("eta_charge", "eta_discharge"):
            eta = getattr(s, attr)
            if not 0.0 < eta <= 1.0:
                v.append(f"{tag}: {attr}={eta} outside (0, 1]")
        for attr in ("charger_cost", "discharger_cost", "energy_cost",
                     "fixed_charger", "fixed_discharger", "fixed_energy"):
            if getattr(s, attr) < 0:
                v.append(f"{tag}: {attr} must be >= 0")
        if s.extendable and s.kind in FIXED_STORAGE_KINDS:
            v.append(f"{tag}: {s.kind} capacities are fixed inputs and cannot be extendable")
        if known_profiles is not None and s.inflow_profile and s.inflow_profile not in known_profiles:
            v.append(f"{tag}: unknown inflow profile {s.inflow_profile!r}")

    for ln in network.lines:
        tag = f"line {ln.id!r}"
        for end in (ln.bus0, ln.bus1):
            if end not in buses:
                v.append(f"{tag}: unknown bus {end!r}")
        if ln.bus0 == ln.bus1:
            v.append(f"{tag}: bus0 and bus1 must differ")
        if ln.p_nom_existing < 0:
            v.append(f"{tag}: p_nom_existing must be >= 0")
        if ln.length <= 0:
            v.append(f"{tag}: length must be > 0")

    if len(buses) > 1 and not _connected(network):
        v.append("network: bus graph is not connected")

    v.extend(scenario_violations(network.scenario))
    return v


def _connected(network: Network) -> bool:
    adj = defaultdict(set)
    for ln in network.lines:
        adj[ln.bus0].add(ln.bus1)
        adj[ln.bus1].add(ln.bus0)
    start = network.buses[0].id
    seen, todo = {start}, deque([start])
    while todo:
        b = todo.popleft()
        for nb in adj[b] - seen:
            seen.add(nb)
            todo.append(nb)
    return seen >= set(network.bus_ids)


def apply_scenario(network: Network, overrides: Scenario | Mapping[str, Any]) -> Network:
    """Return a copy of ``network`` with scenario fields replaced.

    ``overrides`` is either a full :class:`Scenario` or a mapping of the
    fields to change. Asset tables are shared, not copied.
    """
    if isinstance(overrides, Scenario):
        scenario = overrides
    else:
        unknown = set(overrides) - {f.name for f in dataclasses.fields(Scenario)}
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        scenario = dataclasses.replace(network.scenario, **overrides)
    problems = scenario_violations(scenario)
    if problems:
        raise ConfigError("; ".join(problems))
    if scenario == network.scenario:
        return network
    return dataclasses.replace(network, scenario=scenario)


# -- config file I/O ---------------------------------------------------------

def read_config(path: str | Path) -> dict:
    """Parse a TOML or JSON config file into a plain dict."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    if path.suffix.lower() == ".toml":
        return tomllib.loads(text.decode("utf-8"))
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return tomllib.loads(text.decode("utf-8"))


def _build(cls, rows, where):
    names = {f.name for f in dataclasses.fields(cls)}
    out = []
    for i, row in enumerate(rows or []):
        unknown = set(row) - names
        if unknown:
            raise ConfigError(f"{where}[{i}]: unknown fields {sorted(unknown)}")
        try:
            out.append(cls(**row))
        except TypeError as err:
            raise ConfigError(f"{where}[{i}]: {err}") from None
    return out


def network_from_dict(cfg: Mapping[str, Any]) -> Network:
    """Build a :class:`Network` from the ``network``/``scenario`` config tables."""
    net = cfg.get("network", cfg)
    scen = dict(cfg.get("scenario", {}))
    try:
        scenario = Scenario(**scen)
    except TypeError as err:
        raise ConfigError(f"scenario: {err}") from None
    return Network(
        buses=_build(Bus, net.get("buses"), "buses"),
        generators=_build(Generator, net.get("generators"), "generators"),
        storage_systems=_build(StorageSystem, net.get("storage_systems"), "storage_systems"),
        lines=_build(TransmissionLine, net.get("lines"), "lines"),
        scenario=scenario,
    )


def network_to_dict(network: Network) -> dict:
    def rows(items):
        return [{k: v for k, v in dataclasses.asdict(x).items() if v is not None} for x in items]

    return {
        "network": {
            "buses": rows(network.buses),
            "generators": rows(network.generators),
            "storage_systems": rows(network.storage_systems),
            "lines": rows(network.lines),
        },
        "scenario": {k: v for k, v in dataclasses.asdict(network.scenario).items() if v is not None},
    }
