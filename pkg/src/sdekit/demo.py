"""Bundled desk-scale fixture: a 3-bus, 2-country system with synthetic weather.

Costs are pre-annualised (EUR/MW or EUR/MWh per weather year). Marginal
costs differ slightly between buses so that dispatch and duals are unique.
"""
from __future__ import annotations

import copy

from .model import Network, network_from_dict

DEMO_CONFIG: dict = {
    "name": "demo3",
    "network": {
        "buses": [
            {"id": "north", "country": "NO"},
            {"id": "central", "country": "CE"},
            {"id": "south", "country": "CE"},
        ],
        "generators": [
            {"id": "wind_north", "bus": "north", "category": "renewable", "carrier": "wind",
             "marginal_cost": 0.10, "capital_cost": 110_000, "extendable": True, "cf_profile": "wind_north"},
            {"id": "wind_central", "bus": "central", "category": "renewable", "carrier": "wind",
             "marginal_cost": 0.11, "capital_cost": 115_000, "extendable": True, "cf_profile": "wind_central"},
            {"id": "solar_south", "bus": "south", "category": "renewable", "carrier": "solar",
             "marginal_cost": 0.06, "capital_cost": 42_000, "extendable": True, "cf_profile": "solar_south"},
            {"id": "legacy_north", "bus": "north", "category": "existing-dispatch", "carrier": "hydro",
             "marginal_cost": 2.0, "p_nom_fixed": 3_000},
            {"id": "legacy_central", "bus": "central", "category": "existing-dispatch", "carrier": "nuclear",
             "marginal_cost": 10.0, "p_nom_fixed": 2_500},
            {"id": "gas_central", "bus": "central", "category": "resilience-backup", "carrier": "gas",
             "marginal_cost": 90.0, "emission_factor": 0.45, "p_nom_fixed": 8_000},
        ],
        "storage_systems": [
            {"id": "battery_south", "bus": "south", "kind": "battery", "extendable": True,
             "charger_cost": 8_100, "discharger_cost": 8_100, "energy_cost": 14_100,
             "eta_charge": 0.96, "eta_discharge": 0.96},
            {"id": "h2_central", "bus": "central", "kind": "hydrogen", "extendable": True,
             "charger_cost": 56_000, "discharger_cost": 66_000, "energy_cost": 260,
             "eta_charge": 0.68, "eta_discharge": 0.5},
        ],
        "lines": [
            {"id": "north-central", "bus0": "north", "bus1": "central", "p_nom_existing": 3_000, "length": 600},
            {"id": "central-south", "bus0": "central", "bus1": "south", "p_nom_existing": 2_500, "length": 500},
        ],
    },
    "scenario": {
        "co2_reduction": 1.0,
        "co2_baseline": 60_000_000.0,
        "transmission_expansion": 0.0,
        "sde_threshold_C": 6.0e9,
        "sde_window_T": 336,
        "load_shedding_cost": 100_000.0,
    },
    "weather": {
        "synth": {
            "first_year": 1963,
            "demand_base": {"north": 4_000, "central": 9_000, "south": 5_000},
            "profiles": {
                "wind_north": {"kind": "wind", "mean": 0.38},
                "wind_central": {"kind": "wind", "mean": 0.30},
                "solar_south": {"kind": "solar", "mean": 0.15},
            },
            "amplitude": 0.3,
            "noise": 0.12,
            "demand_amplitude": 0.15,
            "years": [
                {"seed": 11, "drought_windows": []},
                {"seed": 12, "drought_windows": [[4300, 96, 0.1, 1.25]]},
                {"seed": 13, "drought_windows": [[3400, 48, 0.05, 1.35], [5200, 240, 0.3, 1.1]]},
            ],
        },
    },
    "optim": {"resolution": 3, "tol": 1e-6},
    "events": {"trim_quantile": 0.99},
    "cluster": {"k_range": [2, 4], "seed": 0},
    "sensitivity": {"axes": {"co2_reduction": [0.99], "transmission_expansion": [0.25]}},
}


def demo_config() -> dict:
    return copy.deepcopy(DEMO_CONFIG)


def demo_network() -> Network:
    return network_from_dict(DEMO_CONFIG)
