"""Shared fixtures: small synthetic networks and weather, plus one cached demo run."""
from __future__ import annotations

import time
from pathlib import Path

import numpy as np
import pytest

from sdekit.model import Bus, Generator, Network, Scenario, StorageSystem, TransmissionLine
from sdekit.timeseries import WeatherYearSeries, synth_weather


def one_bus_net(**scen) -> Network:
    """Wind + solar + battery + hydrogen on one bus, distinct costs everywhere."""
    return Network(
        buses=[Bus("a", "XX")],
        generators=[
            Generator("wind", "a", "renewable", 0.1, 100_000, extendable=True, cf_profile="wind", carrier="wind"),
            Generator("solar", "a", "renewable", 0.05, 45_000, extendable=True, cf_profile="solar", carrier="solar"),
            Generator("legacy", "a", "existing-dispatch", 5.0, p_nom_fixed=300),
        ],
        storage_systems=[
            StorageSystem("bat", "a", "battery", 8_000, 8_100, 14_000, 0.95, 0.95, extendable=True),
            StorageSystem("h2", "a", "hydrogen", 50_000, 60_000, 300, 0.7, 0.5, extendable=True),
        ],
        scenario=Scenario(**scen),
    )


def two_bus_net(**scen) -> Network:
    return Network(
        buses=[Bus("n", "AA"), Bus("s", "BB")],
        generators=[
            Generator("wind_n", "n", "renewable", 0.1, 100_000, extendable=True, cf_profile="wind", carrier="wind"),
            Generator("solar_s", "s", "renewable", 0.07, 42_000, extendable=True, cf_profile="solar", carrier="solar"),
            Generator("hydro_n", "n", "existing-dispatch", 3.0, p_nom_fixed=400),
        ],
        storage_systems=[
            StorageSystem("bat_s", "s", "battery", 8_000, 8_200, 13_000, 0.95, 0.95, extendable=True),
            StorageSystem("h2_n", "n", "hydrogen", 52_000, 61_000, 280, 0.7, 0.5, extendable=True),
        ],
        lines=[TransmissionLine("ns", "n", "s", 500, 400)],
        scenario=Scenario(**({"transmission_expansion": 0.5} | scen)),
    )


def three_bus_net(**scen) -> Network:
    """Scaled-down copy of the demo topology with gas back-up for CO2 sweeps."""
    base = {"co2_baseline": 2.0e6, "transmission_expansion": 0.0}
    return Network(
        buses=[Bus("north", "NO"), Bus("central", "CE"), Bus("south", "CE")],
        generators=[
            Generator("wind_north", "north", "renewable", 0.10, 110_000, extendable=True,
                      cf_profile="wind_north", carrier="wind"),
            Generator("wind_central", "central", "renewable", 0.11, 115_000, extendable=True,
                      cf_profile="wind_central", carrier="wind"),
            Generator("solar_south", "south", "renewable", 0.06, 42_000, extendable=True,
                      cf_profile="solar_south", carrier="solar"),
            Generator("legacy_north", "north", "existing-dispatch", 2.0, p_nom_fixed=300),
            Generator("legacy_central", "central", "existing-dispatch", 10.0, p_nom_fixed=250),
            Generator("gas_central", "central", "resilience-backup", 90.0, emission_factor=0.45,
                      p_nom_fixed=800, carrier="gas"),
        ],
        storage_systems=[
            StorageSystem("bat_south", "south", "battery", 8_100, 8_100, 14_100, 0.96, 0.96, extendable=True),
            StorageSystem("h2_central", "central", "hydrogen", 56_000, 66_000, 260, 0.68, 0.5, extendable=True),
        ],
        lines=[
            TransmissionLine("nc", "north", "central", 300, 600),
            TransmissionLine("cs", "central", "south", 250, 500),
        ],
        scenario=Scenario(**(base | scen)),
    )


PROFILES_1 = {"wind": {"kind": "wind", "mean": 0.35}, "solar": {"kind": "solar", "mean": 0.14}}
PROFILES_3 = {
    "wind_north": {"kind": "wind", "mean": 0.38},
    "wind_central": {"kind": "wind", "mean": 0.30},
    "solar_south": {"kind": "solar", "mean": 0.15},
}


def weather_1(n_hours=168, seed=1, drought=(), demand=1000.0) -> WeatherYearSeries:
    return synth_weather({"a": demand}, PROFILES_1, seed=seed, n_hours=n_hours,
                         drought_windows=drought, noise=0.1, label=f"w1-{seed}")


def weather_2(n_hours=336, seed=2) -> WeatherYearSeries:
    return synth_weather({"n": 600.0, "s": 900.0}, PROFILES_1, seed=seed, n_hours=n_hours,
                         noise=0.1, label=f"w2-{seed}")


def weather_3(n_hours=336, seed=3, drought=()) -> WeatherYearSeries:
    return synth_weather({"north": 400.0, "central": 900.0, "south": 500.0}, PROFILES_3, seed=seed,
                         n_hours=n_hours, noise=0.12, drought_windows=drought, label=f"w3-{seed}")


@pytest.fixture
def flat_year():
    return WeatherYearSeries("flat", {"a": np.full(8760, 1000.0)})


# -- one full demo run shared by the end-to-end checks ------------------------------------

_DEMO_RUN = {}


@pytest.fixture(scope="session")
def demo_run(tmp_path_factory):
    """Run ``sdekit all`` on the bundled demo config once per session."""
    if "out" not in _DEMO_RUN:
        from sdekit.cli import main

        out = tmp_path_factory.mktemp("demo_a")
        t0 = time.perf_counter()
        code = main(["all", "--config", "demo", "--out", str(out)])
        _DEMO_RUN.update(out=Path(out), code=code, seconds=time.perf_counter() - t0)
    return dict(_DEMO_RUN)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
