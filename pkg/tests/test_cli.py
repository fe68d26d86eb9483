import json
from pathlib import Path

import pandas as pd
import pytest

from conftest import one_bus_net
from sdekit.cli import canonical_hash, main, parse_ladder, year_dir
from sdekit.model import network_to_dict


def _tiny_config(path: Path, **scenario) -> Path:
    """One bus, three synthetic years at daily resolution: the whole pipeline runs in seconds."""
    cfg = network_to_dict(one_bus_net(**({"sde_threshold_C": 2e8, "sde_window_T": 168} | scenario)))
    cfg |= {
        "name": "tiny",
        "optim": {"resolution": 24},
        "weather": {"synth": {
            "demand_base": {"a": 1000.0},
            "profiles": {"wind": {"kind": "wind", "mean": 0.35}, "solar": {"kind": "solar", "mean": 0.14}},
            "years": [{"seed": 1}, {"seed": 2, "drought_windows": [[3400, 240, 0.1, 1.2]]}, {"seed": 3}],
        }},
    }
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def tiny(tmp_path):
    return _tiny_config(tmp_path / "tiny.json"), tmp_path / "out"


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def _statuses(out):
    return {k: v["status"] for k, v in json.loads((out / "manifest.json").read_text())["steps"].items()}


def test_all_then_rerun_is_cached(tiny):
    cfg, out = tiny
    assert main(["all", "--config", str(cfg), "--out", str(out)]) == 0
    assert set(_statuses(out).values()) == {"ok"}
    report = (out / "tiny" / "report" / "metrics.csv").read_bytes()
    assert main(["all", "--config", str(cfg), "--out", str(out)]) == 0
    assert set(_statuses(out).values()) == {"cached"}
    assert (out / "tiny" / "report" / "metrics.csv").read_bytes() == report


def test_changed_output_is_recomputed(tiny):
    cfg, out = tiny
    main(["all", "--config", str(cfg), "--out", str(out)])
    metrics = out / "tiny" / "report" / "metrics.csv"
    original = metrics.read_bytes()
    metrics.write_text("tampered\n")
    assert main(["report", "--config", str(cfg), "--out", str(out)]) == 0
    assert _statuses(out)["tiny:report"] == "ok"
    assert metrics.read_bytes() == original


def test_missing_artifact_is_domain_error(tiny, capsys):
    cfg, out = tiny
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["detect", "--config", str(cfg), "--out", str(out)]) == 1
    err = _err(capsys)
    assert err["error"] == "MissingArtifact" and err["exit_code"] == 1 and err["command"] == "detect"
    assert "summary.json" in err["missing"]


def test_missing_weather_names_synth(tiny, capsys):
    cfg, out = tiny
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 1
    assert "synth" in _err(capsys)["message"]


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["solve"],
    ["solve", "--config", "/nonexistent/cfg.toml"],
    ["solve", "--config", "demo", "--jobs", "0"],
    ["solve", "--config", "demo", "--jobs", "many"],
    ["sweep", "--config", "demo", "--axis", "co2_reduction=high"],
])
def test_usage_errors_exit_2(argv, capsys, monkeypatch):
    monkeypatch.delenv("SDEKIT_CONFIG", raising=False)
    assert main(argv) == 2
    err = _err(capsys)
    assert err["error"] == "UsageError" and err["exit_code"] == 2


def test_invalid_config_is_domain_error(tmp_path, capsys):
    cfg = network_to_dict(one_bus_net())
    cfg["network"]["buses"][0]["capital"] = "x"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert main(["solve", "--config", str(path), "--out", str(tmp_path)]) == 1
    assert "capital" in _err(capsys)["message"]


def test_environment_supplies_defaults(tiny, monkeypatch):
    cfg, out = tiny
    monkeypatch.setenv("SDEKIT_CONFIG", str(cfg))
    monkeypatch.setenv("SDEKIT_OUT", str(out))
    assert main(["synth"]) == 0
    assert (out / "weather" / "weather.csv").exists()
    # flags still win over the environment
    other = out.parent / "other"
    assert main(["synth", "--out", str(other)]) == 0
    assert (other / "weather" / "weather.csv").read_bytes() == (out / "weather" / "weather.csv").read_bytes()


def test_synth_labels_and_determinism(tiny):
    cfg, out = tiny
    main(["synth", "--config", str(cfg), "--out", str(out)])
    frame = pd.read_csv(out / "weather" / "weather.csv", index_col=0, parse_dates=[0])
    assert len(frame) == 3 * 8760
    assert str(frame.index[0]) == "2000-07-01 00:00:00"


def test_sweep_default_column_matches_threshold(tiny):
    cfg, out = tiny
    assert main(["all", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--axis", "co2_reduction=1.0"]) == 0
    table = pd.read_csv(out / "tiny" / "sensitivity" / "comparison.csv")
    assert len(table) >= 1
    # the unchanged scenario finds every default event at the full threshold
    assert (table["default"].astype(float) == 2e8).all()
    assert (table["co2_reduction=1.0"].astype(float) == 2e8).all()


def test_parallel_jobs_match_serial(tmp_path):
    cfg = _tiny_config(tmp_path / "tiny.json")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["all", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["all", "--config", str(cfg), "--out", str(b), "--jobs", "2"]) == 0
    for f in sorted((a / "tiny").rglob("*.csv")):
        assert f.read_bytes() == (b / f.relative_to(a)).read_bytes(), f


def test_helpers():
    assert year_dir("1963/64") == "1963-64"
    assert parse_ladder("1,0.5") == (1.0, 0.5)
    assert canonical_hash({"a": 1, "b": 2}) == canonical_hash({"b": 2, "a": 1})


def test_sweep_doubled_threshold_matches_no_higher(tiny):
    cfg, out = tiny
    main(["all", "--config", str(cfg), "--out", str(out)])
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--axis", "sde_threshold_C=4e8"]) == 0
    table = pd.read_csv(out / "tiny" / "sensitivity" / "comparison.csv")
    base = table["default"].astype(float)
    doubled = pd.to_numeric(table["sde_threshold_C=400000000.0"], errors="coerce")
    assert (doubled.dropna() <= 4e8).all()
    assert doubled.notna().sum() <= base.notna().sum()


def test_sweep_empty_axes_is_domain_error(tmp_path, capsys):
    cfg = json.loads(_tiny_config(tmp_path / "t.json").read_text())
    cfg.pop("sensitivity", None)
    path = tmp_path / "noaxes.json"
    path.write_text(json.dumps(cfg))
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "axis" in _err(capsys)["message"]


def test_sweep_relaxed_co2_with_cheap_gas_loses_events(tmp_path):
    cfg = json.loads(_tiny_config(tmp_path / "t.json").read_text())
    cfg["network"]["generators"].append(
        {"id": "gas", "bus": "a", "category": "resilience-backup", "carrier": "gas",
         "marginal_cost": 40.0, "emission_factor": 0.45, "p_nom_fixed": 1500.0})
    cfg["scenario"]["co2_baseline"] = 2e7
    path = tmp_path / "gas.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["all", "--config", str(path), "--out", str(out)]) == 0
    assert main(["sweep", "--config", str(path), "--out", str(out), "--axis", "co2_reduction=0.99"]) == 0
    table = pd.read_csv(out / "tiny" / "sensitivity" / "comparison.csv")
    assert len(table) >= 1 and (table["default"].astype(float) == 2e8).all()
    # 1 % of the baseline lets gas cover the drought, so its price spike disappears
    assert (table["co2_reduction=0.99"] == "absent").any()
