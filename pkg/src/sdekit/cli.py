"""Command-line pipeline: weather -> designs -> events -> clusters -> validation -> report.

Every step writes below ``<out>/<scenario>/`` and records its inputs and
outputs in ``<out>/manifest.json``. A step whose input hash matches the
manifest and whose outputs are intact is skipped.

Environment variables with prefix ``SDEKIT_`` supply defaults for the
flags: SDEKIT_CONFIG, SDEKIT_OUT, SDEKIT_JOBS, SDEKIT_SEED,
SDEKIT_THRESHOLD_LADDER, SDEKIT_LOG_LEVEL.

Exit codes: 0 ok, 1 domain error, 2 usage error. Failures print a single
JSON object to stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .cluster import centroid_table, name_clusters, normalize, select_k
from .events import (FEATURE_NAMES, SdeConfig, SdeEvent, characterise, composite_mean,
                     detect_sdes, duration_curve, features_frame, hourly_cost, net_load)
from .model import ConfigError, Network, apply_scenario, network_from_dict, read_config, validate_network
from .optim import HighsSolver, build_design, export_solution, load_solution, solve
from .resilience import (assemble_matrix, build_report, daily_values, export_matrix,
                         export_report, load_matrix, sde_cost_share, similarity_matrix,
                         validation_entry, EntryResult)
from .timeseries import (WeatherYearSeries, aggregate, concat_weather_years, read_weather_csv,
                         split_weather_years, synth_weather)

ENV_PREFIX = "SDEKIT_"
DEFAULT_LADDER = (1.0, 0.75, 0.5, 0.25)
SWEEP_AXES = ("transmission_expansion", "equity_share", "co2_reduction", "sde_threshold_C")
# scenario fields that change the LP (threshold and window only affect detection)
LP_FIELDS = ("co2_reduction", "co2_baseline", "transmission_expansion", "equity_share",
             "load_shedding_cost")
STEPS = ("synth", "solve", "detect", "cluster", "validate", "similarity", "report")

logger = logging.getLogger("sdekit")


class DomainError(RuntimeError):
    """A pipeline failure caused by the data or the model rather than the invocation."""


class MissingArtifact(DomainError):
    def __init__(self, path, step):
        super().__init__(f"missing artifact {path}; run `{step}` first")
        self.path = str(path)


class UsageError(RuntimeError):
    pass


# -- helpers ---------------------------------------------------------------------

def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_hash(path: Path) -> str:
    return _sha256_bytes(Path(path).read_bytes())


def canonical_hash(obj) -> str:
    return _sha256_bytes(json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str).encode())


def year_dir(label: str) -> str:
    return label.replace("/", "-")


def _csv(frame: pd.DataFrame, path: Path, index=True) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index, float_format="%.10g", lineterminator="\n")
    return path


def _json(obj, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")
    return path


def parse_ladder(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise UsageError(f"threshold ladder {text!r} is not a comma-separated list of numbers") from None
    if not vals or any(v <= 0 for v in vals):
        raise UsageError("threshold ladder needs positive multipliers")
    return tuple(sorted(set(vals), reverse=True))


# -- run context -----------------------------------------------------------------

class Context:
    """Resolved configuration, output paths and the manifest of one invocation."""

    def __init__(self, config: dict, config_path: Path | None, out: Path, jobs: int = 1,
                 seed: int | None = None, ladder=DEFAULT_LADDER):
        self.config = config
        self.config_path = config_path
        self.base = config_path.parent if config_path else Path.cwd()
        self.out = Path(out)
        self.jobs = max(1, int(jobs))
        self.ladder = tuple(ladder)
        cl = config.get("cluster", {})
        self.seed = int(seed if seed is not None else cl.get("seed", 0))
        self.name = str(config.get("name", "default"))
        self.network = network_from_dict(config)
        problems = validate_network(self.network)
        if problems:
            raise ConfigError("; ".join(problems))
        opt = config.get("optim", {})
        self.resolution = int(opt.get("resolution", 1))
        self.tol = float(opt.get("tol", 1e-6))
        self.method = str(opt.get("method", "highs-ipm"))
        if self.resolution < 1 or 24 % self.resolution:
            raise ConfigError(f"optim.resolution={self.resolution} must divide 24")
        ev = config.get("events", {})
        self.trim_quantile = float(ev.get("trim_quantile", 0.99))
        self.config_hash = canonical_hash({"config": config, "seed": self.seed,
                                           "ladder": self.ladder, "version": __version__})
        self.manifest_path = self.out / "manifest.json"
        self.manifest = self._load_manifest()
        self._years = None

    # manifest ------------------------------------------------------------
    def _load_manifest(self) -> dict:
        if self.manifest_path.exists():
            try:
                m = json.loads(self.manifest_path.read_text())
                if m.get("tool_version") == __version__:
                    return m
            except json.JSONDecodeError:
                logger.warning("unreadable manifest; starting afresh")
        return {"tool_version": __version__, "steps": {}}

    def save_manifest(self):
        m = self.manifest
        m["config_hash"] = self.config_hash
        m["scenarios"] = sorted({k.split(":", 1)[0] for k in m["steps"] if ":" in k} | {self.name})
        m["seeds"] = {"cluster": self.seed, "synth": [y.get("seed") for y in self._synth_years()]}
        self.out.mkdir(parents=True, exist_ok=True)
        _json(m, self.manifest_path)

    def rel(self, path: Path) -> str:
        return Path(path).relative_to(self.out).as_posix()

    def cached(self, key: str, input_hash: str) -> bool:
        rec = self.manifest["steps"].get(key)
        if not rec or rec.get("input_hash") != input_hash or rec.get("status") not in ("ok", "cached"):
            return False
        for rel, digest in rec.get("outputs", {}).items():
            p = self.out / rel
            if not p.exists() or file_hash(p) != digest:
                return False
        return True

    def record(self, key: str, input_hash: str, outputs, status="ok", **extra):
        self.manifest["steps"][key] = {
            "status": status, "input_hash": input_hash,
            "outputs": {self.rel(p): file_hash(p) for p in sorted(set(map(Path, outputs)))},
            **extra,
        }
        self.save_manifest()

    def mark_cached(self, key):
        self.manifest["steps"][key]["status"] = "cached"
        self.save_manifest()

    def output_hashes(self, key: str) -> dict:
        rec = self.manifest["steps"].get(key)
        return rec["outputs"] if rec else {}

    # paths ---------------------------------------------------------------
    def scenario_dir(self, scenario: str | None = None) -> Path:
        return self.out / (scenario or self.name)

    def weather_path(self) -> Path:
        return self.out / "weather" / "weather.csv"

    # weather -------------------------------------------------------------
    def _synth_years(self) -> list[dict]:
        return list(self.config.get("weather", {}).get("synth", {}).get("years", []))

    def weather_source(self) -> Path:
        w = self.config.get("weather", {})
        if "csv" in w:
            p = Path(w["csv"])
            return p if p.is_absolute() else self.base / p
        if "synth" in w:
            return self.weather_path()
        raise ConfigError("config needs weather.csv or weather.synth")

    def years(self) -> list[WeatherYearSeries]:
        if self._years is None:
            src = self.weather_source()
            if not src.exists():
                raise MissingArtifact(src, "synth")
            self._years = split_weather_years(read_weather_csv(src))
            if not self._years:
                raise DomainError(f"{src}: no complete weather year")
            ids = set().union(*(y.profile_ids() for y in self._years))
            problems = validate_network(self.network, ids)
            buses = set(self.network.bus_ids)
            for y in self._years:
                if set(y.demand) != buses:
                    problems.append(f"weather {y.label}: load columns {sorted(y.demand)} "
                                    f"do not match buses {sorted(buses)}")
            if problems:
                raise ConfigError("; ".join(problems))
        return self._years

    def solver(self):
        return HighsSolver(self.method)


# -- work functions (top level so that worker processes can import them) ---------

def _design_job(args):
    network, series, resolution, tol, method, directory = args
    sol = solve(build_design(network, aggregate(series, resolution), resolution), tol=tol,
                solver=HighsSolver(method))
    export_solution(sol, directory)
    return series.label, sol.status


def _validation_job(args):
    network, capacities, series, design_label, resolution, tol, method = args
    return validation_entry(network, capacities, aggregate(series, resolution), design_label,
                            resolution, tol, HighsSolver(method))


def _mapper(ctx: Context):
    if ctx.jobs == 1:
        return map, None
    pool = ProcessPoolExecutor(max_workers=ctx.jobs)
    return pool.map, pool


def _run_map(ctx, fn, jobs):
    mapper, pool = _mapper(ctx)
    try:
        return list(mapper(fn, jobs))
    finally:
        if pool is not None:
            pool.shutdown()


# -- steps -------------------------------------------------------------------------

def step_synth(ctx: Context) -> list[Path]:
    synth = ctx.config.get("weather", {}).get("synth")
    if not synth:
        raise ConfigError("config has no weather.synth table")
    key = "weather:synth"
    h = canonical_hash({"synth": synth, "seed": ctx.seed})
    if ctx.cached(key, h):
        ctx.mark_cached(key)
        return [ctx.weather_path()]
    years = []
    first = int(synth.get("first_year", 2000))
    for i, y in enumerate(synth["years"]):
        seed = y.get("seed", ctx.seed + i)
        years.append(synth_weather(
            synth["demand_base"], synth["profiles"], seed=int(seed),
            amplitude=synth.get("amplitude", 0.3), noise=synth.get("noise", 0.05),
            demand_amplitude=synth.get("demand_amplitude", 0.15),
            drought_windows=[tuple(w) for w in y.get("drought_windows", [])],
            label=str(i)))
    frame = concat_weather_years(years, first)
    path = ctx.weather_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    # full precision so that the round trip through CSV is exact
    frame.to_csv(path, date_format="%Y-%m-%dT%H:%M:%S", lineterminator="\n")
    ctx._years = None
    ctx.record(key, h, [path])
    return [path]


def _weather_hash(ctx: Context) -> str:
    return file_hash(ctx.weather_source())


def design_dir(ctx: Context, label: str, scenario: str | None = None) -> Path:
    return ctx.scenario_dir(scenario) / year_dir(label) / "design"


def step_solve(ctx: Context, network: Network | None = None, scenario: str | None = None) -> dict:
    """Design LP per weather year. Returns {label: status}."""
    network = network or ctx.network
    years = ctx.years()
    wh = _weather_hash(ctx)
    statuses, todo = {}, []
    for y in years:
        key = f"{scenario or ctx.name}:solve:{year_dir(y.label)}"
        h = canonical_hash({"network": repr(network), "weather": wh, "year": y.label,
                            "resolution": ctx.resolution, "tol": ctx.tol, "method": ctx.method})
        if ctx.cached(key, h):
            ctx.mark_cached(key)
            statuses[y.label] = ctx.manifest["steps"][key]["solve_status"]
        else:
            todo.append((key, h, y))
    args = [(network, y, ctx.resolution, ctx.tol, ctx.method, design_dir(ctx, y.label, scenario))
            for _, _, y in todo]
    for (key, h, y), (label, status) in zip(todo, _run_map(ctx, _design_job, args)):
        d = design_dir(ctx, label, scenario)
        ctx.record(key, h, sorted(d.iterdir()), solve_status=status)
        statuses[label] = status
    bad = {k: v for k, v in statuses.items() if v != "optimal"}
    if bad:
        raise DomainError(f"design solves not optimal: {bad}")
    return statuses


def load_design(ctx: Context, label: str, scenario: str | None = None):
    d = design_dir(ctx, label, scenario)
    if not (d / "summary.json").exists():
        raise MissingArtifact(d / "summary.json", "solve")
    return load_solution(d)


def _design_hash(ctx, scenario=None) -> str:
    prefix = f"{scenario or ctx.name}:solve:"
    return canonical_hash({k: v["outputs"] for k, v in sorted(ctx.manifest["steps"].items())
                           if k.startswith(prefix)})


def _sde_config(network: Network, trim: float, multiplier: float = 1.0) -> SdeConfig:
    s = network.scenario
    return SdeConfig(threshold_C=s.sde_threshold_C * multiplier, window_T=s.sde_window_T,
                     trim_quantile=trim)


def detect_year(ctx, series, sol, network, multiplier=1.0) -> list[SdeEvent]:
    spans = detect_sdes(hourly_cost(series, sol), _sde_config(network, ctx.trim_quantile, multiplier))
    return characterise(spans, series, sol, network, prefix=f"{year_dir(series.label)}#")


def step_detect(ctx: Context) -> dict[str, list[SdeEvent]]:
    years = ctx.years()
    sols = {y.label: load_design(ctx, y.label) for y in years}
    key = f"{ctx.name}:detect"
    root = ctx.scenario_dir()
    h = canonical_hash({"designs": _design_hash(ctx), "scenario": repr(ctx.network.scenario),
                        "trim": ctx.trim_quantile, "weather": _weather_hash(ctx)})
    events = {}
    for y in years:
        events[y.label] = detect_year(ctx, y, sols[y.label], ctx.network)
    if ctx.cached(key, h):
        ctx.mark_cached(key)
        return events
    outputs = []
    for y in years:
        d = root / year_dir(y.label) / "events"
        evs = events[y.label]
        outputs.append(_json([e.to_dict() for e in evs], d / "events.json"))
        for e in evs:
            name = e.id.replace("#", "_")
            outputs.append(_csv(e.composites, d / f"{name}_composite.csv"))
    allev = [e for y in years for e in events[y.label]]
    outputs.append(_csv(features_frame(allev), root / "events" / "features.csv", index=False))
    mean = composite_mean(allev)
    if len(mean):
        outputs.append(_csv(mean, root / "events" / "composite_mean.csv"))
    ctx.record(key, h, outputs, n_events=len(allev))
    return events


def step_cluster(ctx: Context) -> dict[str, str]:
    """Cluster all events of the scenario. Returns {event id: tag}."""
    root = ctx.scenario_dir()
    feat_path = root / "events" / "features.csv"
    if not feat_path.exists():
        raise MissingArtifact(feat_path, "detect")
    cl = ctx.config.get("cluster", {})
    k_lo, k_hi = (int(v) for v in cl.get("k_range", (2, 6)))
    restarts = int(cl.get("restarts", 10))
    key = f"{ctx.name}:cluster"
    h = canonical_hash({"features": file_hash(feat_path), "k": [k_lo, k_hi], "seed": ctx.seed,
                        "restarts": restarts})
    labels_path = root / "cluster" / "labels.csv"
    if ctx.cached(key, h):
        ctx.mark_cached(key)
        return _read_tags(labels_path)
    feats = pd.read_csv(feat_path, dtype={"event": str, "weather_year": str},
                        float_precision="round_trip")
    n = len(feats)
    outputs = []
    info = {"n_events": n, "k_range": [k_lo, k_hi]}
    if n < 3:
        info["status"] = "skipped"
        info["reason"] = f"{n} events; clustering needs at least 3"
        labels = pd.DataFrame({"event": feats["event"], "cluster": -1, "name": "", "tag": ""})
    else:
        k_hi_eff = min(k_hi, n - 1)
        k_lo_eff = min(k_lo, k_hi_eff)
        if k_hi_eff < k_hi:
            info["k_range_used"] = [k_lo_eff, k_hi_eff]
            logger.warning("only %d events; k range clamped to [%d, %d]", n, k_lo_eff, k_hi_eff)
        matrix = normalize(feats[list(FEATURE_NAMES)])
        model = select_k(matrix, (k_lo_eff, k_hi_eff), seed=ctx.seed, restarts=restarts)
        names = name_clusters(model, FEATURE_NAMES)
        info.update(status="ok", k=model.k, silhouette=model.silhouette,
                    calinski_harabasz=model.calinski_harabasz,
                    zero_variance=[c for c, z in zip(FEATURE_NAMES, matrix.zero_variance) if z])
        labels = pd.DataFrame({"event": feats["event"], "cluster": model.labels,
                               "name": [names[j][0] for j in model.labels],
                               "tag": [names[j][1] for j in model.labels]})
        outputs.append(_csv(model.scores, root / "cluster" / "scores.csv", index=False))
        outputs.append(_csv(centroid_table(model, FEATURE_NAMES), root / "cluster" / "centroids.csv",
                            index=False))
    outputs.append(_csv(labels, labels_path, index=False))
    outputs.append(_json(info, root / "cluster" / "summary.json"))
    ctx.record(key, h, outputs)
    return _read_tags(labels_path)


def _read_tags(path: Path) -> dict[str, str]:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    return dict(zip(frame["event"], frame["tag"]))


def step_validate(ctx: Context):
    years = ctx.years()
    labels = [y.label for y in years]
    sols = {lab: load_design(ctx, lab) for lab in labels}
    for lab, s in sols.items():
        if not s.optimal:
            raise DomainError(f"design {lab} is {s.status}; cannot validate")
    root = ctx.scenario_dir() / "validation"
    entries_dir = root / "entries"
    wh = _weather_hash(ctx)
    results, todo = [], []
    for d in labels:
        cap_hash = file_hash(design_dir(ctx, d) / "capacities.csv")
        for o in labels:
            key = f"{ctx.name}:validate:{year_dir(d)}:{year_dir(o)}"
            h = canonical_hash({"caps": cap_hash, "weather": wh, "year": o, "net": repr(ctx.network),
                                "resolution": ctx.resolution, "tol": ctx.tol, "method": ctx.method})
            path = entries_dir / f"{year_dir(d)}__{year_dir(o)}.json"
            if ctx.cached(key, h):
                # finished entries are reused, so an interrupted matrix resumes
                ctx.mark_cached(key)
                results.append(EntryResult(**json.loads(path.read_text())))
            else:
                todo.append((key, h, path, d, o))
    series = {y.label: y for y in years}
    args = [(ctx.network, sols[d].capacities, series[o], d, ctx.resolution, ctx.tol, ctx.method)
            for _, _, _, d, o in todo]
    for (key, h, path, d, o), res in zip(todo, _run_map(ctx, _validation_job, args)):
        rec = {k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in vars(res).items()}
        _json(rec, path)
        ctx.record(key, h, [path])
        results.append(res)
    results = [EntryResult(**{k: (np.nan if v is None else v) for k, v in vars(r).items()})
               for r in results]
    matrix = assemble_matrix(results, labels)
    key = f"{ctx.name}:validate"
    h = canonical_hash({k: v["outputs"] for k, v in sorted(ctx.manifest["steps"].items())
                        if k.startswith(key + ":")})
    if ctx.cached(key, h):
        ctx.mark_cached(key)
    else:
        outputs = export_matrix(matrix, root)
        ctx.record(key, h, outputs, poisoned=[list(p) for p in matrix.poisoned])
    if matrix.poisoned:
        raise DomainError(f"validation entries not optimal: {matrix.poisoned}")
    return matrix


def step_similarity(ctx: Context) -> dict[str, pd.DataFrame]:
    years = ctx.years()
    root = ctx.scenario_dir() / "similarity"
    key = f"{ctx.name}:similarity"
    h = canonical_hash({"designs": _design_hash(ctx), "weather": _weather_hash(ctx)})
    sols = {y.label: load_design(ctx, y.label) for y in years}
    out, outputs = {}, []
    for q in ("net_load", "wind_cf"):
        samples = {y.label: daily_values(q, y, ctx.network, sols[y.label]) for y in years}
        out[q] = similarity_matrix(samples)
        outputs.append(root / f"{q}.csv")
    if ctx.cached(key, h):
        ctx.mark_cached(key)
        return out
    for q, path in zip(out, outputs):
        _csv(out[q], path)
    ctx.record(key, h, outputs)
    return out


def step_report(ctx: Context):
    years = ctx.years()
    root = ctx.scenario_dir()
    labels_path = root / "cluster" / "labels.csv"
    for p, step in ((root / "validation" / "eens.csv", "validate"), (labels_path, "cluster")):
        if not p.exists():
            raise MissingArtifact(p, step)
    sols = [load_design(ctx, y.label) for y in years]
    matrix = load_matrix(root / "validation")
    events = {y.label: detect_year(ctx, y, s, ctx.network) for y, s in zip(years, sols)}
    tags = _read_tags(labels_path)
    key = f"{ctx.name}:report"
    h = canonical_hash({"designs": _design_hash(ctx), "matrix": file_hash(root / "validation" / "eens.csv"),
                        "tags": file_hash(labels_path), "weather": _weather_hash(ctx),
                        "scenario": repr(ctx.network.scenario)})
    if ctx.cached(key, h):
        ctx.mark_cached(key)
        return None
    report = build_report(years, sols, ctx.network, events, matrix,
                          ctx.network.scenario.sde_window_T, tags)
    outputs = export_report(report, root / "report")
    shares, curves = [], {}
    for y, s in zip(years, sols):
        row = {"weather_year": y.label, **sde_cost_share(s, y, ctx.network, events[y.label])}
        shares.append(row)
        curves[f"{y.label} net_load_gw"] = duration_curve(net_load(y, s, ctx.network) / 1e3)
        curves[f"{y.label} cost_eur"] = duration_curve(hourly_cost(y, s))
    outputs.append(_csv(pd.DataFrame(shares).fillna(0.0), root / "report" / "cost_share.csv", index=False))
    curves = pd.DataFrame(curves)
    curves.index.name = "rank"
    outputs.append(_csv(curves, root / "report" / "duration_curves.csv"))
    ctx.record(key, h, outputs)
    return report


def sensitivity_sweep(ctx: Context, axes: dict) -> pd.DataFrame:
    """Re-detect default events across scenario variants and a threshold ladder.

    Each cell holds the highest threshold (EUR) at which the variant has an
    event overlapping the default event, or "absent".
    """
    if not axes:
        raise ConfigError("sensitivity sweep needs at least one axis")
    unknown = set(axes) - set(SWEEP_AXES)
    if unknown:
        raise ConfigError(f"unsupported sweep axes {sorted(unknown)}; allowed {SWEEP_AXES}")
    years = ctx.years()
    step_solve(ctx)
    base = {y.label: detect_year(ctx, y, load_design(ctx, y.label), ctx.network) for y in years}
    rows = [{"event": e.id, "weather_year": e.weather_year, "start": e.start, "end": e.end}
            for lab in base for e in base[lab]]
    table = pd.DataFrame(rows, columns=["event", "weather_year", "start", "end"])
    variants = [("default", ctx.network)]
    for axis, values in axes.items():
        for v in values:
            variants.append((f"{axis}={v}", apply_scenario(ctx.network, {axis: v})))
    for name, net in variants:
        lp_changed = any(getattr(net.scenario, f) != getattr(ctx.network.scenario, f) for f in LP_FIELDS)
        scen_dir = f"{ctx.name}-sweep-{name}" if lp_changed else None
        if lp_changed:
            step_solve(ctx, net, scen_dir)
        col = []
        found = {lab: {} for lab in base}
        for y in years:
            sol = load_design(ctx, y.label, scen_dir)
            cost = hourly_cost(y, sol)
            for m in ctx.ladder:
                spans = detect_sdes(cost, _sde_config(net, ctx.trim_quantile, m))
                found[y.label][m] = spans
        for lab in base:
            for e in base[lab]:
                hit = "absent"
                for m in ctx.ladder:  # descending
                    if any(e.span.overlaps(s) for s in found[lab][m]):
                        hit = net.scenario.sde_threshold_C * m
                        break
                col.append(hit)
        table[name] = col
    path = _csv(table, ctx.scenario_dir() / "sensitivity" / "comparison.csv", index=False)
    ctx.record(f"{ctx.name}:sweep", canonical_hash({"axes": axes, "ladder": ctx.ladder}), [path])
    return table


# -- entry point --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sdekit", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"sdekit {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=_env("CONFIG"),
                        help="TOML or JSON scenario config, or 'demo' for the bundled fixture [SDEKIT_CONFIG]")
    common.add_argument("--out", default=_env("OUT", "out"), help="output directory [SDEKIT_OUT]")
    common.add_argument("--jobs", type=int, default=int(_env("JOBS", "1")),
                        help="parallel solver processes [SDEKIT_JOBS]")
    common.add_argument("--seed", type=int, default=None if _env("SEED") is None else int(_env("SEED")),
                        help="clustering seed; also seeds synthetic years without one [SDEKIT_SEED]")
    common.add_argument("--threshold-ladder", default=_env("THRESHOLD_LADDER", "1,0.75,0.5,0.25"),
                        help="threshold multipliers for the sweep [SDEKIT_THRESHOLD_LADDER]")
    common.add_argument("--log-level", default=_env("LOG_LEVEL", "WARNING"))
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "synth": "generate synthetic weather years from the config",
        "solve": "design LP for every weather year",
        "detect": "detect and characterise SDEs",
        "cluster": "cluster events and name the clusters",
        "validate": "design x operational validation matrix",
        "similarity": "Wasserstein similarity of weather years",
        "report": "resilience metrics, ranks and cost shares",
        "all": "run every step in order",
        "sweep": "sensitivity sweep over scenario axes and threshold ladder",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, parents=[common], help=text, description=text)
        if name == "sweep":
            sp.add_argument("--axis", action="append", default=[], metavar="NAME=V1,V2",
                            help="sweep axis; defaults to the config's sensitivity.axes")
    return p


def load_context(args) -> Context:
    if not args.config:
        raise UsageError("no config given (--config or SDEKIT_CONFIG)")
    if args.config == "demo":
        from .demo import demo_config
        cfg, path = demo_config(), None
    else:
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file {path} does not exist")
        try:
            cfg = read_config(path)
        except (ValueError, UnicodeDecodeError) as err:
            raise ConfigError(f"{path}: {err}") from None
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return Context(cfg, path, Path(args.out), args.jobs, args.seed, parse_ladder(args.threshold_ladder))


def _sweep_axes(ctx: Context, specs) -> dict:
    if not specs:
        return dict(ctx.config.get("sensitivity", {}).get("axes", {}))
    axes = {}
    for spec in specs:
        name, _, vals = spec.partition("=")
        try:
            axes[name] = [float(v) for v in vals.split(",") if v]
        except ValueError:
            raise UsageError(f"bad --axis {spec!r}") from None
    return axes


def run(ctx: Context, command: str, axes=None):
    has_synth = "synth" in ctx.config.get("weather", {})
    if command == "synth":
        return step_synth(ctx)
    if command == "solve":
        return step_solve(ctx)
    if command == "detect":
        return step_detect(ctx)
    if command == "cluster":
        return step_cluster(ctx)
    if command == "validate":
        return step_validate(ctx)
    if command == "similarity":
        return step_similarity(ctx)
    if command == "report":
        return step_report(ctx)
    if command == "sweep":
        return sensitivity_sweep(ctx, axes or {})
    if command == "all":
        if has_synth:
            step_synth(ctx)
        step_solve(ctx)
        step_detect(ctx)
        step_cluster(ctx)
        step_validate(ctx)
        step_similarity(ctx)
        return step_report(ctx)
    raise UsageError(f"unknown command {command!r}")


def _fail(code: int, err: Exception, command: str | None) -> int:
    payload = {"error": type(err).__name__, "message": str(err), "command": command, "exit_code": code}
    if isinstance(err, MissingArtifact):
        payload["missing"] = err.path
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    command = None
    try:
        args = make_parser().parse_args(argv)
        command = args.command
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        ctx = load_context(args)
        axes = _sweep_axes(ctx, getattr(args, "axis", None)) if command == "sweep" else None
        run(ctx, command, axes)
        return 0
    except UsageError as err:
        return _fail(2, err, command)
    except (ConfigError, DomainError, ValueError, KeyError) as err:
        return _fail(1, err, command)


if __name__ == "__main__":
    sys.exit(main())
