"""Seeded identification experiments: single runs, sweeps and reports.

Each run draws its topology and loads from ``(master_seed, nodes, seed)`` and
its meter noise from ``(master_seed, nodes, seed, sigma index)``, so the same
seed yields the same feeder across every noise level and every sweep layout.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .grid import Topology, adjacency_matrix, load_topology, random_radial_topology
from .hssp import HsspOptions, identify_topology
from .measurement import NoiseModel, aggregate_readings, inject_noise, sample_loads
from .metrics import compare

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "PRESETS",
    "parse_config_text",
    "run_single",
    "run_sweep",
    "emit_report",
    "render_report",
]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    nodes: tuple[int, ...] = (13,)
    topology: str | None = None
    timesteps: int = 10
    load_min: float = 25.0
    load_max: float = 50.0
    sigmas: tuple[float, ...] = (0.01,)
    noise_mode: str = "additive"
    aggregation: str = "pure_sum"
    hierarchy: str = "on"  # on | off | both
    z: float = 3.0
    floor: float = 1e-6
    max_children: int = 8
    branching: int = 4
    seeds: tuple[int, ...] = (0,)
    master_seed: int = 0
    timing: bool = False
    jobs: int = 1

    def __post_init__(self):
        if not self.nodes and self.topology is None:
            raise ConfigError("need at least one node count or a topology file")
        if any(n < 1 for n in self.nodes):
            raise ConfigError(f"node counts must be >= 1, got {self.nodes}")
        if self.timesteps < 1:
            raise ConfigError(f"timesteps must be >= 1, got {self.timesteps}")
        if not self.load_min < self.load_max:
            raise ConfigError(f"need load_min < load_max, got {self.load_min} and {self.load_max}")
        if not self.sigmas or any(not s >= 0 for s in self.sigmas):
            raise ConfigError(f"sigma list must be nonempty and nonnegative, got {self.sigmas}")
        if not self.seeds:
            raise ConfigError("seed list is empty")
        if self.noise_mode not in ("additive", "multiplicative"):
            raise ConfigError(f"noise_mode must be additive or multiplicative, got {self.noise_mode!r}")
        if self.aggregation not in ("pure_sum", "own_load"):
            raise ConfigError(f"aggregation must be pure_sum or own_load, got {self.aggregation!r}")
        if self.hierarchy not in ("on", "off", "both"):
            raise ConfigError(f"hierarchy must be on, off or both, got {self.hierarchy!r}")
        if not self.z >= 0 or not self.floor >= 0:
            raise ConfigError("z and floor must be >= 0")
        if self.max_children < 1 or self.branching < 1:
            raise ConfigError("max_children and branching must be >= 1")
        if self.topology is not None and not Path(self.topology).is_file():
            raise ConfigError(f"topology file not found: {self.topology}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    @property
    def hierarchy_modes(self) -> tuple[bool, ...]:
        return {"on": (True,), "off": (False,), "both": (True, False)}[self.hierarchy]

    def echo(self) -> dict:
        """Provenance block embedded in every report (``jobs`` excluded)."""
        d = asdict(self)
        d.pop("jobs")
        d["nodes"] = list(self.nodes)
        d["sigmas"] = list(self.sigmas)
        d["seeds"] = list(self.seeds)
        return d


PRESETS = {
    "table1": dict(
        nodes=(13, 33, 63, 93, 123),
        sigmas=(0.01, 0.02, 0.05, 2.0),
        seeds=tuple(range(20)),
        timesteps=10,
        load_min=25.0,
        load_max=50.0,
        hierarchy="on",
    ),
    "fig4": dict(
        nodes=(13, 33, 63),
        sigmas=(0.02,),
        seeds=tuple(range(30)),
        timesteps=10,
        load_min=25.0,
        load_max=50.0,
        hierarchy="both",
    ),
}


def _parse_int_list(text: str) -> tuple[int, ...]:
    out: list[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in str(text).replace(" ", "").split(",") if p)


def _parse_bool(text: str) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "nodes": _parse_int_list,
    "seeds": _parse_int_list,
    "sigmas": _parse_float_list,
    "timing": _parse_bool,
}
_ALIASES = {"sigma": "sigmas", "seed": "seeds", "n": "nodes"}


def coerce_settings(raw: dict) -> dict:
    """Convert string settings (config file or flags) to config field values."""
    names = {f.name: f for f in fields(ExperimentConfig)}
    out = {}
    for key, value in raw.items():
        key = key.strip().replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in names:
            raise ConfigError(f"unknown setting {key!r}")
        if value is None:
            continue
        try:
            if key in _CONVERTERS:
                value = _CONVERTERS[key](value)
            elif key in ("topology", "noise_mode", "aggregation", "hierarchy"):
                value = str(value).strip()
            elif key in ("timesteps", "max_children", "branching", "master_seed", "jobs"):
                value = int(value)
            else:
                value = float(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
        out[key] = value
    return out


def parse_config_text(text: str) -> dict:
    """Read ``key = value`` lines; '#' starts a comment. Returns raw strings."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def build_config(preset: str | None = None, file_settings: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Layer preset < config file < explicit overrides."""
    settings: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        settings.update(PRESETS[preset])
    settings.update(coerce_settings(file_settings or {}))
    settings.update(coerce_settings(overrides or {}))
    return ExperimentConfig(**settings)


@dataclass
class RunRecord:
    nodes: int
    sigma: float
    hierarchy: str
    seed: int
    edge_accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    element_agreement: float | None = None
    wall_time: float | None = None
    error: str | None = None


@dataclass
class ExperimentResult:
    config: dict
    runs: list[RunRecord] = field(default_factory=list)
    cells: list[dict] = field(default_factory=list)


def _seed_seq(cfg: ExperimentConfig, *parts: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg.master_seed, *parts])


def _fixed_topology(cfg: ExperimentConfig) -> Topology | None:
    if cfg.topology is None:
        return None
    return load_topology(Path(cfg.topology).read_text())


def _run_one(cfg: ExperimentConfig, n: int, sigma_idx: int, seed: int, hierarchical: bool) -> RunRecord:
    sigma = cfg.sigmas[sigma_idx]
    rec = RunRecord(nodes=n, sigma=sigma, hierarchy="on" if hierarchical else "off", seed=seed)
    try:
        topo = _fixed_topology(cfg)
        if topo is None:
            topo = random_radial_topology(n, cfg.branching, _seed_seq(cfg, n, seed, 0))
        loads = sample_loads(topo, cfg.timesteps, cfg.load_min, cfg.load_max, _seed_seq(cfg, n, seed, 1))
        X = aggregate_readings(topo, loads, cfg.aggregation)
        X = inject_noise(X, NoiseModel(sigma, cfg.noise_mode, _seed_seq(cfg, n, seed, 2, sigma_idx)))
        opts = HsspOptions(
            hierarchy=topo.layers() if hierarchical else None,
            z=cfg.z,
            floor=cfg.floor,
            max_children=cfg.max_children,
            mode=cfg.aggregation,
            noise_mode=cfg.noise_mode,
        )
        start = time.perf_counter()
        est = identify_topology(X, sigma, opts)
        elapsed = time.perf_counter() - start
        report = compare(est.adjacency, adjacency_matrix(topo))
        rec.edge_accuracy = report.edge_accuracy
        rec.precision = report.precision
        rec.recall = report.recall
        rec.f1 = report.f1
        rec.element_agreement = report.element_agreement
        rec.wall_time = elapsed if cfg.timing else None
    except Exception as exc:  # recorded per run; the sweep carries on
        log.warning("run n=%s sigma=%s seed=%s failed: %s", n, sigma, seed, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _tasks(cfg: ExperimentConfig):
    sizes = cfg.nodes if cfg.topology is None else (_fixed_topology(cfg).n,)
    for n in sizes:
        for si in range(len(cfg.sigmas)):
            for hierarchical in cfg.hierarchy_modes:
                for seed in cfg.seeds:
                    yield (n, si, seed, hierarchical)


def _star(args):
    cfg, task = args
    return _run_one(cfg, *task)


def _summarise(values: list[float]) -> dict:
    if not values:
        return dict(mean=None, std=None, min=None, max=None)
    arr = np.array(values, dtype=float)
    return dict(mean=float(arr.mean()), std=float(arr.std()), min=float(arr.min()), max=float(arr.max()))


def _cells(cfg: ExperimentConfig, runs: list[RunRecord]) -> list[dict]:
    grouped: dict[tuple, list[RunRecord]] = {}
    for r in runs:
        grouped.setdefault((r.nodes, r.sigma, r.hierarchy), []).append(r)
    cells = []
    for (n, sigma, hier), group in grouped.items():
        ok = [r for r in group if r.error is None]
        acc = _summarise([r.edge_accuracy for r in ok])
        times = [r.wall_time for r in ok if r.wall_time is not None]
        cells.append(
            dict(
                nodes=n,
                sigma=sigma,
                hierarchy=hier,
                runs=len(group),
                failures=len(group) - len(ok),
                mean_accuracy=acc["mean"],
                std_accuracy=acc["std"],
                min_accuracy=acc["min"],
                max_accuracy=acc["max"],
                mean_precision=_summarise([r.precision for r in ok])["mean"],
                mean_f1=_summarise([r.f1 for r in ok])["mean"],
                mean_element_agreement=_summarise([r.element_agreement for r in ok])["mean"],
                mean_wall_time=float(np.mean(times)) if times else None,
            )
        )
    return cells


def run_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the full (size x sigma x hierarchy x seed) grid."""
    tasks = list(_tasks(cfg))
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            runs = list(pool.map(_star, [(cfg, t) for t in tasks], chunksize=4))
    else:
        runs = [_run_one(cfg, *t) for t in tasks]
    return ExperimentResult(config=cfg.echo(), runs=runs, cells=_cells(cfg, runs))


def run_single(cfg: ExperimentConfig) -> ExperimentResult:
    """One run: first size, first sigma, first seed, first hierarchy setting."""
    single = replace(
        cfg,
        nodes=cfg.nodes[:1],
        sigmas=cfg.sigmas[:1],
        seeds=cfg.seeds[:1],
        hierarchy="on" if cfg.hierarchy_modes[0] else "off",
        jobs=1,
    )
    return run_sweep(single)


CSV_COLUMNS = (
    "nodes",
    "sigma",
    "hierarchy",
    "runs",
    "failures",
    "mean_accuracy",
    "std_accuracy",
    "min_accuracy",
    "max_accuracy",
    "mean_wall_time",
)


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_report(result: ExperimentResult, fmt: str = "json") -> str:
    if fmt == "json":
        doc = {
            "config": result.config,
            "cells": [{k: _clean(v) for k, v in c.items()} for c in result.cells],
            "runs": [{k: _clean(v) for k, v in asdict(r).items()} for r in result.runs],
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in result.cells:
            w.writerow("" if c[k] is None else c[k] for k in CSV_COLUMNS)
        return buf.getvalue()
    raise ConfigError(f"unknown report format {fmt!r}")


def emit_report(result: ExperimentResult, path: str | Path | None, fmt: str = "json") -> str:
    """Write the report to ``path`` (or return it only, when path is None)."""
    text = render_report(result, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text
