"""Command-line entry point: ``gridtopo generate | identify | sweep | oracle``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .experiment import ConfigError, ExperimentConfig, build_config, emit_report, parse_config_text, run_sweep
from .grid import TopologyError, adjacency_matrix, dump_topology, load_topology, random_radial_topology
from .hssp import HsspOptions, identify_topology
from .measurement import (
    MeasurementError,
    NoiseModel,
    aggregate_readings,
    inject_noise,
    read_csv,
    sample_loads,
    write_csv,
)
from .metrics import compare
from .oracle import MAX_ORACLE_NODES, exhaustive_identify

log = logging.getLogger("gridtopo")

USAGE_ERRORS = (ConfigError, TopologyError, MeasurementError, FileNotFoundError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_model_flags(p, multi: bool = False):
    if multi:
        p.add_argument("--nodes", help="node counts, e.g. 13,33,63")
        p.add_argument("--sigma", help="noise levels, e.g. 0.01,0.02")
        p.add_argument("--seeds", help="seed list or range, e.g. 0-19")
        p.add_argument("--seed", dest="seeds_single", help="single seed (same as --seeds N)")
        p.add_argument("--hierarchy", choices=["on", "off", "both"])
    else:
        p.add_argument("--nodes", type=int, default=13)
        p.add_argument("--sigma", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timesteps", type=int, default=None if multi else 10)
    p.add_argument("--noise-mode", choices=["additive", "multiplicative"], default=None if multi else "additive")
    p.add_argument("--load-min", type=float, default=None if multi else 25.0)
    p.add_argument("--load-max", type=float, default=None if multi else 50.0)


def _add_identify_flags(p):
    p.add_argument("--z", type=float, default=3.0)
    p.add_argument("--max-children", type=int, default=8)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridtopo", description="Radial feeder topology identification by hierarchical subset sum.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random feeder and its measurements")
    _add_model_flags(g)
    g.add_argument("--branching", type=int, default=4)
    g.add_argument("--aggregation", choices=["pure_sum", "own_load"], default="pure_sum")
    g.add_argument("--out", required=True, help="output directory")

    i = sub.add_parser("identify", help="identify a topology from a measurement CSV")
    i.add_argument("--measurements", required=True)
    i.add_argument("--sigma", type=float, default=0.0)
    i.add_argument("--noise-mode", choices=["additive", "multiplicative"], default="additive")
    i.add_argument("--hierarchy", choices=["on", "off"], default="off")
    i.add_argument("--layers", help="file with one layer label per node")
    i.add_argument("--topology", help="true edge list: scored against, and the layer source for --hierarchy on")
    _add_identify_flags(i)
    i.add_argument("--out", help="report path (default stdout)")
    i.add_argument("--edges-out", help="also write the identified edge list here")
    i.add_argument("--format", choices=["json", "csv"], default="json")

    s = sub.add_parser("sweep", help="run a (size x sigma x seed) experiment grid")
    s.add_argument("--config", help="key = value settings file")
    s.add_argument("--preset", choices=["table1", "fig4"])
    _add_model_flags(s, multi=True)
    s.add_argument("--z", type=float)
    s.add_argument("--max-children", type=int)
    s.add_argument("--topology")
    s.add_argument("--master-seed", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--timing", choices=["on", "off"], help="record identification wall time (reports stop being byte-stable)")
    s.add_argument("--out", help="report path (default stdout)")
    s.add_argument("--format", choices=["json", "csv"], default="json")

    o = sub.add_parser("oracle", help="exhaustive tree search for tiny feeders")
    o.add_argument("--measurements", help="measurement CSV; omit to generate an instance")
    o.add_argument("--root", type=int, default=0)
    _add_model_flags(o)
    o.set_defaults(nodes=6)
    o.add_argument("--out", help="report path (default stdout)")
    return parser


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _generate_instance(args, n: int):
    topo = random_radial_topology(n, getattr(args, "branching", 4), np.random.SeedSequence([args.seed, 0]))
    loads = sample_loads(topo, args.timesteps, args.load_min, args.load_max, np.random.SeedSequence([args.seed, 1]))
    X = aggregate_readings(topo, loads, getattr(args, "aggregation", "pure_sum"))
    X = inject_noise(X, NoiseModel(args.sigma, args.noise_mode, np.random.SeedSequence([args.seed, 2])))
    return topo, X


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    topo, X = _generate_instance(args, args.nodes)
    (out / "topology.edges").write_text(dump_topology(topo))
    (out / "layers.txt").write_text("\n".join(str(v) for v in topo.layers()) + "\n")
    (out / "loads.csv").write_text(write_csv(X.individual))
    (out / "measurements.csv").write_text(write_csv(X))
    print(f"wrote {topo.n}-node feeder, {X.K} timesteps, sigma={args.sigma} to {out}")
    return 0


def _read_layers(path: str) -> np.ndarray:
    values = Path(path).read_text().split()
    try:
        return np.array([int(v) for v in values], dtype=int)
    except ValueError:
        raise UsageError(f"layer file {path} must hold integers") from None


def cmd_identify(args) -> int:
    X = read_csv(Path(args.measurements).read_text())
    truth = load_topology(Path(args.topology).read_text(), n=X.n) if args.topology else None
    layers = None
    if args.hierarchy == "on":
        if args.layers:
            layers = _read_layers(args.layers)
        elif truth is not None:
            layers = truth.layers()
        else:
            raise UsageError("--hierarchy on needs --layers or --topology")
    opts = HsspOptions(hierarchy=layers, z=args.z, max_children=args.max_children, noise_mode=args.noise_mode)
    start = time.perf_counter()
    est = identify_topology(X, args.sigma, opts)
    elapsed = time.perf_counter() - start
    if args.edges_out:
        lines = [f"# identified topology, n={X.n}"] + [f"{p} {c}" for p, c, _ in est.edges]
        Path(args.edges_out).write_text("\n".join(lines) + "\n")
    if args.format == "csv":
        text = "parent,child,votes\n" + "".join(f"{p},{c},{v}\n" for p, c, v in est.edges)
    else:
        doc = {
            "config": {
                "measurements": args.measurements,
                "sigma": args.sigma,
                "noise_mode": args.noise_mode,
                "hierarchy": args.hierarchy,
                "z": args.z,
                "max_children": args.max_children,
            },
            "nodes": X.n,
            "timesteps": X.K,
            "edges": [{"parent": p, "child": c, "votes": v} for p, c, v in est.edges],
            "accuracy": compare(est.adjacency, adjacency_matrix(truth)).as_dict() if truth else None,
        }
        text = json.dumps(doc, indent=2) + "\n"
    log.info("identified %d edges in %.3f s", len(est.edges), elapsed)
    _write(text, args.out)
    return 0


def cmd_sweep(args) -> int:
    file_settings = parse_config_text(Path(args.config).read_text()) if args.config else {}
    overrides = {
        "nodes": args.nodes,
        "sigmas": args.sigma,
        "seeds": args.seeds if args.seeds is not None else args.seeds_single,
        "hierarchy": args.hierarchy,
        "timesteps": args.timesteps,
        "noise_mode": args.noise_mode,
        "load_min": args.load_min,
        "load_max": args.load_max,
        "z": args.z,
        "max_children": args.max_children,
        "topology": args.topology,
        "master_seed": args.master_seed,
        "jobs": args.jobs,
        "timing": args.timing,
    }
    cfg: ExperimentConfig = build_config(args.preset, file_settings, overrides)
    result = run_sweep(cfg)
    text = emit_report(result, None, args.format)
    _write(text, args.out)
    failed = sum(c["failures"] for c in result.cells)
    if failed:
        log.warning("%d run(s) failed; see the report", failed)
    return 0


def cmd_oracle(args) -> int:
    truth = None
    if args.measurements:
        X = read_csv(Path(args.measurements).read_text())
    else:
        truth, X = _generate_instance(args, args.nodes)
    if X.n > MAX_ORACLE_NODES:
        raise UsageError(f"oracle handles at most {MAX_ORACLE_NODES} nodes, got {X.n}")
    result = exhaustive_identify(X, X.n, args.root)
    oracle_adj = adjacency_matrix(result.best_tree)
    hssp = identify_topology(X, args.sigma if not args.measurements else 0.0, HsspOptions(hierarchy=result.best_tree.layers()))
    doc = {
        "nodes": X.n,
        "root": args.root,
        "trees_searched": result.n_trees,
        "residual": result.residual,
        "edges": [[p, c] for p, c in result.best_tree.edges],
        "hssp_agrees": bool(np.array_equal(hssp.adjacency, oracle_adj)),
        "accuracy_vs_truth": compare(oracle_adj, adjacency_matrix(truth)).as_dict() if truth else None,
    }
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


COMMANDS = {"generate": cmd_generate, "identify": cmd_identify, "sweep": cmd_sweep, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"gridtopo: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.exception("runtime failure")
        print(f"gridtopo: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
