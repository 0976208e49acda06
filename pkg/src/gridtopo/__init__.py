"""Radial distribution feeder topology identification from power readings."""

from .estimator import ExhaustiveTreeIdentifier, HSSPTopologyIdentifier
from .experiment import ConfigError, ExperimentConfig, PRESETS, run_single, run_sweep
from .grid import (
    Topology,
    TopologyError,
    adjacency_matrix,
    check_radial,
    dump_topology,
    ieee13_topology,
    load_topology,
    random_radial_topology,
    validate_radial,
)
from .hssp import EstimatedTopology, HsspOptions, VoteTable, identify_topology
from .measurement import (
    MeasurementError,
    MeasurementMatrix,
    NoiseModel,
    aggregate_readings,
    inject_noise,
    read_csv,
    sample_loads,
    write_csv,
)
from .metrics import AccuracyReport, compare
from .oracle import OracleResult, exhaustive_identify
from .subset_sum import SubsetHit, SubsetQuery, solve

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "ConfigError",
    "EstimatedTopology",
    "ExhaustiveTreeIdentifier",
    "ExperimentConfig",
    "HSSPTopologyIdentifier",
    "HsspOptions",
    "MeasurementError",
    "MeasurementMatrix",
    "NoiseModel",
    "OracleResult",
    "PRESETS",
    "SubsetHit",
    "SubsetQuery",
    "Topology",
    "TopologyError",
    "VoteTable",
    "adjacency_matrix",
    "aggregate_readings",
    "check_radial",
    "compare",
    "dump_topology",
    "exhaustive_identify",
    "identify_topology",
    "ieee13_topology",
    "inject_noise",
    "load_topology",
    "random_radial_topology",
    "read_csv",
    "run_single",
    "run_sweep",
    "sample_loads",
    "solve",
    "validate_radial",
    "write_csv",
]
