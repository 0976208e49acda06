"""Synthetic nodal load series, power-balance aggregation, meter noise and CSV I/O."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .grid import Topology

__all__ = [
    "MeasurementMatrix",
    "NoiseModel",
    "MeasurementError",
    "sample_loads",
    "aggregate_readings",
    "inject_noise",
    "write_csv",
    "read_csv",
    "children_residual",
]

AggregationMode = Literal["pure_sum", "own_load"]


class MeasurementError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementMatrix:
    """Active-power readings in kW, one row per node and one column per timestep.

    ``individual`` optionally carries each node's own consumption alongside the
    metered aggregate.
    """

    readings: np.ndarray | None
    individual: np.ndarray | None = None

    def __post_init__(self):
        for name in ("readings", "individual"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float)
                if arr.ndim != 2:
                    raise MeasurementError(f"{name} must be 2-D (nodes x timesteps), got shape {arr.shape}")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.readings is None and self.individual is None:
            raise MeasurementError("at least one of readings/individual is required")
        if (
            self.readings is not None
            and self.individual is not None
            and self.readings.shape != self.individual.shape
        ):
            raise MeasurementError(
                f"readings {self.readings.shape} and individual {self.individual.shape} differ in shape"
            )

    @property
    def _any(self) -> np.ndarray:
        return self.readings if self.readings is not None else self.individual

    @property
    def n(self) -> int:
        return self._any.shape[0]

    @property
    def K(self) -> int:
        return self._any.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian meter error.

    ``sigma`` is a standard deviation: kW in additive mode, a fraction of the
    true reading in multiplicative mode.
    """

    sigma: float
    mode: Literal["additive", "multiplicative"] = "additive"
    seed: int | np.random.SeedSequence | None = None

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.mode not in ("additive", "multiplicative"):
            raise ValueError(f"unknown noise mode {self.mode!r}")


def sample_loads(t: Topology, K: int, lo: float = 25.0, hi: float = 50.0, seed=None) -> MeasurementMatrix:
    """Draw i.i.d. uniform per-node consumption on ``[lo, hi]`` kW."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    rng = np.random.default_rng(seed)
    return MeasurementMatrix(readings=None, individual=rng.uniform(lo, hi, size=(t.n, K)))


def aggregate_readings(t: Topology, loads: MeasurementMatrix, mode: AggregationMode = "pure_sum") -> MeasurementMatrix:
    """Turn per-node consumption into metered readings via power balance.

    ``pure_sum``: leaves read their own load, internal nodes read the sum of
    their children's readings (internal nodes' own loads are ignored).
    ``own_load``: every node reads its own load plus its children's readings;
    the individual channel is kept so the own-load share stays recoverable.
    """
    if loads.individual is None:
        raise MeasurementError("aggregation needs the individual (own consumption) channel")
    if loads.n != t.n:
        raise MeasurementError(f"loads cover {loads.n} nodes, topology has {t.n}")
    own = loads.individual
    out = np.zeros_like(own)
    child_sum = np.zeros_like(own)
    has_child = np.zeros(t.n, dtype=bool)
    for p in t.parent_of.values():
        has_child[p] = True
    for v in t.postorder():
        if mode == "pure_sum":
            out[v] = child_sum[v] if has_child[v] else own[v]
        elif mode == "own_load":
            out[v] = own[v] + child_sum[v]
        else:
            raise ValueError(f"unknown aggregation mode {mode!r}")
        if v in t.parent_of:
            child_sum[t.parent_of[v]] += out[v]
    return MeasurementMatrix(readings=out, individual=own)


def inject_noise(X: MeasurementMatrix, nm: NoiseModel) -> MeasurementMatrix:
    """Return a noisy copy of the readings channel; ``X`` is left untouched."""
    if X.readings is None:
        raise MeasurementError("no readings channel to perturb")
    if nm.sigma == 0:
        return X
    rng = np.random.default_rng(nm.seed)
    eps = rng.normal(0.0, nm.sigma, size=X.readings.shape)
    if nm.mode == "additive":
        noisy = X.readings + eps
    else:
        noisy = X.readings * (1.0 + eps)
    return MeasurementMatrix(readings=noisy, individual=X.individual)


def children_residual(t: Topology, readings: np.ndarray) -> np.ndarray:
    """``reading(parent) - sum(children)`` for every internal node, shape (internal, K)."""
    readings = np.asarray(readings, dtype=float)
    parents = sorted(set(t.parent_of.values()))
    res = np.empty((len(parents), readings.shape[1]))
    for row, p in enumerate(parents):
        acc = np.zeros(readings.shape[1])
        # ascending child order, same as aggregate_readings
        for c in t.children(p):
            acc += readings[c]
        res[row] = readings[p] - acc
    return res


def write_csv(X: MeasurementMatrix | np.ndarray) -> str:
    """Serialise readings as CSV text: row i is node i, column k is timestep k."""
    arr = X.readings if isinstance(X, MeasurementMatrix) else np.asarray(X, dtype=float)
    if arr is None:
        arr = X.individual
    buf = io.StringIO()
    buf.write("# node rows; columns " + ",".join(f"t{k}" for k in range(arr.shape[1])) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for row in arr:
        w.writerow(repr(float(v)) for v in row)
    return buf.getvalue()


def read_csv(text: str) -> MeasurementMatrix:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        cells = next(csv.reader([stripped]))
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise MeasurementError(f"line {lineno}: non-numeric cell in {line!r}") from None
        if len(rows[-1]) != len(rows[0]):
            raise MeasurementError(
                f"line {lineno}: ragged row ({len(rows[-1])} cells, expected {len(rows[0])})"
            )
    if not rows:
        raise MeasurementError("no data rows")
    return MeasurementMatrix(readings=np.array(rows))
