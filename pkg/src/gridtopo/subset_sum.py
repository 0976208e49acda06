"""Subset sum over real-valued pools with a tolerance window.

Every backend returns the same canonical hit list: hits sorted by ascending
deviation, then cardinality, then lexicographic members, truncated at
``limit``. Internal sums are only used to prune; membership in the window
is always decided on ``math.fsum`` of the member values so that backends
agree exactly at the window edges.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SubsetQuery",
    "SubsetHit",
    "SolverError",
    "enumerate_exhaustive",
    "solve_branch_bound",
    "solve_meet_middle",
    "solve",
    "BACKENDS",
]

EXHAUSTIVE_MAX_POOL = 25
MEET_MIDDLE_MAX_POOL = 40


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SubsetQuery:
    """Find nonempty subsets of ``pool`` whose sum is within ``tolerance`` of ``target``.

    ``pool`` holds ``(node index, value)`` pairs. ``tolerance`` is either one
    window half-width or a sequence giving the half-width for subset sizes
    ``1 .. max_size``. ``limit=None`` disables truncation.
    """

    pool: tuple[tuple[int, float], ...]
    target: float
    tolerance: float | tuple[float, ...] = 0.0
    max_size: int = 8
    limit: int | None = 64

    def __post_init__(self):
        object.__setattr__(self, "pool", tuple((int(i), float(v)) for i, v in self.pool))
        if isinstance(self.tolerance, (int, float, np.floating, np.integer)):
            tol = float(self.tolerance)
            if not tol >= 0:
                raise SolverError(f"tolerance must be >= 0, got {tol}")
            object.__setattr__(self, "tolerance", tol)
        else:
            tol = tuple(float(x) for x in self.tolerance)
            if len(tol) < self.max_size:
                raise SolverError(f"need {self.max_size} per-size tolerances, got {len(tol)}")
            if any(not x >= 0 for x in tol):
                raise SolverError("tolerances must be >= 0")
            object.__setattr__(self, "tolerance", tol)
        if self.max_size < 1:
            raise SolverError(f"max_size must be >= 1, got {self.max_size}")
        if self.limit is not None and self.limit < 1:
            raise SolverError(f"limit must be >= 1, got {self.limit}")
        ids = [i for i, _ in self.pool]
        if len(set(ids)) != len(ids):
            raise SolverError("duplicate node index in pool")

    def tol(self, size: int) -> float:
        if isinstance(self.tolerance, float):
            return self.tolerance
        return self.tolerance[size - 1]

    @property
    def max_tol(self) -> float:
        if isinstance(self.tolerance, float):
            return self.tolerance
        return max(self.tolerance[: self.max_size])

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.pool]


@dataclass(frozen=True)
class SubsetHit:
    members: tuple[int, ...]
    achieved_sum: float
    deviation: float

    def sort_key(self):
        return (self.deviation, len(self.members), self.members)


def _hit(q: SubsetQuery, positions: Sequence[int]) -> SubsetHit | None:
    """Build a hit from pool positions if it lies in the window, else None."""
    vals = [q.pool[p][1] for p in positions]
    total = math.fsum(vals)
    dev = abs(total - q.target)
    if dev <= q.tol(len(positions)):
        members = tuple(sorted(q.pool[p][0] for p in positions))
        return SubsetHit(members, total, dev)
    return None


def _finish(q: SubsetQuery, hits: list[SubsetHit]) -> list[SubsetHit]:
    hits.sort(key=SubsetHit.sort_key)
    if q.limit is not None:
        del hits[q.limit :]
    return hits


def _slack(q: SubsetQuery) -> float:
    # absorbs rounding of running sums used for pruning
    scale = abs(q.target) + sum(abs(v) for v in q.values)
    return 1e-9 * max(scale, 1.0)


def enumerate_exhaustive(q: SubsetQuery) -> list[SubsetHit]:
    """Check every nonempty subset up to ``max_size``. The correctness oracle."""
    if len(q.pool) > EXHAUSTIVE_MAX_POOL:
        raise SolverError(f"pool of {len(q.pool)} exceeds exhaustive limit {EXHAUSTIVE_MAX_POOL}")
    hits = []
    for size in range(1, min(q.max_size, len(q.pool)) + 1):
        for combo in itertools.combinations(range(len(q.pool)), size):
            h = _hit(q, combo)
            if h is not None:
                hits.append(h)
    return _finish(q, hits)


def solve_branch_bound(q: SubsetQuery) -> list[SubsetHit]:
    """Depth-first search over values sorted descending with sum bounds.

    A branch is cut when its running sum already overshoots the window, or
    when even the largest admissible completion cannot reach it. Requires
    nonnegative values.
    """
    if any(v < 0 for v in q.values):
        raise SolverError("branch and bound needs nonnegative pool values")
    order = sorted(range(len(q.pool)), key=lambda p: (-q.pool[p][1], q.pool[p][0]))
    vals = [q.pool[p][1] for p in order]
    n = len(vals)
    prefix = [0.0]
    for v in vals:
        prefix.append(prefix[-1] + v)
    slack = _slack(q)
    hi = q.target + q.max_tol + slack
    lo = q.target - q.max_tol - slack
    max_size = q.max_size
    hits: list[SubsetHit] = []
    chosen: list[int] = []

    def dfs(start: int, total: float) -> None:
        room = max_size - len(chosen)
        for i in range(start, n):
            s = total + vals[i]
            if s > hi:
                continue  # later values are smaller and may still fit
            # best completion from here: take vals[i] plus the next room-1 largest
            stop = min(n, i + room)
            if total + prefix[stop] - prefix[i] < lo:
                return  # suffix is sorted, so no later start does better
            chosen.append(order[i])
            if s >= lo:
                h = _hit(q, chosen)
                if h is not None:
                    hits.append(h)
            if room > 1:
                dfs(i + 1, s)
            chosen.pop()

    dfs(0, 0.0)
    return _finish(q, hits)


def _half_sums(vals: np.ndarray, max_size: int):
    """All subset sums of ``vals`` with their bitmasks and sizes (size <= max_size)."""
    sums = np.zeros(1)
    masks = np.zeros(1, dtype=np.int64)
    sizes = np.zeros(1, dtype=np.int64)
    for j, v in enumerate(vals):
        keep = sizes < max_size
        sums = np.concatenate([sums, sums[keep] + v])
        masks = np.concatenate([masks, masks[keep] | (1 << j)])
        sizes = np.concatenate([sizes, sizes[keep] + 1])
    return sums, masks, sizes


def solve_meet_middle(q: SubsetQuery) -> list[SubsetHit]:
    """Split the pool in two, enumerate each half, window-join on sorted sums."""
    n = len(q.pool)
    if n > MEET_MIDDLE_MAX_POOL:
        raise SolverError(f"pool of {n} exceeds meet-in-the-middle limit {MEET_MIDDLE_MAX_POOL}")
    if n == 0:
        return []
    vals = np.array(q.values)
    half = n // 2
    ls, lm, lz = _half_sums(vals[:half], q.max_size)
    rs, rm, rz = _half_sums(vals[half:], q.max_size)
    order = np.argsort(rs, kind="stable")
    rs, rm, rz = rs[order], rm[order], rz[order]
    slack = _slack(q)
    lo_idx = np.searchsorted(rs, q.target - q.max_tol - slack - ls, side="left")
    hi_idx = np.searchsorted(rs, q.target + q.max_tol + slack - ls, side="right")
    counts = np.maximum(hi_idx - lo_idx, 0)
    if counts.sum() == 0:
        return []
    left = np.repeat(np.arange(len(ls)), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    right = np.repeat(lo_idx, counts) + offsets
    size = lz[left] + rz[right]
    ok = (size >= 1) & (size <= q.max_size)
    hits = []
    for li, ri in zip(left[ok], right[ok]):
        positions = [j for j in range(half) if lm[li] >> j & 1]
        positions += [half + j for j in range(n - half) if rm[ri] >> j & 1]
        h = _hit(q, positions)
        if h is not None:
            hits.append(h)
    return _finish(q, hits)


BACKENDS = {
    "exhaustive": enumerate_exhaustive,
    "branch_bound": solve_branch_bound,
    "meet_middle": solve_meet_middle,
}


def solve(q: SubsetQuery, backend: str = "branch_bound") -> list[SubsetHit]:
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise SolverError(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return fn(q)
