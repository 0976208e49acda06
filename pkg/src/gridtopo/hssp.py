"""Hierarchical subset-sum topology identification.

Each candidate parent looks for a set of candidate children whose readings
add up to its own at every timestep. Matches are tallied across timesteps,
the best-supported set per parent wins, and children claimed by several
parents go to the strongest claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from numba import njit

from .measurement import MeasurementError, MeasurementMatrix
from .subset_sum import SubsetQuery, solve

__all__ = [
    "HsspOptions",
    "VoteTable",
    "EstimatedTopology",
    "partition_nodes",
    "tolerance_for",
    "vote_subsets",
    "reduce_redundant",
    "identify_topology",
]


@dataclass(frozen=True)
class HsspOptions:
    """Knobs for :func:`identify_topology`.

    hierarchy
        Layer label per node, or None to search without layer information.
    z, floor
        Matching window is ``max(floor, z * sigma * sqrt(size + 1))`` kW.
    max_children
        Largest child set considered for one parent.
    vote_limit
        Hits kept per timestep query (``engine="per_timestep"`` only).
    mode
        ``pure_sum`` (parent reads its children's total) or ``own_load``
        (parent also reads its own consumption, taken from the individual
        channel).
    noise_mode
        ``additive``: sigma in kW. ``multiplicative``: sigma is a fraction
        of the reading; the window scales with the parent's reading.
    engine
        ``joint`` searches for the best-supported sets across all timesteps
        at once; ``per_timestep`` runs one subset-sum query per timestep and
        tallies every hit.
    min_vote_fraction
        Sets supported by fewer than ``ceil(fraction * K)`` timesteps never
        win.
    size_slack
        The joint engine keeps sets up to this many members larger than the
        smallest best-supported one; they serve as fallbacks when sets
        collide during reduction.
    rank_by_fit
        Break vote ties by closeness of fit before falling back to member
        order. None means on with layer labels, off without: in a flat
        search, rival sets that only swap near-identical readings (a node
        and its only child) differ in fit by noise alone.
    """

    hierarchy: Sequence[int] | None = None
    z: float = 3.0
    floor: float = 1e-6
    max_children: int = 8
    vote_limit: int = 64
    mode: Literal["pure_sum", "own_load"] = "pure_sum"
    noise_mode: Literal["additive", "multiplicative"] = "additive"
    engine: Literal["joint", "per_timestep"] = "joint"
    backend: str = "branch_bound"
    dominance_pruning: bool = True
    min_vote_fraction: float = 0.5
    rank_by_fit: bool | None = None
    size_slack: int = 3

    def __post_init__(self):
        if not self.z >= 0:
            raise ValueError(f"z must be >= 0, got {self.z}")
        if not self.floor >= 0:
            raise ValueError(f"floor must be >= 0, got {self.floor}")
        if self.max_children < 1:
            raise ValueError(f"max_children must be >= 1, got {self.max_children}")
        if self.vote_limit < 1:
            raise ValueError(f"vote_limit must be >= 1, got {self.vote_limit}")
        if self.mode not in ("pure_sum", "own_load"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.noise_mode not in ("additive", "multiplicative"):
            raise ValueError(f"unknown noise_mode {self.noise_mode!r}")
        if self.engine not in ("joint", "per_timestep"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.size_slack < 0:
            raise ValueError(f"size_slack must be >= 0, got {self.size_slack}")
        if not 0 <= self.min_vote_fraction <= 1:
            raise ValueError("min_vote_fraction must lie in [0, 1]")
        if self.hierarchy is not None:
            object.__setattr__(self, "hierarchy", tuple(int(h) for h in self.hierarchy))

    @property
    def hierarchical(self) -> bool:
        return self.hierarchy is not None

    @property
    def fit_ranking(self) -> bool:
        return self.hierarchical if self.rank_by_fit is None else self.rank_by_fit


@dataclass
class VoteTable:
    """Per-parent tally of candidate child sets over ``K`` timesteps.

    ``scores`` holds the mean squared window-normalised deviation of each
    tallied set; lower is a closer fit.
    """

    parent: int
    K: int
    tallies: dict[tuple[int, ...], int] = field(default_factory=dict)
    scores: dict[tuple[int, ...], float] = field(default_factory=dict)

    def ranked(self, by_fit: bool = True) -> list[tuple[tuple[int, ...], int]]:
        """Sets ordered best first: votes, then fewer members, then fit, then members."""
        return sorted(
            self.tallies.items(),
            key=lambda kv: (-kv[1], len(kv[0]), self.scores.get(kv[0], 0.0) if by_fit else 0.0, kv[0]),
        )

    def winner(self, min_votes: int = 1, by_fit: bool = True):
        for members, votes in self.ranked(by_fit):
            if votes >= max(min_votes, 1):
                return members, votes
            break
        return None


@dataclass(frozen=True)
class EstimatedTopology:
    adjacency: np.ndarray
    edges: tuple[tuple[int, int, int], ...]
    tables: tuple[VoteTable, ...] = ()

    @property
    def edge_set(self) -> set[tuple[int, int]]:
        return {(min(p, c), max(p, c)) for p, c, _ in self.edges}

    @property
    def parent_of(self) -> dict[int, int]:
        return {c: p for p, c, _ in self.edges}


def tolerance_for(subset_size: int, sigma: float, opts: HsspOptions) -> float:
    """Matching half-width for a parent with ``subset_size`` children.

    The residual of parent minus children sums ``subset_size + 1``
    independent meter errors.
    """
    if subset_size < 1:
        raise ValueError(f"subset_size must be >= 1, got {subset_size}")
    return max(opts.floor, opts.z * sigma * math.sqrt(subset_size + 1))


def _tolerance_table(targets: np.ndarray, sigma: float, opts: HsspOptions) -> np.ndarray:
    """Window half-width by subset size (row 0 unused) and timestep, shape (max+1, K)."""
    K = targets.shape[0]
    sizes = np.arange(opts.max_children + 1)
    if opts.noise_mode == "additive":
        scale = np.full(K, sigma)
    else:
        scale = sigma * np.abs(targets)
    tol = opts.z * scale[None, :] * np.sqrt(sizes + 1.0)[:, None]
    return np.maximum(tol, opts.floor)


def _check_layers(hierarchy, n: int) -> np.ndarray:
    layers = np.asarray(hierarchy, dtype=int)
    if layers.shape != (n,):
        raise MeasurementError(f"hierarchy has {layers.size} labels for {n} nodes")
    if (layers < 0).any():
        raise MeasurementError("layer labels must be nonnegative")
    return layers


def _readings(X) -> np.ndarray:
    if isinstance(X, MeasurementMatrix):
        R = X.readings
        if R is None:
            raise MeasurementError("measurement matrix has no readings channel")
    else:
        R = np.asarray(X, dtype=float)
    if R.ndim != 2:
        raise MeasurementError(f"readings must be 2-D, got shape {R.shape}")
    if not np.isfinite(R).all():
        raise MeasurementError("readings contain missing or non-finite entries")
    return R


def partition_nodes(X, opts: HsspOptions, sigma: float = 0.0) -> tuple[list[int], dict[int, list[int]]]:
    """Candidate parents and the candidate child pool of each.

    With layer labels, a parent at layer ``l`` searches exactly the nodes at
    layer ``l + 1``. Without them every other node is a candidate, minus
    those whose reading exceeds the parent's by more than the size-1 window
    at some timestep (a child never outweighs its parent when loads are
    nonnegative). That pruning switches off when any reading is negative.
    """
    R = _readings(X)
    n = R.shape[0]
    if opts.hierarchical:
        layers = _check_layers(opts.hierarchy, n)
        by_layer: dict[int, list[int]] = {}
        for v in range(n):
            by_layer.setdefault(int(layers[v]), []).append(v)
        parents = [v for v in range(n) if int(layers[v]) + 1 in by_layer]
        pools = {p: list(by_layer[int(layers[p]) + 1]) for p in parents}
        return parents, pools

    parents = list(range(n))
    pools = {p: [c for c in range(n) if c != p] for p in parents}
    if opts.dominance_pruning and n > 1 and (R >= 0).all():
        one_off = np.array([_tolerance_table(R[p], sigma, opts)[1] for p in range(n)])
        # exceeds[p, c]: c outweighs p somewhere beyond the window
        exceeds = (R[None, :, :] > R[:, None, :] + one_off[:, None, :]).any(axis=2)
        pools = {p: [c for c in pools[p] if not exceeds[p, c]] for p in parents}
    return parents, pools


def _targets(R: np.ndarray, X, parent: int, opts: HsspOptions) -> np.ndarray:
    if opts.mode == "pure_sum":
        return R[parent]
    individual = X.individual if isinstance(X, MeasurementMatrix) else None
    if individual is None:
        raise MeasurementError("own_load mode needs the individual consumption channel")
    return R[parent] - individual[parent]


def _fit_score(dev: np.ndarray, tol_row: np.ndarray) -> float:
    return float(np.mean((dev / tol_row) ** 2))


def vote_subsets(parent: int, pool: Sequence[int], X, opts: HsspOptions, sigma: float = 0.0) -> VoteTable:
    """Tally candidate child sets of ``parent`` over all timesteps."""
    if parent in pool:
        raise ValueError(f"pool for parent {parent} contains the parent itself")
    R = _readings(X)
    K = R.shape[1]
    target = _targets(R, X, parent, opts)
    tol = _tolerance_table(target, sigma, opts)
    table = VoteTable(parent=parent, K=K)
    pool = sorted(pool)
    if not pool:
        return table
    if opts.engine == "per_timestep":
        for k in range(K):
            q = SubsetQuery(
                pool=tuple((c, R[c, k]) for c in pool),
                target=target[k],
                tolerance=tuple(tol[1:, k]),
                max_size=opts.max_children,
                limit=opts.vote_limit,
            )
            for hit in solve(q, opts.backend):
                table.tallies[hit.members] = table.tallies.get(hit.members, 0) + 1
        for members in table.tallies:
            dev = R[list(members)].sum(axis=0) - target
            table.scores[members] = _fit_score(dev, tol[len(members)])
        return table

    min_votes = max(1, math.ceil(opts.min_vote_fraction * K))
    found = _joint_search(R[pool], pool, target, tol, opts.max_children, min_votes, opts.size_slack)
    for members, votes, score in found:
        table.tallies[members] = votes
        table.scores[members] = score
    return table


def _joint_search(vals, ids, target, tol, max_size, min_votes, size_slack):
    """Sets with the highest achievable tally, found without per-timestep enumeration.

    Tries tally thresholds from K downward and stops at the first threshold
    that admits any set. A branch is dropped once fewer timesteps than the
    threshold can still be matched: a timestep dies when the running sum
    overshoots the widest window (values nonnegative) or when the largest
    admissible completion falls short of it.
    """
    vals = np.asarray(vals, dtype=float)
    P, K = vals.shape
    order = sorted(range(P), key=lambda i: (-vals[i].mean(), ids[i]))
    vals = np.ascontiguousarray(vals[order])
    ids = np.array([ids[i] for i in order], dtype=np.int64)
    target = np.ascontiguousarray(target, dtype=float)
    tol = np.ascontiguousarray(tol, dtype=float)
    nonneg = bool((vals >= 0).all())
    slack = 1e-9 * max(1.0, float(np.abs(target).max()) + float(np.abs(vals).sum(axis=0).max()))
    # best[i, r, k]: largest total of at most r values from vals[i:] at timestep k
    best = np.zeros((P + 1, max_size + 1, K))
    for i in range(P - 1, -1, -1):
        srt = -np.sort(-vals[i:], axis=0)[:max_size]
        csum = np.cumsum(srt, axis=0)
        if not nonneg:
            csum = np.maximum.accumulate(np.maximum(csum, 0.0), axis=0)
        best[i, 1 : len(csum) + 1] = csum
        best[i, len(csum) + 1 :] = csum[-1]

    for threshold in range(K, min_votes - 1, -1):
        # grow the size cap until something matches, then allow one size more
        for cap in range(1, max_size + 1):
            found = _run_kernel(vals, target, tol, best, nonneg, slack, threshold, cap)
            if found[1].size:
                if cap < max_size and size_slack:
                    found = _run_kernel(vals, target, tol, best, nonneg, slack, threshold, min(max_size, cap + size_slack))
                sets, votes, scores = found
                out = []
                for row, v, sc in zip(sets, votes, scores):
                    members = tuple(sorted(int(ids[j]) for j in row if j >= 0))
                    out.append((members, int(v), float(sc)))
                return out
    return []


def _run_kernel(vals, target, tol, best, nonneg, slack, threshold, cap):
    tmax = tol[1 : cap + 1].max(axis=0)
    hi = target + tmax + slack
    lo = target - tmax - slack
    return _search_kernel(vals, target, tol, hi, lo, best, nonneg, threshold, cap)


@njit(cache=True)
def _search_kernel(vals, target, tol, hi, lo, best, nonneg, threshold, max_size):
    P, K = vals.shape
    totals = np.zeros((max_size + 1, K))
    alive = np.ones((max_size + 1, K), dtype=np.bool_)
    cursor = np.zeros(max_size + 1, dtype=np.int64)
    chosen = np.full(max_size, -1, dtype=np.int64)
    cap = 64
    sets = np.full((cap, max_size), -1, dtype=np.int64)
    votes_out = np.zeros(cap, dtype=np.int64)
    score_out = np.zeros(cap)
    n_found = 0
    s = np.empty(K)
    live = np.empty(K, dtype=np.bool_)
    depth = 0
    while depth >= 0:
        i = cursor[depth]
        if i >= P:
            depth -= 1
            continue
        cursor[depth] = i + 1
        size = depth + 1
        room = max_size - size
        n_live = 0
        votes = 0
        sq = 0.0
        for k in range(K):
            sk = totals[depth, k] + vals[i, k]
            s[k] = sk
            a = alive[depth, k]
            if a and nonneg and sk > hi[k]:
                a = False
            if a:
                if room > 0:
                    if sk + best[i + 1, room, k] < lo[k]:
                        a = False
                elif sk < lo[k]:
                    a = False
            live[k] = a
            if a:
                n_live += 1
            dev = sk - target[k]
            if abs(dev) <= tol[size, k]:
                votes += 1
            r = dev / tol[size, k]
            sq += r * r
        chosen[depth] = i
        if votes >= threshold:
            if n_found == cap:
                cap *= 2
                grown = np.full((cap, max_size), -1, dtype=np.int64)
                grown[:n_found] = sets[:n_found]
                sets = grown
                v2 = np.zeros(cap, dtype=np.int64)
                v2[:n_found] = votes_out[:n_found]
                votes_out = v2
                s2 = np.zeros(cap)
                s2[:n_found] = score_out[:n_found]
                score_out = s2
            for j in range(size):
                sets[n_found, j] = chosen[j]
            votes_out[n_found] = votes
            score_out[n_found] = sq / K
            n_found += 1
        if room > 0 and n_live >= threshold and i + 1 < P:
            for k in range(K):
                totals[depth + 1, k] = s[k]
                alive[depth + 1, k] = live[k]
            cursor[depth + 1] = i + 1
            depth += 1
    return sets[:n_found], votes_out[:n_found], score_out[:n_found]


def reduce_redundant(tables: Sequence[VoteTable], opts: HsspOptions, n: int | None = None) -> EstimatedTopology:
    """Turn vote tables into one parent per child.

    Candidate (parent, child set) pairs are accepted strongest first: more
    votes, then fewer members, then closer fit, then lower parent index. A
    pair is skipped if its parent already has a set, if a member already has
    a parent, or if it would close a cycle; the parent then falls back to
    its next candidate. Children still unassigned afterwards go to the
    strongest remaining parent whose top set names them. With layer labels,
    members that are not exactly one layer below the parent are ignored.
    """
    if n is None:
        n = 1 + max(
            [t.parent for t in tables] + [c for t in tables for m in t.tallies for c in m],
            default=-1,
        )
    layers = _check_layers(opts.hierarchy, n) if opts.hierarchical else None

    candidates = []
    for t in tables:
        min_votes = max(1, math.ceil(opts.min_vote_fraction * t.K))
        for members, votes in t.ranked(opts.fit_ranking):
            if votes < min_votes:
                break
            if layers is not None:
                members = tuple(c for c in members if layers[c] == layers[t.parent] + 1)
                if not members:
                    continue
            score = t.scores.get(members, 0.0) if opts.fit_ranking else 0.0
            candidates.append((-votes, len(members), score, t.parent, members))
    candidates.sort()

    parent_of: dict[int, int] = {}
    votes_of: dict[int, int] = {}
    comp = list(range(n))

    def find(v):
        while comp[v] != v:
            comp[v] = comp[comp[v]]
            v = comp[v]
        return v

    def joins_cleanly(p, members):
        seen = {find(p)}
        for c in members:
            r = find(c)
            if r in seen:
                return False
            seen.add(r)
        return True

    def attach(p, c, votes):
        comp[find(c)] = find(p)
        parent_of[c] = p
        votes_of[c] = votes

    settled: set[int] = set()
    for neg_votes, _, _, p, members in candidates:
        if p in settled or any(c in parent_of for c in members):
            continue
        if not joins_cleanly(p, members):
            continue
        for c in members:
            attach(p, c, -neg_votes)
        settled.add(p)

    # leftovers: per-child claims from parents that never settled
    top: dict[int, tuple] = {}
    for neg_votes, size, score, p, members in candidates:
        if p not in settled and p not in top:
            top[p] = (neg_votes, score, p, members)
    claims = sorted((nv, sc, p, c) for nv, sc, p, members in top.values() for c in members)
    for neg_votes, _, p, c in claims:
        if c in parent_of or find(p) == find(c):
            continue
        attach(p, c, -neg_votes)

    edges = sorted(((p, c, votes_of[c]) for c, p in parent_of.items()), key=lambda e: (e[1], e[0]))
    A = np.zeros((n, n), dtype=np.int8)
    for p, c, _ in edges:
        A[p, c] = A[c, p] = 1
    return EstimatedTopology(adjacency=A, edges=tuple(edges), tables=tuple(tables))


def identify_topology(X, sigma: float = 0.0, opts: HsspOptions | None = None) -> EstimatedTopology:
    """Estimate the radial topology behind the readings in ``X``."""
    opts = opts or HsspOptions()
    R = _readings(X)
    n = R.shape[0]
    if opts.mode == "own_load" and (not isinstance(X, MeasurementMatrix) or X.individual is None):
        raise MeasurementError("own_load mode needs the individual consumption channel")
    parents, pools = partition_nodes(X, opts, sigma)
    tables = [vote_subsets(p, pools[p], X, opts, sigma) for p in parents]
    return reduce_redundant(tables, opts, n=n)
