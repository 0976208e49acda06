"""Brute-force topology search for tiny feeders.

Every labelled tree on ``n`` nodes is generated from its Prüfer sequence,
rooted at the given node, and scored by the L1 power-balance residual
``sum |reading(parent) - sum(children)|`` over internal nodes and timesteps.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Topology
from .measurement import MeasurementMatrix, children_residual

__all__ = ["OracleResult", "exhaustive_identify", "prufer_trees", "MAX_ORACLE_NODES"]

MAX_ORACLE_NODES = 8
_BATCH = 1 << 15


@dataclass(frozen=True)
class OracleResult:
    best_tree: Topology
    residual: float
    n_trees: int


def _decode(seqs: np.ndarray, n: int) -> np.ndarray:
    """Edge arrays (B, n-1, 2) for a batch of Prüfer sequences."""
    B = seqs.shape[0]
    degree = np.ones((B, n), dtype=np.int64)
    rows = np.arange(B)
    for j in range(n - 2):
        np.add.at(degree, (rows, seqs[:, j]), 1)
    edges = np.empty((B, n - 1, 2), dtype=np.int64)
    for j in range(n - 2):
        leaf = np.argmax(degree == 1, axis=1)
        edges[:, j, 0] = leaf
        edges[:, j, 1] = seqs[:, j]
        degree[rows, leaf] -= 1
        degree[rows, seqs[:, j]] -= 1
    ones = degree == 1
    edges[:, n - 2, 0] = np.argmax(ones, axis=1)
    edges[:, n - 2, 1] = n - 1 - np.argmax(ones[:, ::-1], axis=1)
    return edges


def _root(edges: np.ndarray, n: int, root: int) -> np.ndarray:
    """Parent arrays (B, n) with ``-1`` at the root."""
    B = edges.shape[0]
    parent = np.full((B, n), -1, dtype=np.int64)
    known = np.zeros((B, n), dtype=bool)
    known[:, root] = True
    rows = np.arange(B)
    for _ in range(n - 1):
        for e in range(n - 1):
            u, v = edges[:, e, 0], edges[:, e, 1]
            ku, kv = known[rows, u], known[rows, v]
            down = ku & ~kv
            up = kv & ~ku
            parent[rows[down], v[down]] = u[down]
            known[rows[down], v[down]] = True
            parent[rows[up], u[up]] = v[up]
            known[rows[up], u[up]] = True
    return parent


@lru_cache(maxsize=16)
def prufer_trees(n: int, root: int = 0) -> np.ndarray:
    """Parent arrays of all ``n ** (n - 2)`` labelled trees rooted at ``root``."""
    if n == 1:
        return np.full((1, 1), -1, dtype=np.int64)
    if n == 2:
        out = np.full((1, 2), -1, dtype=np.int64)
        out[0, 1 - root] = root
        return out
    seqs = np.array(list(itertools.product(range(n), repeat=n - 2)), dtype=np.int64)
    parts = [_root(_decode(seqs[i : i + _BATCH], n), n, root) for i in range(0, len(seqs), _BATCH)]
    out = np.concatenate(parts)
    out.setflags(write=False)
    return out


def _residuals(parents: np.ndarray, R: np.ndarray) -> np.ndarray:
    B, n = parents.shape
    out = np.empty(B)
    for i in range(0, B, _BATCH):
        P = parents[i : i + _BATCH]
        onehot = (P[:, :, None] == np.arange(n)[None, None, :]).astype(float)  # (b, child, parent)
        child_sum = np.einsum("bcp,ck->bpk", onehot, R)
        internal = onehot.any(axis=1)
        out[i : i + _BATCH] = (np.abs(R[None] - child_sum).sum(axis=2) * internal).sum(axis=1)
    return out


def exhaustive_identify(X, n: int | None = None, root: int = 0) -> OracleResult:
    """Minimum-residual tree over all labelled trees rooted at ``root``.

    Ties (equal up to rounding) go to the lexicographically smallest parent
    array.
    """
    R = X.readings if isinstance(X, MeasurementMatrix) else np.asarray(X, dtype=float)
    if n is None:
        n = R.shape[0]
    if n != R.shape[0]:
        raise ValueError(f"n={n} but readings have {R.shape[0]} rows")
    if n > MAX_ORACLE_NODES:
        raise ValueError(f"exhaustive search is limited to n <= {MAX_ORACLE_NODES}, got {n}")
    if not 0 <= root < n:
        raise ValueError(f"root {root} outside 0..{n - 1}")
    parents = prufer_trees(n, root)
    res = _residuals(parents, R)
    # residuals within rounding of the minimum count as ties
    best = np.flatnonzero(res <= res.min() + 1e-9 * max(1.0, float(np.abs(R).sum())))
    if len(best) > 1:
        keys = parents[best]
        best_idx = best[np.lexsort(keys.T[::-1])[0]]
    else:
        best_idx = best[0]
    parent_of = {c: int(p) for c, p in enumerate(parents[best_idx]) if p >= 0}
    tree = Topology.from_parents(parent_of, n=n, root=root)
    residual = float(np.abs(children_residual(tree, R)).sum()) if parent_of else 0.0
    return OracleResult(best_tree=tree, residual=residual, n_trees=len(parents))
