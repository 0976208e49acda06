"""Radial feeder topologies: generation, validation, adjacency and edge-list I/O."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Topology",
    "RadialCheck",
    "TopologyError",
    "random_radial_topology",
    "validate_radial",
    "check_radial",
    "adjacency_matrix",
    "load_topology",
    "parse_edge_list",
    "dump_topology",
    "ieee13_topology",
]


class TopologyError(ValueError):
    """Raised when an edge list cannot be turned into a radial tree."""


@dataclass(frozen=True)
class Topology:
    """Rooted radial tree.

    ``parent_of`` maps every non-root node to its parent and ``layer`` maps
    every node to its depth below ``root``.
    """

    n: int
    root: int
    parent_of: Mapping[int, int]
    layer: Mapping[int, int]
    _children: dict = field(default=None, init=False, repr=False, compare=False)

    @classmethod
    def from_parents(cls, parent_of: Mapping[int, int], n: int, root: int = 0) -> "Topology":
        """Build a topology from a parent map, deriving layers by BFS.

        The result is not validated; call :func:`check_radial` for that.
        """
        parent_of = {int(c): int(p) for c, p in parent_of.items()}
        children: dict[int, list[int]] = {}
        for c, p in parent_of.items():
            children.setdefault(p, []).append(c)
        layer = {root: 0}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for c in sorted(children.get(u, ())):
                if c not in layer:
                    layer[c] = layer[u] + 1
                    queue.append(c)
        return cls(n=n, root=root, parent_of=parent_of, layer=layer)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """(parent, child) pairs sorted by child index."""
        return [(self.parent_of[c], c) for c in sorted(self.parent_of)]

    def children(self, node: int) -> list[int]:
        if self._children is None:
            ch: dict[int, list[int]] = {}
            for c, p in self.parent_of.items():
                ch.setdefault(p, []).append(c)
            object.__setattr__(self, "_children", {p: sorted(v) for p, v in ch.items()})
        return list(self._children.get(node, ()))

    def layers(self) -> np.ndarray:
        """Layer labels as an int array indexed by node (-1 if unreachable)."""
        out = np.full(self.n, -1, dtype=int)
        for node, depth in self.layer.items():
            out[node] = depth
        return out

    def postorder(self) -> list[int]:
        """Nodes ordered so every child precedes its parent."""
        order = sorted(range(self.n), key=lambda v: self.layer.get(v, -1), reverse=True)
        return order


@dataclass(frozen=True)
class RadialCheck:
    """Outcome of :func:`check_radial`."""

    valid: bool
    problems: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.valid


def random_radial_topology(n: int, branching: int = 4, seed=None) -> Topology:
    """Grow a random rooted tree by layered attachment.

    Node ``i`` (for ``i = 1 .. n-1``) attaches to a node drawn uniformly from
    those already placed that still have fewer than ``branching`` children.
    Node 0 is the root.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if branching < 1:
        raise ValueError(f"branching must be >= 1, got {branching}")
    rng = np.random.default_rng(seed)
    parent_of: dict[int, int] = {}
    layer = {0: 0}
    n_children = [0] * n
    open_slots = [0]
    for node in range(1, n):
        pick = int(rng.integers(len(open_slots)))
        parent = open_slots[pick]
        parent_of[node] = parent
        layer[node] = layer[parent] + 1
        n_children[parent] += 1
        if n_children[parent] >= branching:
            open_slots.pop(pick)
        open_slots.append(node)
    return Topology(n=n, root=0, parent_of=parent_of, layer=layer)


def check_radial(t: Topology) -> RadialCheck:
    """Diagnose whether ``t`` is a connected, acyclic tree with consistent layers."""
    problems: list[str] = []
    n = t.n
    if not 0 <= t.root < n:
        return RadialCheck(False, (f"root {t.root} outside 0..{n - 1}",))
    nodes_ok = True
    for c, p in t.parent_of.items():
        if not (0 <= c < n and 0 <= p < n):
            problems.append(f"link {p}->{c} references a node outside 0..{n - 1}")
            nodes_ok = False
        elif c == p:
            problems.append(f"self-link at node {c}")
            nodes_ok = False
    if t.root in t.parent_of:
        problems.append(f"root {t.root} has a parent")
    if len(t.parent_of) != n - 1:
        problems.append(f"expected {n - 1} links, found {len(t.parent_of)}")
    if not nodes_ok:
        return RadialCheck(False, tuple(problems))

    # walk each node upward; more than n steps means a cycle
    cyclic = False
    orphans = 0
    for start in range(n):
        v, steps = start, 0
        while v != t.root and v in t.parent_of and steps <= n:
            v = t.parent_of[v]
            steps += 1
        if steps > n:
            cyclic = True
        elif v != t.root:
            orphans += 1
    if cyclic:
        problems.append("cycle found")
    if orphans:
        problems.append(f"disconnected: {orphans} node(s) not reachable from root")

    if not problems:
        for v in range(n):
            if v not in t.layer:
                problems.append(f"node {v} has no layer label")
                break
        else:
            if t.layer[t.root] != 0:
                problems.append("layer mismatch: root layer is not 0")
            for c, p in t.parent_of.items():
                if t.layer[c] != t.layer[p] + 1:
                    problems.append(f"layer mismatch at link {p}->{c}")
                    break
    return RadialCheck(not problems, tuple(problems))


def validate_radial(t: Topology) -> bool:
    return check_radial(t).valid


def adjacency_matrix(t: Topology) -> np.ndarray:
    m = np.zeros((t.n, t.n), dtype=np.int8)
    for c, p in t.parent_of.items():
        m[p, c] = m[c, p] = 1
    return m


def parse_edge_list(text: str) -> list[tuple[int, int]]:
    """Parse ``parent child`` lines; '#' starts a comment."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"line {lineno}: expected 'parent child', got {raw!r}")
        try:
            p, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise TopologyError(f"line {lineno}: non-integer node index in {raw!r}") from None
        if p < 0 or c < 0:
            raise TopologyError(f"line {lineno}: negative node index in {raw!r}")
        pairs.append((p, c))
    return pairs


def load_topology(edge_list_text: str, n: int | None = None) -> Topology:
    """Read an edge list rooted at node 0 and orient it away from the root.

    Lines need not be written parent-first; orientation is recovered by BFS.
    """
    pairs = parse_edge_list(edge_list_text)
    seen = set()
    for p, c in pairs:
        key = (min(p, c), max(p, c))
        if p == c:
            raise TopologyError(f"self-link at node {p}")
        if key in seen:
            raise TopologyError(f"duplicate edge {p}-{c}")
        seen.add(key)
    if n is None:
        n = 1 + max((max(e) for e in pairs), default=0)
    return _orient(pairs, n, root=0)


def _orient(pairs: Iterable[tuple[int, int]], n: int, root: int) -> Topology:
    adj: dict[int, list[int]] = {}
    pairs = list(pairs)
    for a, b in pairs:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    parent_of: dict[int, int] = {}
    layer = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(adj.get(u, ())):
            if v not in layer:
                layer[v] = layer[u] + 1
                parent_of[v] = u
                queue.append(v)
    t = Topology(n=n, root=root, parent_of=parent_of, layer=layer)
    if len(pairs) != n - 1 or len(layer) != n:
        # BFS drops back-edges, so judge the raw edge set instead
        diag = []
        if len(layer) != n:
            diag.append(f"disconnected: {n - len(layer)} node(s) not reachable from root")
        if len(pairs) > len(parent_of):
            diag.append("cycle found")
        raise TopologyError("; ".join(diag) or f"expected {n - 1} edges, found {len(pairs)}")
    check = check_radial(t)
    if not check:
        raise TopologyError("; ".join(check.problems))
    return t


def dump_topology(t: Topology) -> str:
    lines = [f"# radial topology, n={t.n}, root={t.root}"]
    lines += [f"{p} {c}" for p, c in t.edges]
    return "\n".join(lines) + "\n"


def ieee13_topology() -> Topology:
    """The 13-node test feeder shape, relabelled 0..12 (bus 650 is node 0)."""
    text = resources.files("gridtopo.data").joinpath("ieee13.edges").read_text()
    return load_topology(text)
