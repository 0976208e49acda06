import numpy as np
import pytest

from gridtopo import (
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
from gridtopo.grid import parse_edge_list


def bfs_layers(n, edges, root=0):
    adj = {v: [] for v in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    depth = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in depth:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    return [depth[v] for v in range(n)]


def test_single_node_tree():
    t = random_radial_topology(1, 2, 0)
    assert t.n == 1 and t.edges == []
    assert validate_radial(t)


def test_two_node_tree():
    t = random_radial_topology(2, 2, 0)
    assert t.edges == [(0, 1)]


@pytest.mark.parametrize("seed", range(20))
def test_random_trees_are_radial(seed):
    t = random_radial_topology(33, 4, seed)
    assert len(t.edges) == 32
    assert validate_radial(t)
    counts = np.bincount([p for p, _ in t.edges], minlength=t.n)
    assert counts.max() <= 4


def test_seed_reproducible():
    assert random_radial_topology(40, 3, 7).parent_of == random_radial_topology(40, 3, 7).parent_of


def test_branching_one_is_a_chain():
    t = random_radial_topology(6, 1, 3)
    assert list(t.layers()) == [0, 1, 2, 3, 4, 5]


@pytest.mark.parametrize("n, b", [(0, 2), (3, 0)])
def test_bad_generator_params(n, b):
    with pytest.raises(ValueError):
        random_radial_topology(n, b, 0)


def test_path_is_valid():
    t = Topology(n=3, root=0, parent_of={1: 0, 2: 1}, layer={0: 0, 1: 1, 2: 2})
    assert check_radial(t).valid


def test_cycle_is_reported():
    t = Topology(n=3, root=0, parent_of={1: 2, 2: 1}, layer={0: 0, 1: 1, 2: 2})
    check = check_radial(t)
    assert not check
    assert any("cycle" in p for p in check.problems)


def test_cycle_in_edge_list():
    with pytest.raises(TopologyError, match="cycle"):
        load_topology("0 1\n1 2\n2 0")


def test_disconnected_edge_list():
    with pytest.raises(TopologyError, match="disconnected"):
        load_topology("0 1\n2 3")


def test_layer_mismatch_reported():
    t = Topology(n=3, root=0, parent_of={1: 0, 2: 1}, layer={0: 0, 1: 1, 2: 1})
    check = check_radial(t)
    assert not check.valid
    assert any("layer" in p for p in check.problems)


def test_adjacency_chain_and_star():
    chain = load_topology("0 1")
    assert adjacency_matrix(chain).tolist() == [[0, 1], [1, 0]]
    star = load_topology("0 1\n0 2\n0 3")
    assert adjacency_matrix(star)[0].tolist() == [0, 1, 1, 1]


def test_adjacency_ieee13_shape():
    A = adjacency_matrix(ieee13_topology())
    assert A.sum() == 24
    assert (A == A.T).all() and np.trace(A) == 0


def test_load_chain_layers():
    t = load_topology("0 1\n1 2")
    assert list(t.layers()) == [0, 1, 2]


def test_load_orients_reversed_lines():
    t = load_topology("1 0\n2 1")
    assert t.parent_of == {1: 0, 2: 1}


def test_duplicate_edge():
    with pytest.raises(TopologyError, match="duplicate"):
        load_topology("0 1\n0 1")


@pytest.mark.parametrize("text", ["0 1 2", "0 x", "0 -1", "0 0"])
def test_malformed_edge_lists(text):
    with pytest.raises(TopologyError):
        load_topology(text)


def test_comments_and_blank_lines():
    assert parse_edge_list("# header\n\n0 1  # trailing\n") == [(0, 1)]


def test_ieee13_layers_match_bfs():
    t = ieee13_topology()
    assert t.n == 13 and len(t.edges) == 12
    assert list(t.layers()) == bfs_layers(13, t.edges)


def test_dump_load_round_trip():
    t = random_radial_topology(25, 3, 11)
    back = load_topology(dump_topology(t))
    assert back.parent_of == t.parent_of
    assert list(back.layers()) == list(t.layers())


def test_postorder_puts_children_first():
    t = random_radial_topology(30, 4, 2)
    pos = {v: i for i, v in enumerate(t.postorder())}
    assert all(pos[c] < pos[p] for p, c in t.edges)
