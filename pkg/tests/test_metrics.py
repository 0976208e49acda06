import numpy as np
import pytest

from gridtopo import adjacency_matrix, compare, ieee13_topology, load_topology, random_radial_topology


def test_perfect_match():
    A = adjacency_matrix(ieee13_topology())
    r = compare(A, A)
    assert r.edge_accuracy == 1.0 and r.f1 == 1.0 and r.element_agreement == 1.0


def test_all_zero_estimate():
    A = adjacency_matrix(ieee13_topology())
    n = 13
    r = compare(np.zeros_like(A), A)
    assert r.edge_accuracy == 0.0 and r.recall == 0.0 and r.precision == 0.0 and r.f1 == 0.0
    assert r.element_agreement == pytest.approx(1 - 2 * (n - 1) / (n * n - n))


def test_one_wrong_parent():
    truth = ieee13_topology()
    parents = dict(truth.parent_of)
    parents[12] = 0  # true parent is 6
    est = np.zeros((13, 13), dtype=int)
    for c, p in parents.items():
        est[p, c] = est[c, p] = 1
    r = compare(est, adjacency_matrix(truth))
    assert r.edge_accuracy == pytest.approx(11 / 12)
    assert r.precision == pytest.approx(11 / 12)


def test_precision_and_recall_swap():
    truth = adjacency_matrix(load_topology("0 1\n1 2\n1 3"))
    est = adjacency_matrix(load_topology("0 1"))
    est = np.pad(est, ((0, 2), (0, 2)))
    ab, ba = compare(est, truth), compare(truth, est)
    assert ab.precision == ba.recall == 1.0
    assert ab.recall == ba.precision == pytest.approx(1 / 3)


@pytest.mark.parametrize("seed", range(10))
def test_edge_accuracy_equals_recall(seed):
    rng = np.random.default_rng(seed)
    A = adjacency_matrix(random_radial_topology(15, 3, seed))
    flips = np.triu(rng.random((15, 15)) < 0.1, 1)
    B = np.where(flips | flips.T, 1 - A, A)
    r = compare(B, A)
    assert r.edge_accuracy == r.recall
    assert 0 <= r.f1 <= 1


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        compare(np.zeros((3, 3)), np.zeros((4, 4)))


def test_non_square():
    with pytest.raises(ValueError):
        compare(np.zeros((3, 4)), np.zeros((3, 4)))


def test_no_true_edges():
    r = compare(np.zeros((1, 1)), np.zeros((1, 1)))
    assert r.recall == 1.0 and r.precision == 1.0 and r.element_agreement == 1.0


def test_as_dict_keys():
    r = compare(np.zeros((2, 2)), np.zeros((2, 2)), wall_time=0.5)
    assert list(r.as_dict()) == ["edge_accuracy", "precision", "recall", "f1", "element_agreement", "wall_time"]
