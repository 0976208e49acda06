import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gridtopo import (
    MeasurementError,
    MeasurementMatrix,
    NoiseModel,
    aggregate_readings,
    ieee13_topology,
    inject_noise,
    load_topology,
    random_radial_topology,
    read_csv,
    sample_loads,
    write_csv,
)
from gridtopo.measurement import children_residual


def loads_of(rows):
    return MeasurementMatrix(readings=None, individual=np.array(rows, dtype=float))


def recursive_readings(topo, own, mode):
    """Independent reference: readings by direct recursion over children."""
    kids = {v: [c for c, p in topo.parent_of.items() if p == v] for v in range(topo.n)}

    def reading(v):
        if not kids[v]:
            return own[v].copy()
        total = sum(reading(c) for c in kids[v])
        return total + own[v] if mode == "own_load" else total

    return np.array([reading(v) for v in range(topo.n)])


def test_loads_in_range():
    t = random_radial_topology(20, 4, 1)
    L = sample_loads(t, 10, 25, 50, seed=3).individual
    assert L.shape == (20, 10)
    assert L.min() >= 25 and L.max() <= 50


def test_single_timestep_range():
    t = random_radial_topology(20, 4, 1)
    L = sample_loads(t, 1, 0, 50, seed=4).individual
    assert L.shape == (20, 1) and L.min() >= 0 and L.max() <= 50


def test_loads_sample_mean():
    t = random_radial_topology(5, 4, 1)
    L = sample_loads(t, 1000, 25, 50, seed=5).individual
    assert abs(L.mean() - 37.5) <= 1.0


@pytest.mark.parametrize("K, lo, hi", [(0, 25, 50), (5, 50, 25)])
def test_bad_load_params(K, lo, hi):
    with pytest.raises(ValueError):
        sample_loads(random_radial_topology(3, 2, 0), K, lo, hi)


def test_star_pure_sum():
    t = load_topology("0 1\n0 2")
    X = aggregate_readings(t, loads_of([[100.0], [3.0], [4.0]]), "pure_sum")
    assert X.readings[0, 0] == 7.0


def test_chain_own_load():
    t = load_topology("0 1\n1 2")
    X = aggregate_readings(t, loads_of([[1.0], [2.0], [3.0]]), "own_load")
    assert X.readings[:, 0].tolist() == [6.0, 5.0, 3.0]


def test_aggregation_needs_individual():
    t = load_topology("0 1")
    with pytest.raises(MeasurementError):
        aggregate_readings(t, MeasurementMatrix(readings=np.ones((2, 1))))


@pytest.mark.parametrize("mode", ["pure_sum", "own_load"])
def test_aggregation_matches_recursion(mode):
    t = ieee13_topology()
    L = sample_loads(t, 8, seed=9)
    X = aggregate_readings(t, L, mode)
    np.testing.assert_allclose(X.readings, recursive_readings(t, L.individual, mode), rtol=1e-13)


@pytest.mark.parametrize("seed", range(10))
def test_pure_sum_balance_is_exact(seed):
    t = random_radial_topology(60, 4, seed)
    X = aggregate_readings(t, sample_loads(t, 10, seed=seed), "pure_sum")
    assert np.abs(children_residual(t, X.readings)).max() == 0.0


def test_noise_free_is_identity():
    t = random_radial_topology(10, 3, 0)
    X = aggregate_readings(t, sample_loads(t, 5, seed=1))
    out = inject_noise(X, NoiseModel(0.0, seed=2))
    np.testing.assert_array_equal(out.readings, X.readings)


def test_additive_noise_std():
    X = MeasurementMatrix(readings=np.full((100, 100), 40.0))
    out = inject_noise(X, NoiseModel(0.05, "additive", seed=7))
    assert abs((out.readings - X.readings).std() - 0.05) <= 0.005


def test_multiplicative_noise_scales_with_reading():
    X = MeasurementMatrix(readings=np.vstack([np.full(5000, 10.0), np.full(5000, 1000.0)]))
    out = inject_noise(X, NoiseModel(0.01, "multiplicative", seed=8))
    rel = (out.readings - X.readings) / X.readings
    assert abs(rel.std() - 0.01) < 0.001
    assert abs(rel[0].std() - rel[1].std()) < 0.001


def test_noise_leaves_input_untouched():
    X = MeasurementMatrix(readings=np.ones((3, 3)))
    inject_noise(X, NoiseModel(1.0, seed=0))
    assert (X.readings == 1.0).all()
    with pytest.raises(ValueError):
        X.readings[0, 0] = 2.0


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        NoiseModel(-0.1)


def test_csv_small_round_trip():
    X = np.array([[1.5, 2.25], [3.0, -4.125]])
    assert np.array_equal(read_csv(write_csv(X)).readings, X)


def test_csv_header_skipped():
    X = read_csv("# node rows; columns t0,t1\n1,2\n3,4\n")
    assert X.readings.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_csv_large_round_trip():
    t = random_radial_topology(123, 4, 3)
    X = inject_noise(aggregate_readings(t, sample_loads(t, 10, seed=1)), NoiseModel(0.02, seed=2))
    assert np.array_equal(read_csv(write_csv(X)).readings, X.readings)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.floats(-1e6, 1e6)))
def test_csv_round_trip_property(arr):
    assert np.array_equal(read_csv(write_csv(arr)).readings, arr)


@pytest.mark.parametrize("text, msg", [("1,2\n3\n", "ragged"), ("1,x\n", "non-numeric"), ("# only\n", "no data")])
def test_csv_errors(text, msg):
    with pytest.raises(MeasurementError, match=msg):
        read_csv(text)


def test_shape_mismatch_rejected():
    with pytest.raises(MeasurementError):
        MeasurementMatrix(readings=np.ones((2, 3)), individual=np.ones((3, 3)))
