import sys

import numpy as np
import pytest

from gridtopo import (
    HsspOptions,
    NoiseModel,
    aggregate_readings,
    inject_noise,
    random_radial_topology,
    sample_loads,
)


def make_instance(n, K=10, sigma=0.0, seed=0, mode="pure_sum", noise_mode="additive", lo=25.0, hi=50.0):
    """Random feeder plus (noisy) readings, seeded the same way as the sweeps."""
    topo = random_radial_topology(n, 4, np.random.SeedSequence([0, n, seed, 0]))
    loads = sample_loads(topo, K, lo, hi, np.random.SeedSequence([0, n, seed, 1]))
    X = aggregate_readings(topo, loads, mode)
    X = inject_noise(X, NoiseModel(sigma, noise_mode, np.random.SeedSequence([0, n, seed, 2, 0])))
    return topo, X


def hier(topo, **kw):
    return HsspOptions(hierarchy=topo.layers(), **kw)


@pytest.fixture
def instance():
    return make_instance


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
