"""scikit-learn style wrappers around the identification routines.

Topology identification is transductive, like clustering: ``fit`` learns the
tree behind one measurement matrix and exposes it through fitted attributes.
"""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_individual, check_layers, check_measurements
from .hssp import HsspOptions, identify_topology
from .measurement import MeasurementMatrix
from .grid import adjacency_matrix
from .metrics import compare
from .oracle import exhaustive_identify

__all__ = ["HSSPTopologyIdentifier", "ExhaustiveTreeIdentifier"]


class HSSPTopologyIdentifier(BaseEstimator):
    """Recover a radial feeder from nodal active-power readings.

    Parameters
    ----------
    sigma : float
        Meter noise level: kW in additive mode, a fraction of the reading in
        multiplicative mode.
    z : float
        Window width in noise standard deviations.
    floor : float
        Smallest matching window in kW; absorbs rounding on noiseless data.
    max_children : int
        Largest child set searched per parent.
    mode : {"pure_sum", "own_load"}
        Whether a parent's reading also includes its own consumption. The
        latter needs ``individual`` at fit time.
    engine : {"joint", "per_timestep"}
        Search strategy; see :class:`gridtopo.hssp.HsspOptions`.

    The remaining parameters map one-to-one onto
    :class:`gridtopo.hssp.HsspOptions`.

    Attributes
    ----------
    adjacency_ : ndarray of shape (n_nodes, n_nodes)
    edges_ : list of (parent, child, votes)
    parent_ : dict mapping child to parent
    vote_tables_ : tuple of VoteTable
    fit_time_ : float
        Seconds spent in identification.
    """

    def __init__(
        self,
        sigma=0.0,
        *,
        z=3.0,
        floor=1e-6,
        max_children=8,
        vote_limit=64,
        mode="pure_sum",
        noise_mode="additive",
        engine="joint",
        backend="branch_bound",
        dominance_pruning=True,
        min_vote_fraction=0.5,
        rank_by_fit=None,
        size_slack=3,
    ):
        self.sigma = sigma
        self.z = z
        self.floor = floor
        self.max_children = max_children
        self.vote_limit = vote_limit
        self.mode = mode
        self.noise_mode = noise_mode
        self.engine = engine
        self.backend = backend
        self.dominance_pruning = dominance_pruning
        self.min_vote_fraction = min_vote_fraction
        self.rank_by_fit = rank_by_fit
        self.size_slack = size_slack

    def _options(self, layers) -> HsspOptions:
        return HsspOptions(
            hierarchy=layers,
            z=self.z,
            floor=self.floor,
            max_children=self.max_children,
            vote_limit=self.vote_limit,
            mode=self.mode,
            noise_mode=self.noise_mode,
            engine=self.engine,
            backend=self.backend,
            dominance_pruning=self.dominance_pruning,
            min_vote_fraction=self.min_vote_fraction,
            rank_by_fit=self.rank_by_fit,
            size_slack=self.size_slack,
        )

    def fit(self, X, y=None, *, layers=None, individual=None):
        """Identify the topology behind ``X`` (n_nodes x n_timesteps).

        ``layers`` gives each node's depth below the root and switches on the
        layer-restricted search. ``y`` is ignored.
        """
        R = check_measurements(X)
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        layers = check_layers(layers, R.shape[0])
        individual = check_individual(individual, R.shape)
        opts = self._options(layers)
        start = time.perf_counter()
        est = identify_topology(MeasurementMatrix(R, individual), self.sigma, opts)
        self.fit_time_ = time.perf_counter() - start
        self.estimate_ = est
        self.adjacency_ = est.adjacency
        self.edges_ = list(est.edges)
        self.parent_ = est.parent_of
        self.vote_tables_ = est.tables
        self.n_nodes_, self.n_timesteps_ = R.shape
        return self

    def fit_predict(self, X, y=None, **fit_params) -> np.ndarray:
        return self.fit(X, **fit_params).adjacency_

    def score(self, X, y, **fit_params) -> float:
        """Edge accuracy of the topology identified from ``X`` against adjacency ``y``."""
        A = self.fit(X, **fit_params).adjacency_
        return compare(A, y).edge_accuracy

    def edge_list(self) -> str:
        """Identified edges in the ``parent child`` text format."""
        check_is_fitted(self, "adjacency_")
        lines = [f"# identified topology, n={self.n_nodes_}"]
        lines += [f"{p} {c}" for p, c, _ in self.edges_]
        return "\n".join(lines) + "\n"


class ExhaustiveTreeIdentifier(BaseEstimator):
    """Minimum power-balance residual tree by brute force (n <= 8)."""

    def __init__(self, root=0):
        self.root = root

    def fit(self, X, y=None):
        R = check_measurements(X)
        result = exhaustive_identify(R, R.shape[0], self.root)
        self.tree_ = result.best_tree
        self.residual_ = result.residual
        self.n_trees_ = result.n_trees
        self.adjacency_ = adjacency_matrix(result.best_tree)
        self.parent_ = dict(result.best_tree.parent_of)
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).adjacency_

    def score(self, X, y) -> float:
        return compare(self.fit(X).adjacency_, y).edge_accuracy
