"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array


def check_measurements(X, name: str = "X") -> np.ndarray:
    """Readings as a finite float array of shape (n_nodes, n_timesteps)."""
    return check_array(
        X,
        dtype=np.float64,
        ensure_all_finite=True,
        ensure_min_samples=1,
        ensure_min_features=1,
        input_name=name,
    )


def check_layers(layers, n_nodes: int) -> np.ndarray | None:
    if layers is None:
        return None
    arr = np.asarray(layers)
    if arr.shape != (n_nodes,):
        raise ValueError(f"layers must have shape ({n_nodes},), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("layers must be integers")
        arr = arr.astype(int)
    if (arr < 0).any():
        raise ValueError("layers must be nonnegative")
    return arr


def check_individual(individual, shape: tuple[int, int]) -> np.ndarray | None:
    if individual is None:
        return None
    arr = check_measurements(individual, name="individual")
    if arr.shape != shape:
        raise ValueError(f"individual must have shape {shape}, got {arr.shape}")
    return arr
