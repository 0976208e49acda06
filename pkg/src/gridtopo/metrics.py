"""Agreement between an estimated and a true adjacency matrix."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["AccuracyReport", "compare", "edge_set"]


@dataclass(frozen=True)
class AccuracyReport:
    """Edge-level agreement.

    ``edge_accuracy`` is the share of true edges recovered and so always
    equals ``recall``. ``element_agreement`` counts matching off-diagonal
    adjacency entries.
    """

    edge_accuracy: float
    precision: float
    recall: float
    f1: float
    element_agreement: float
    wall_time: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def edge_set(A) -> set[tuple[int, int]]:
    A = np.asarray(A)
    rows, cols = np.nonzero(np.triu(A, k=1))
    return set(zip(rows.tolist(), cols.tolist()))


def compare(estimate, truth, wall_time: float | None = None) -> AccuracyReport:
    est = np.asarray(estimate)
    ref = np.asarray(truth)
    if est.ndim != 2 or est.shape[0] != est.shape[1]:
        raise ValueError(f"estimate must be square, got shape {est.shape}")
    if est.shape != ref.shape:
        raise ValueError(f"dimension mismatch: estimate {est.shape} vs truth {ref.shape}")
    n = est.shape[0]
    e_pred, e_true = edge_set(est), edge_set(ref)
    hits = len(e_pred & e_true)
    recall = hits / len(e_true) if e_true else 1.0
    if e_pred:
        precision = hits / len(e_pred)
    else:
        precision = 1.0 if not e_true else 0.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    off = ~np.eye(n, dtype=bool)
    agree = float(((est != 0) == (ref != 0))[off].mean()) if n > 1 else 1.0
    return AccuracyReport(
        edge_accuracy=recall,
        precision=precision,
        recall=recall,
        f1=f1,
        element_agreement=agree,
        wall_time=wall_time,
    )
