"""Permutation-matched clustering error and subspace distances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import as_array
from .errors import InvalidArgument

#: Largest K for which the exhaustive K! search is used by default.
EXHAUSTIVE_MAX_K = 6


@dataclass(frozen=True)
class ErrorReport:
    hamming: int
    rate: float
    # best_permutation[k-1] is the true label matched to estimated label k
    best_permutation: tuple[int, ...]


def _labels(x) -> np.ndarray:
    return np.asarray(getattr(x, "labels", x))


def confusion_matrix(yhat, y, K: int) -> np.ndarray:
    """``C[a, b]`` counts samples with estimated label a+1 and true label b+1."""
    yhat, y = _labels(yhat), _labels(y)
    if yhat.shape != y.shape or yhat.ndim != 1:
        raise InvalidArgument(f"label vectors differ in shape: {yhat.shape} vs {y.shape}")
    for name, v in (("yhat", yhat), ("y", y)):
        if v.size and (v.min() < 1 or v.max() > K or not np.all(v == np.round(v))):
            raise InvalidArgument(f"{name} has labels outside 1..{K}")
    C = np.zeros((K, K), dtype=np.int64)
    np.add.at(C, (yhat.astype(np.int64) - 1, y.astype(np.int64) - 1), 1)
    return C


def _exhaustive(C: np.ndarray) -> tuple[int, tuple[int, ...]]:
    K = C.shape[0]
    n = int(C.sum())
    best, best_perm = None, None
    rows = np.arange(K)
    for perm in itertools.permutations(range(K)):
        agree = int(C[rows, perm].sum())
        if best is None or n - agree < best:
            best, best_perm = n - agree, perm
    return best, tuple(int(j) + 1 for j in best_perm)


def _assignment(C: np.ndarray) -> tuple[int, tuple[int, ...]]:
    rows, cols = linear_sum_assignment(C, maximize=True)
    perm = np.empty(C.shape[0], dtype=np.int64)
    perm[rows] = cols
    return int(C.sum()) - int(C[rows, cols].sum()), tuple(int(j) + 1 for j in perm)


def hamming_star(yhat, y, K: int, method: str = "auto") -> ErrorReport:
    """Misclassification count minimized over relabelings of the clusters.

    ``method`` is ``"exhaustive"`` (all K! permutations), ``"assignment"``
    (optimal matching on the confusion matrix) or ``"auto"``, which uses the
    exhaustive search up to K = 6.
    """
    C = confusion_matrix(yhat, y, K)
    if method == "auto":
        method = "exhaustive" if K <= EXHAUSTIVE_MAX_K else "assignment"
    if method == "exhaustive":
        ham, perm = _exhaustive(C)
    elif method == "assignment":
        ham, perm = _assignment(C)
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    n = int(C.sum())
    return ErrorReport(hamming=ham, rate=ham / n if n else 0.0, best_permutation=perm)


def error_rate(yhat, y, K: int) -> float:
    return hamming_star(yhat, y, K).rate


def sin_theta(V_hat, V) -> float:
    """Frobenius norm of the sines of the principal angles, ``sqrt(r - ||V_hat' V||_F^2)``."""
    A, B = as_array(V_hat), as_array(V)
    if A.ndim != 2 or A.shape != B.shape:
        raise InvalidArgument(f"bases must share shape, got {A.shape} and {B.shape}")
    r = A.shape[1]
    return float(np.sqrt(max(r - np.sum((A.T @ B) ** 2), 0.0)))


def smallest_cosine(V_hat, V) -> float:
    """Smallest singular value of ``V_hat' V`` (cosine of the largest principal angle)."""
    A, B = as_array(V_hat), as_array(V)
    return float(np.linalg.svd(A.T @ B, compute_uv=False).min())
