"""Data containers and normalization for the Gaussian-mixture clustering model.

Observations follow ``X = 1_n mu_bar' + L M + Z`` where ``L`` is the n x K
class indicator matrix, ``M`` holds the class mean contrasts and the rows of
``Z`` are i.i.d. Gaussian noise. Clustering runs on the column-normalized
matrix ``W`` (ordinary centering, optionally unit-variance scaling).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DegenerateSignal, InvalidArgument, InvalidData

NormalizeMode = Literal["center", "center-scale"]

#: Relative tolerance below which a singular value counts as zero.
RANK_TOL = 1e-10
#: Floor on per-column standard deviation under center-and-scale.
SCALE_EPS = 1e-12
#: Frobenius tolerance for the orthonormal-columns check.
ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class DataMatrix:
    """An n x p matrix of observations, one sample per row."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise InvalidData(f"data matrix must be 2-D, got shape {values.shape}")
        if values.shape[0] < 2 or values.shape[1] < 1:
            raise InvalidData(f"need n >= 2 and p >= 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidData("data matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelVector:
    """Cluster labels in ``{1, ..., K}``."""

    labels: np.ndarray
    K: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise InvalidArgument("labels must be a 1-D sequence")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            as_int = labels.astype(np.int64)
            if not np.array_equal(as_int, labels):
                raise InvalidArgument("labels must be integers")
            labels = as_int
        labels = labels.astype(np.int64)
        if self.K < 1:
            raise InvalidArgument(f"K must be >= 1, got {self.K}")
        if labels.size and (labels.min() < 1 or labels.max() > self.K):
            raise InvalidArgument(f"labels must lie in 1..{self.K}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def indicator(self) -> np.ndarray:
        """The n x K one-hot matrix ``L``."""
        out = np.zeros((self.n, self.K))
        out[np.arange(self.n), self.labels - 1] = 1.0
        return out


@dataclass(frozen=True)
class NormalizedMatrix:
    """Column-normalized data plus the statistics used to produce it."""

    values: np.ndarray
    mode: NormalizeMode
    means: np.ndarray = field(repr=False)
    scales: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SubspaceBasis:
    """A d x r matrix with orthonormal columns."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[1] < 1:
            raise InvalidArgument(f"basis must be 2-D with at least one column, got {m.shape}")
        err = np.linalg.norm(m.T @ m - np.eye(m.shape[1]))
        if not err <= ORTHO_TOL:
            raise InvalidArgument(f"basis columns are not orthonormal (error {err:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    def support(self) -> np.ndarray:
        """Indices of rows that are not identically zero."""
        return np.flatnonzero(np.any(self.matrix != 0.0, axis=1))


def as_array(x) -> np.ndarray:
    """Unwrap any of the containers above into a float ndarray."""
    for attr in ("values", "matrix"):
        if hasattr(x, attr):
            return np.asarray(getattr(x, attr), dtype=float)
    return np.asarray(x, dtype=float)


def normalize(X, mode: NormalizeMode = "center") -> NormalizedMatrix:
    """Center every column and, for ``"center-scale"``, divide by its sample std.

    The sample standard deviation uses divisor ``n - 1``. Constant columns are
    returned as exact zeros under both modes so that column indices stay
    aligned with the original features.
    """
    values = as_array(X)
    if values.ndim != 2:
        raise InvalidData(f"data matrix must be 2-D, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise InvalidData("data matrix contains non-finite entries")
    n = values.shape[0]
    if n < 2:
        raise InvalidData("need at least two samples to normalize")
    if mode not in ("center", "center-scale"):
        raise InvalidArgument(f"unknown normalization mode {mode!r}")

    means = values.mean(axis=0)
    centered = values - means
    std = centered.std(axis=0, ddof=1)
    degenerate = std <= SCALE_EPS * np.maximum(1.0, np.abs(means))
    centered[:, degenerate] = 0.0

    if mode == "center-scale":
        scales = np.where(degenerate, 1.0, np.maximum(std, SCALE_EPS))
        centered /= scales
    else:
        scales = np.ones(values.shape[1])
    centered.setflags(write=False)
    return NormalizedMatrix(values=centered, mode=mode, means=means, scales=scales)


def decompose_signal(L, M, scale=None):
    """Rank-(K-1) SVD of the column-centered signal matrix ``L M diag(scale)``.

    Parameters
    ----------
    L : LabelVector or (n, K) array
        Class memberships, either as labels or as the one-hot indicator.
    M : (K, p) array
        Class mean contrasts.
    scale : (p,) array, optional
        Per-feature multipliers (the diagonal normalization factor); defaults
        to ones.

    Returns
    -------
    U : SubspaceBasis
        n x (K-1) left singular vectors.
    d : ndarray
        The K-1 singular values, non-increasing.
    V : SubspaceBasis
        p x (K-1) right singular vectors.
    """
    indicator = L.indicator() if isinstance(L, LabelVector) else np.asarray(L, dtype=float)
    M = np.asarray(M, dtype=float)
    K = M.shape[0]
    if K < 2 or indicator.shape[1] != K:
        raise InvalidArgument("need K >= 2 classes with matching indicator and means")
    signal = indicator @ M
    if scale is not None:
        signal = signal * np.asarray(scale, dtype=float)
    signal = signal - signal.mean(axis=0)

    r = K - 1
    u, d, vt = np.linalg.svd(signal, full_matrices=False)
    if d.size < r or d[0] == 0.0 or d[r - 1] < RANK_TOL * d[0]:
        raise DegenerateSignal(f"centered signal has rank below K-1 = {r}")
    return SubspaceBasis(u[:, :r]), d[:r], SubspaceBasis(vt[:r].T)
