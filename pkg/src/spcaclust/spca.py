"""Sparse-PCA clustering.

The procedure splits the normalized data into two noisy copies, builds a
row-sparse initial subspace from one copy, turns subspace estimation into a
group-sparse regression whose targets come from the other copy, solves the
support-penalized least squares exactly, and finally runs k-means on the
projected samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .core import RANK_TOL, SubspaceBasis, as_array
from .errors import (
    InitFailure,
    InitRankDeficient,
    InvalidArgument,
    RankDeficientProjection,
    RankDeficientSelection,
)
from .kmeans import KMeansResult, kmeans


@dataclass(frozen=True)
class SplitPair:
    W0: np.ndarray
    W1: np.ndarray


@dataclass(frozen=True)
class PenaltyParams:
    beta: float = 1.0
    delta: float = 0.2

    def __post_init__(self):
        if not (self.beta > 0 and self.delta > 0):
            raise InvalidArgument(f"beta and delta must be positive, got {self.beta}, {self.delta}")


@dataclass(frozen=True)
class InitializerSpec:
    """How the initial row-sparse basis is built from the first split."""

    kind: Literal["diagonal-threshold", "column-screen", "oracle"]
    alpha: float = 1.0
    s_prime: int | None = None
    V: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "diagonal-threshold":
            if not self.alpha > 0:
                raise InvalidArgument(f"alpha must be positive, got {self.alpha}")
        elif self.kind == "column-screen":
            if self.s_prime is None or self.s_prime < 1:
                raise InvalidArgument("column-screen needs s_prime >= 1")
        elif self.kind == "oracle":
            if self.V is None:
                raise InvalidArgument("oracle initializer needs the true basis V")
        else:
            raise InvalidArgument(f"unknown initializer kind {self.kind!r}")

    @classmethod
    def diagonal(cls, alpha: float = 1.0) -> InitializerSpec:
        return cls("diagonal-threshold", alpha=alpha)

    @classmethod
    def screen(cls, s_prime: int) -> InitializerSpec:
        return cls("column-screen", s_prime=int(s_prime))

    @classmethod
    def oracle(cls, V) -> InitializerSpec:
        return cls("oracle", V=as_array(V))


@dataclass(frozen=True)
class SpcaParams:
    """Settings for :func:`spca_cluster`.

    ``on_empty`` controls what happens when the penalized selection keeps
    fewer than K-1 independent rows: ``"raise"`` surfaces
    :class:`RankDeficientSelection`, ``"initial"`` clusters on the initial
    basis instead and flags the fit as a fallback.
    """

    K: int = 2
    penalty: PenaltyParams = PenaltyParams()
    init: InitializerSpec = InitializerSpec.diagonal(1.0)
    kmeans_restarts: int = 10
    seed: int = 0
    on_empty: Literal["raise", "initial"] = "raise"

    def __post_init__(self):
        if self.K < 2:
            raise InvalidArgument(f"K must be >= 2, got {self.K}")
        if self.kmeans_restarts < 1:
            raise InvalidArgument("kmeans_restarts must be >= 1")
        if self.on_empty not in ("raise", "initial"):
            raise InvalidArgument(f"unknown on_empty policy {self.on_empty!r}")


def default_s_prime(p: int, v: float) -> int:
    """Screen size ``ceil(p^(1-v)) + ceil(log p)``, capped at p."""
    return min(p, math.ceil(p ** (1.0 - v)) + math.ceil(math.log(p)))


# --- sample splitting ------------------------------------------------------

def sample_split(W, rng: np.random.Generator | None = None, noise=None) -> SplitPair:
    """Return ``(W + Z, W - Z)`` for fresh standard normal ``Z``, or for ``noise`` if given."""
    W = as_array(W)
    Z = rng.standard_normal(W.shape) if noise is None else as_array(noise)
    if Z.shape != W.shape:
        raise InvalidArgument(f"noise shape {Z.shape} does not match {W.shape}")
    return SplitPair(W0=W + Z, W1=W - Z)


# --- initial subspace ------------------------------------------------------

def _top_right_vectors(A: np.ndarray, r: int) -> np.ndarray | None:
    if min(A.shape) < r:
        return None
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0 or s[r - 1] < RANK_TOL * s[0]:
        return None
    return vt[:r].T


def _padded(block: np.ndarray, rows: np.ndarray, p: int) -> SubspaceBasis:
    out = np.zeros((p, block.shape[1]))
    out[rows] = block
    return SubspaceBasis(out)


def diagonal_threshold_select(W0, alpha: float, K: int) -> np.ndarray:
    """Features whose sample variance (divisor n-1) is at least ``1 + alpha sqrt(log p / n)``.

    The input is expected to have unit noise variance. When fewer than K-1
    features pass, the ``K-1+ceil(log p)`` highest-variance features are
    returned instead.
    """
    W0 = as_array(W0)
    n, p = W0.shape
    var = W0.var(axis=0, ddof=1)
    selected = np.flatnonzero(var >= 1.0 + alpha * math.sqrt(math.log(p) / n))
    if selected.size < K - 1:
        m = min(p, K - 1 + math.ceil(math.log(p)))
        selected = np.sort(np.argsort(-var, kind="stable")[:m])
    return selected


def screen_columns(W0, s_prime: int) -> np.ndarray:
    """Indices of the ``s_prime`` largest-norm columns (ties to the smaller index), sorted."""
    norms = np.sum(as_array(W0) ** 2, axis=0)
    return np.sort(np.argsort(-norms, kind="stable")[:s_prime])


def init_diagonal_threshold(W0, alpha: float, K: int) -> SubspaceBasis:
    """Top K-1 right singular vectors of the columns kept by :func:`diagonal_threshold_select`."""
    W0 = as_array(W0)
    p = W0.shape[1]
    r = K - 1
    selected = diagonal_threshold_select(W0, alpha, K)
    if selected.size < r:
        raise InitFailure(f"only {selected.size} features available for K-1 = {r}")
    block = _top_right_vectors(W0[:, selected], r)
    if block is None:
        raise InitFailure("screened columns have rank below K-1")
    return _padded(block, selected, p)


def init_column_screen(W0, s_prime: int, K: int) -> SubspaceBasis:
    """Keep the ``s_prime`` largest-norm columns, then take their top right singular vectors."""
    W0 = as_array(W0)
    n, p = W0.shape
    r = K - 1
    if not 1 <= s_prime <= p:
        raise InvalidArgument(f"s_prime must lie in 1..{p}, got {s_prime}")
    if r > min(n, s_prime):
        raise InvalidArgument(f"K-1 = {r} exceeds min(n, s_prime) = {min(n, s_prime)}")
    selected = screen_columns(W0, s_prime)
    block = _top_right_vectors(W0[:, selected], r)
    if block is None:
        raise InitFailure("screened columns have rank below K-1")
    return _padded(block, selected, p)


def initial_basis(split: SplitPair, spec: InitializerSpec, K: int) -> SubspaceBasis:
    if spec.kind == "oracle":
        return SubspaceBasis(spec.V)
    if spec.kind == "column-screen":
        return init_column_screen(split.W0, min(spec.s_prime, split.W0.shape[1]), K)
    # W0 carries noise variance 2; rescale so the unit-variance threshold applies
    return init_diagonal_threshold(split.W0 / math.sqrt(2.0), spec.alpha, K)


# --- regression targets and penalized support ------------------------------

def penalties(p: int, K: int, params: PenaltyParams) -> np.ndarray:
    """``pen(k)`` for every k in 0..p as one array."""
    i = np.arange(1, p + 1, dtype=float)
    logs = np.log(math.e * p / i)
    t = (K - 1) + np.sqrt(2.0 * (K - 1) * params.beta * logs) + params.beta * logs
    out = np.empty(p + 1)
    out[0] = 0.0
    out[1:] = (1.0 + params.delta) ** 2 * np.cumsum(t)
    return out


def penalty(k: int, p: int, K: int, params: PenaltyParams) -> float:
    """``(1+delta)^2 * sum_{i<=k} t_i`` with
    ``t_i = K-1 + sqrt(2(K-1) beta log(e p / i)) + beta log(e p / i)``."""
    if not 0 <= k <= p:
        raise InvalidArgument(f"k must lie in 0..{p}, got {k}")
    if k == 0:
        return 0.0
    return float(penalties(p, K, params)[k])


def regress_targets(split: SplitPair, V0) -> np.ndarray:
    """Regression responses ``Y = (W1' W0 V0 R C^{-1}) / sqrt(2)`` where ``W0 V0 = Q C R'``."""
    V0 = as_array(V0)
    B = split.W0 @ V0
    _, c, rt = np.linalg.svd(B, full_matrices=False)
    if c[0] == 0.0 or c[-1] < RANK_TOL * c[0]:
        raise InitRankDeficient("W0 V0 is numerically rank deficient")
    return (split.W1.T @ B @ rt.T / c) / math.sqrt(2.0)


def select_support(Y, p: int, K: int, params: PenaltyParams, pen: np.ndarray | None = None) -> np.ndarray:
    """Exact minimizer of ``||Y - Theta||_F^2 + pen(|supp Theta|)`` over row-sparse Theta.

    For a fixed support size k the best rows to keep are the k largest in
    norm, so scanning k = 0..p over the sorted row norms is exact. Row-norm
    ties keep the smaller index; objective ties keep the smaller k.
    ``pen`` may be passed precomputed (length p+1) to override the default
    penalty sequence.
    """
    Y = as_array(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != p:
        raise InvalidArgument(f"Y has {Y.shape[0]} rows, expected p = {p}")
    if pen is None:
        pen = penalties(p, K, params)
    row_sq = np.sum(Y**2, axis=1)
    order = np.argsort(-row_sq, kind="stable")
    kept = np.concatenate(([0.0], np.cumsum(row_sq[order])))
    cost = (row_sq.sum() - kept) + pen
    k = int(np.argmin(cost))
    theta = np.zeros_like(Y)
    rows = order[:k]
    theta[rows] = Y[rows]
    return theta


# --- orthonormalization and projection --------------------------------------

def _polar(A: np.ndarray, r: int) -> np.ndarray | None:
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    if s.size < r or s[0] == 0.0 or s[r - 1] < RANK_TOL * s[0]:
        return None
    return u[:, :r] @ vt[:r]


def orthonormalize(theta) -> SubspaceBasis:
    """Orthonormal basis for the column span of ``theta``, keeping its row support.

    Uses the polar factor of the nonzero-row block, so an input that is
    already orthonormal comes back unchanged.
    """
    theta = as_array(theta)
    r = theta.shape[1]
    rows = np.flatnonzero(np.any(theta != 0.0, axis=1))
    if rows.size < r:
        raise RankDeficientSelection(f"{rows.size} rows selected, need at least {r}")
    block = _polar(theta[rows], r)
    if block is None:
        raise RankDeficientSelection("selected rows have rank below K-1")
    out = np.zeros_like(theta)
    out[rows] = block
    return SubspaceBasis(out)


def estimate_U(W, V_hat) -> SubspaceBasis:
    """Orthonormal basis (n x (K-1)) for the span of ``W V_hat``."""
    WV = as_array(W) @ as_array(V_hat)
    U = _polar(WV, WV.shape[1])
    if U is None:
        raise RankDeficientProjection("W V_hat is numerically rank deficient")
    return SubspaceBasis(U)


# --- clustering and full pipeline -------------------------------------------

@dataclass(frozen=True)
class SpcaFit:
    labels: np.ndarray
    V0: SubspaceBasis
    Y: np.ndarray
    theta: np.ndarray
    V: SubspaceBasis
    U: SubspaceBasis
    kmeans: KMeansResult
    fallback: bool = False

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(np.any(self.theta != 0.0, axis=1))


def _as_rng(rng, seed):
    if rng is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(rng)


def spca_fit(
    W, params: SpcaParams, rng: np.random.Generator | None = None, split_noise=None
) -> SpcaFit:
    """Run the whole procedure and keep every intermediate estimate.

    ``split_noise`` fixes the splitting matrix instead of drawing it from
    ``rng``; k-means still uses ``rng``.
    """
    W = as_array(W)
    n, p = W.shape
    K = params.K
    if n <= K:
        raise InvalidArgument(f"need n > K, got n={n}, K={K}")
    rng = _as_rng(rng, params.seed)
    split_rng, km_rng = rng.spawn(2)

    split = sample_split(W, split_rng, noise=split_noise)
    V0 = initial_basis(split, params.init, K)
    Y = regress_targets(split, V0)
    theta = select_support(Y, p, K, params.penalty)
    fallback = False
    try:
        V = orthonormalize(theta)
    except RankDeficientSelection:
        if params.on_empty == "raise":
            raise
        V, fallback = V0, True
    U = estimate_U(W, V)
    km = kmeans(U.matrix, K, restarts=params.kmeans_restarts, rng=km_rng)
    return SpcaFit(labels=km.labels, V0=V0, Y=Y, theta=theta, V=V, U=U, kmeans=km, fallback=fallback)


def spca_cluster(W, params: SpcaParams, rng: np.random.Generator | None = None) -> np.ndarray:
    """Cluster labels (1..K) from sparse-PCA clustering; see :func:`spca_fit`."""
    return spca_fit(W, params, rng).labels


def pca_cluster_baseline(
    W, K: int, rng: np.random.Generator | None = None, restarts: int = 10
) -> np.ndarray:
    """k-means on the top K-1 left singular vectors of ``W`` (no sparsity)."""
    W = as_array(W)
    n = W.shape[0]
    if n <= K:
        raise InvalidArgument(f"need n > K, got n={n}, K={K}")
    rng = np.random.default_rng(rng)
    u, s, _ = np.linalg.svd(W, full_matrices=False)
    r = K - 1
    if s[0] == 0.0 or s[r - 1] < RANK_TOL * s[0]:
        raise RankDeficientProjection("data matrix has rank below K-1")
    return kmeans(u[:, :r], K, restarts=restarts, rng=rng).labels
