"""Synthetic sparse Gaussian mixtures over the (r, v) simulation grid.

A grid point fixes the signal strength through ``r`` and the number of
informative features through ``s = round(p^(1-v))``. The informative
features share one support across classes.
"""

from __future__ import annotations

import hashlib
import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from .core import DataMatrix, LabelVector, NormalizeMode, normalize
from .errors import InvalidConfig, PipelineError
from .metrics import error_rate

Calibration = Literal["sqrt", "detection"]


@dataclass(frozen=True)
class GridPoint:
    r: float
    v: float

    def __post_init__(self):
        if not (0.0 < self.r < 1.0 and 0.0 < self.v < 1.0):
            raise InvalidConfig(f"grid point needs 0 < r, v < 1, got r={self.r}, v={self.v}")


@dataclass(frozen=True)
class SynthConfig:
    """Sample sizes and noise model for :func:`generate`.

    ``calibration`` picks how r maps to the per-feature mean gap tau, see
    :func:`signal_strength`. ``tau_override`` bypasses it.
    """

    n: int = 145
    p: int = 4000
    K: int = 2
    sigma: np.ndarray | None = field(default=None, repr=False)
    class_probs: np.ndarray | None = field(default=None, repr=False)
    seed: int = 0
    tau_override: float | None = None
    calibration: Calibration = "sqrt"

    def __post_init__(self):
        if self.n < 2 or self.p < 1 or self.K < 2:
            raise InvalidConfig(f"need n >= 2, p >= 1, K >= 2; got {self.n}, {self.p}, {self.K}")
        if self.sigma is not None:
            sigma = np.asarray(self.sigma, dtype=float)
            if sigma.shape != (self.p,) or not np.all(sigma > 0):
                raise InvalidConfig("sigma must be a positive vector of length p")
        if self.class_probs is not None:
            probs = np.asarray(self.class_probs, dtype=float)
            if probs.shape != (self.K,) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise InvalidConfig("class_probs must be K nonnegative weights summing to 1")
        if self.tau_override is not None and not self.tau_override >= 0:
            raise InvalidConfig("tau_override must be nonnegative")
        if self.calibration not in ("sqrt", "detection"):
            raise InvalidConfig(f"unknown calibration {self.calibration!r}")

    def probs(self) -> np.ndarray:
        if self.class_probs is None:
            return np.full(self.K, 1.0 / self.K)
        return np.asarray(self.class_probs, dtype=float)

    def variances(self) -> np.ndarray:
        if self.sigma is None:
            return np.ones(self.p)
        return np.asarray(self.sigma, dtype=float)


@dataclass(frozen=True)
class Dataset:
    X: DataMatrix
    labels: LabelVector
    support: np.ndarray
    means: np.ndarray  # K x p class contrasts, centered across classes


def sparsity_count(p: int, v: float) -> int:
    """``max(1, round(p^(1-v)))``."""
    return max(1, int(round(p ** (1.0 - v))))


def signal_strength(r: float, p: int, n: int, calibration: Calibration = "sqrt") -> float:
    """Per-feature gap tau between class means for strength exponent r.

    ``"sqrt"``: ``sqrt(2 r log p / n)``.

    ``"detection"``: ``(64 r log p / n)^(1/4)``. For two balanced classes an
    informative feature then has variance ``1 + tau^2/4``, and its
    standardized variance statistic ``sqrt(n/2) (s_j^2 - 1)`` has mean
    ``sqrt(2 r log p)``; r = 1 puts single features right at the universal
    screening threshold.
    """
    if calibration == "sqrt":
        return math.sqrt(2.0 * r * math.log(p) / n)
    if calibration == "detection":
        return (64.0 * r * math.log(p) / n) ** 0.25
    raise InvalidConfig(f"unknown calibration {calibration!r}")


def contrast_means(K: int, p: int, support: np.ndarray, tau: float) -> np.ndarray:
    """Class mean contrasts on a shared support.

    Support coordinate m is hot for class ``(m mod (K-1)) + 1``; the hot
    class sits at ``tau (K-1)/2`` and every other class at ``-tau/2``, so for
    K = 2 class 1 gets ``+tau/2`` and class 2 gets ``-tau/2`` everywhere on
    the support. Columns sum to zero across classes.
    """
    M = np.zeros((K, p))
    hot = np.arange(support.size) % (K - 1)
    M[:, support] = -tau / 2.0
    M[hot, support] = tau * (K - 1) / 2.0
    return M


def generate(config: SynthConfig, grid: GridPoint) -> Dataset:
    rng = np.random.default_rng(config.seed)
    n, p, K = config.n, config.p, config.K
    labels = rng.choice(K, size=n, p=config.probs()) + 1
    s = sparsity_count(p, grid.v)
    support = np.sort(rng.choice(p, size=s, replace=False))
    if config.tau_override is not None:
        tau = float(config.tau_override)
    else:
        tau = signal_strength(grid.r, p, n, config.calibration)
    M = contrast_means(K, p, support, tau)
    noise = rng.standard_normal((n, p)) * np.sqrt(config.variances())
    X = M[labels - 1] + noise
    return Dataset(X=DataMatrix(X), labels=LabelVector(labels, K), support=support, means=M)


# --- Monte Carlo replicates ----------------------------------------------------

#: Stream tag for data generation; methods use their own positive ids.
DATA_STREAM = 0


def derive_seed(master: int, *keys: int) -> int:
    """64-bit seed from BLAKE2b over the little-endian uint64 encoding of
    ``(master, *keys)``. Replicate seeds depend only on their own indices,
    never on evaluation order."""
    payload = struct.pack(f"<{1 + len(keys)}Q", master, *keys)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


Method = Callable[..., np.ndarray]


@dataclass(frozen=True)
class Replicate:
    error: float  # nan when the method failed
    seconds: float
    failure: str | None = None


def run_one(
    config: SynthConfig,
    grid: GridPoint,
    method: Method,
    rep: int,
    *,
    key: tuple[int, ...] = (),
    method_id: int = 1,
    normalize_mode: NormalizeMode = "center",
) -> Replicate:
    """One replicate: data from the data stream, method randomness from its own stream."""
    data = generate(replace(config, seed=derive_seed(config.seed, *key, DATA_STREAM, rep)), grid)
    method_rng = np.random.default_rng(derive_seed(config.seed, *key, method_id, rep))
    start = time.perf_counter()
    try:
        W = normalize(data.X, normalize_mode)
        yhat = method(W, method_rng)
        err = error_rate(yhat, data.labels, config.K)
        failure = None
    except PipelineError as exc:
        err, failure = math.nan, f"{type(exc).__name__}: {exc}"
    return Replicate(err, time.perf_counter() - start, failure)


def run_replicates(
    config: SynthConfig,
    grid: GridPoint,
    n_reps: int,
    method: Method,
    *,
    key: tuple[int, ...] = (),
    method_id: int = 1,
    normalize_mode: NormalizeMode = "center",
    threads: int = 1,
) -> list[Replicate]:
    """Evaluate ``method(W, rng) -> labels`` on ``n_reps`` independent datasets.

    Replicate i generates data with ``derive_seed(config.seed, *key, 0, i)``
    and hands the method a generator seeded with
    ``derive_seed(config.seed, *key, method_id, i)``. Different methods with
    the same ``key`` therefore see identical datasets. Pipeline failures are
    recorded per replicate (error ``nan``) rather than raised.
    """
    if n_reps < 1:
        raise InvalidConfig("n_reps must be >= 1")

    def task(i):
        return run_one(config, grid, method, i, key=key, method_id=method_id, normalize_mode=normalize_mode)

    if threads <= 1:
        return [task(i) for i in range(n_reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, range(n_reps)))
