"""Lloyd's k-means with k-means++ seeding and best-of-restarts selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray  # in 1..K
    centroids: np.ndarray
    objective: float
    iterations: int
    history: tuple[float, ...] = ()
    restart_objectives: tuple[float, ...] = ()


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids**2, axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def kmeans_plusplus(points: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """D^2 seeding. Returns the indices of the K chosen points."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # every point coincides with a chosen centre
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return np.asarray(chosen)


def _lloyd(points, centroids, max_iter):
    K = centroids.shape[0]
    labels = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d = _sq_dists(points, centroids)
        new_labels = np.argmin(d, axis=1)
        history.append(float(d[np.arange(len(points)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = _update(points, labels, centroids, d, K)
    else:
        d = _sq_dists(points, centroids)
        labels = np.argmin(d, axis=1)
    centroids = _update(points, labels, centroids, d, K)
    objective = float(np.sum((points - centroids[labels]) ** 2))
    return labels, centroids, objective, it, history


def _update(points, labels, centroids, d, K):
    new = np.empty_like(centroids)
    counts = np.bincount(labels, minlength=K)
    for k in range(K):
        if counts[k]:
            new[k] = points[labels == k].mean(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        # reseed at the points farthest from their current centroid
        own = d[np.arange(len(points)), labels]
        order = np.argsort(-own, kind="stable")
        for k, idx in zip(empty, order):
            new[k] = points[idx]
    return new


def kmeans(
    points,
    K: int,
    restarts: int = 10,
    max_iter: int = 300,
    rng: np.random.Generator | int | None = None,
) -> KMeansResult:
    """Cluster the rows of ``points`` into K groups.

    Each restart gets its own child generator spawned from ``rng``, so the
    result does not depend on the order restarts are evaluated in. The
    restart with the smallest within-cluster sum of squares wins; ties go to
    the lower restart index.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if K < 1 or n < K:
        raise InvalidArgument(f"need 1 <= K <= n, got K={K}, n={n}")
    if restarts < 1 or max_iter < 1:
        raise InvalidArgument("restarts and max_iter must be positive")
    rng = np.random.default_rng(rng)

    best = None
    objectives = []
    for child in rng.spawn(restarts):
        seeds = kmeans_plusplus(points, K, child)
        labels, centroids, obj, it, hist = _lloyd(points, points[seeds].copy(), max_iter)
        objectives.append(obj)
        if best is None or obj < best[2]:
            best = (labels, centroids, obj, it, hist)
    labels, centroids, obj, it, hist = best
    return KMeansResult(
        labels=labels + 1,
        centroids=centroids,
        objective=obj,
        iterations=it,
        history=tuple(hist),
        restart_objectives=tuple(objectives),
    )
