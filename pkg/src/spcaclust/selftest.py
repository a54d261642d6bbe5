"""Quick oracle checks runnable from an installed package (``spcaclust selftest``)."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .core import normalize
from .fisher import equicorrelated, subset_vs_full_gap
from .kmeans import kmeans
from .metrics import hamming_star
from .spca import PenaltyParams, SplitPair, penalties, regress_targets, select_support


def _brute_force_objective(Y, pen):
    p = Y.shape[0]
    row_sq = np.sum(Y**2, axis=1)
    best = math.inf
    for mask in itertools.product((False, True), repeat=p):
        mask = np.array(mask)
        best = min(best, row_sq[~mask].sum() + pen[mask.sum()])
    return best


def check_support_solver(rng, n_cases=30):
    params = PenaltyParams()
    for _ in range(n_cases):
        p, r = int(rng.integers(1, 9)), int(rng.integers(1, 3))
        Y = rng.normal(scale=3.0, size=(p, r))
        pen = penalties(p, r + 1, params)
        theta = select_support(Y, p, r + 1, params)
        k = int(np.any(theta != 0, axis=1).sum())
        got = np.sum((Y - theta) ** 2) + pen[k]
        if not math.isclose(got, _brute_force_objective(Y, pen), rel_tol=1e-12, abs_tol=1e-12):
            return False
    return True


def check_hamming_paths(rng, n_pairs=200):
    for K in range(2, 7):
        for _ in range(n_pairs):
            n = int(rng.integers(1, 40))
            a, b = rng.integers(1, K + 1, n), rng.integers(1, K + 1, n)
            if hamming_star(a, b, K, "exhaustive").hamming != hamming_star(a, b, K, "assignment").hamming:
                return False
    return True


def check_schur(rng, n_cases=200):
    for _ in range(n_cases):
        p = int(rng.integers(2, 21))
        A = rng.normal(size=(p, p))
        Sigma = A @ A.T + 1e-3 * np.eye(p)
        s = int(rng.integers(1, p))
        Delta = np.zeros(p)
        Delta[:s] = rng.normal(size=s)
        if subset_vs_full_gap(Delta, Sigma, s).gap < -1e-10:
            return False
    g = subset_vs_full_gap([1.0, 0.0], equicorrelated(0.6), 1)
    return abs(g.full - 1.5625) < 1e-12 and abs(g.subset - 1.0) < 1e-12


def check_penalty():
    pen = penalties(4000, 2, PenaltyParams(1.0, 0.2))
    return pen[0] == 0.0 and round(pen[1], 2) == 21.03 and round(pen[2], 2) == 40.83


def check_target_identity(rng, n_cases=20):
    for _ in range(n_cases):
        n, p = int(rng.integers(5, 30)), int(rng.integers(5, 30))
        r = int(rng.integers(1, 4))
        W = rng.normal(size=(n, p))
        Zt = rng.normal(size=(n, p))
        split = SplitPair(W + Zt, W - Zt)
        V0, _ = np.linalg.qr(rng.normal(size=(p, r)))
        Q, _, _ = np.linalg.svd(split.W0 @ V0, full_matrices=False)
        if np.linalg.norm(regress_targets(split, V0) - split.W1.T @ Q / math.sqrt(2)) > 1e-8:
            return False
    return True


def check_kmeans():
    res = kmeans(np.array([0.0, 1.0, 9.0, 10.0]), 2, rng=0)
    return abs(res.objective - 1.0) < 1e-12 and res.labels[0] == res.labels[1] != res.labels[2]


def check_normalize():
    W = normalize(np.array([[1.0, 10.0], [3.0, 10.0], [5.0, 10.0]]), "center-scale").values
    return np.allclose(W, [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]], atol=1e-12)


def run(seed: int = 0, echo=print) -> bool:
    rng = np.random.default_rng(seed)
    checks = [
        ("support solver matches brute force", lambda: check_support_solver(rng)),
        ("exhaustive and assignment Hamming agree", lambda: check_hamming_paths(rng)),
        ("Schur complement gap is nonnegative", lambda: check_schur(rng)),
        ("penalty values pen(1), pen(2)", check_penalty),
        ("regression target identity", lambda: check_target_identity(rng)),
        ("k-means on (0, 1, 9, 10)", check_kmeans),
        ("normalization example", check_normalize),
    ]
    ok = True
    for name, fn in checks:
        start = time.perf_counter()
        passed = bool(fn())
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}  ({time.perf_counter() - start:.2f}s)")
    return ok
