"""Oracle Fisher discriminant for two Gaussian classes with a shared covariance.

With every parameter known, the linear rule is Bayes optimal. Comparing the
Mahalanobis separation of all features with that of a leading block of
"useful" features (the ones carrying the whole mean difference) shows why
mean-based screening can hurt under correlated noise: the Schur complement
of the leading block is positive semidefinite, so dropping the remaining
features can only shrink the separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtr

from .errors import InvalidArgument, InvalidCovariance

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class OracleParams:
    mu_bar: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    Sigma: np.ndarray
    delta1: float = 0.5
    delta2: float = 0.5

    def __post_init__(self):
        Sigma = np.asarray(self.Sigma, dtype=float)
        p = Sigma.shape[0]
        if Sigma.shape != (p, p):
            raise InvalidCovariance(f"Sigma must be square, got {Sigma.shape}")
        for name in ("mu_bar", "mu1", "mu2"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if vec.shape != (p,):
                raise InvalidArgument(f"{name} must have length {p}")
            object.__setattr__(self, name, vec)
        _check_spd(Sigma)
        if not (0 < self.delta1 < 1 and 0 < self.delta2 < 1) or abs(self.delta1 + self.delta2 - 1) > 1e-12:
            raise InvalidArgument("priors must lie in (0, 1) and sum to 1")
        object.__setattr__(self, "Sigma", Sigma)

    @property
    def p(self) -> int:
        return self.Sigma.shape[0]

    @property
    def midpoint(self) -> np.ndarray:
        return self.mu_bar + (self.mu1 + self.mu2) / 2.0

    @property
    def Delta(self) -> np.ndarray:
        return self.mu1 - self.mu2

    def restrict(self, s: int) -> OracleParams:
        """Parameters of the leading s features."""
        return OracleParams(
            self.mu_bar[:s], self.mu1[:s], self.mu2[:s], self.Sigma[:s, :s], self.delta1, self.delta2
        )


@dataclass(frozen=True)
class FeatureSplit:
    s: int


@dataclass(frozen=True)
class QuadGap:
    full: float
    subset: float
    gap: float


def _check_spd(Sigma: np.ndarray):
    if not np.allclose(Sigma, Sigma.T, rtol=0.0, atol=1e-10):
        raise InvalidCovariance("Sigma is not symmetric")
    try:
        c, lower = cho_factor(Sigma, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise InvalidCovariance(f"Sigma is not positive definite: {exc}") from None
    pivots = np.diag(c) ** 2
    if pivots.min() <= PIVOT_TOL * max(1.0, float(np.max(np.diag(Sigma)))):
        raise InvalidCovariance("Sigma is numerically singular")
    return c, lower


def _solve(Sigma: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cho_solve(_check_spd(np.asarray(Sigma, dtype=float)), b)


def quad_form(Delta, Sigma) -> float:
    """``Delta' Sigma^{-1} Delta`` through a Cholesky solve."""
    Delta = np.asarray(Delta, dtype=float)
    return float(Delta @ _solve(Sigma, Delta))


def fisher_rate_unhalved(Delta, Sigma) -> float:
    """``1 - Phi(sqrt(Delta' Sigma^{-1} Delta))``, the tail at the full Mahalanobis distance.

    Compare :func:`fisher_rate_standard`, which halves the distance and is the
    equal-prior misclassification rate of the oracle rule.
    """
    return float(ndtr(-math.sqrt(quad_form(Delta, Sigma))))


def fisher_rate_standard(Delta, Sigma) -> float:
    """Equal-prior Bayes risk ``Phi(-sqrt(Delta' Sigma^{-1} Delta) / 2)``."""
    return float(ndtr(-math.sqrt(quad_form(Delta, Sigma)) / 2.0))


def discriminant(z, params: OracleParams) -> np.ndarray:
    """``(z - mu)' Sigma^{-1} Delta`` for one point or a stack of rows."""
    w = _solve(params.Sigma, params.Delta)
    return (np.asarray(z, dtype=float) - params.midpoint) @ w


def fisher_classify(z, params: OracleParams):
    """``1 + 1{discriminant >= log(delta1/delta2)}``.

    Vectorizes over rows when ``z`` is 2-D. The indicator is taken as
    written, so a point on the class-1 side of the boundary receives label 2;
    error rates computed from it should be permutation matched.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidArgument("z must be finite")
    out = 1 + (discriminant(z, params) >= math.log(params.delta1 / params.delta2)).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def subset_vs_full_gap(Delta, Sigma, split: FeatureSplit | int) -> QuadGap:
    """Mahalanobis separation with all features versus the leading block only."""
    s = split.s if isinstance(split, FeatureSplit) else int(split)
    Delta = np.asarray(Delta, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    p = Delta.shape[0]
    if not 1 <= s < p:
        raise InvalidArgument(f"split size must lie in 1..{p - 1}, got {s}")
    if np.any(Delta[s:] != 0.0):
        raise InvalidArgument("Delta must vanish outside the leading block")
    full = quad_form(Delta, Sigma)
    subset = quad_form(Delta[:s], Sigma[:s, :s])
    gap = full - subset
    assert gap >= -1e-10, f"Schur complement inequality violated: gap = {gap}"
    return QuadGap(full, subset, gap)


def sample_mixture(params: OracleParams, n_draws: int, rng: np.random.Generator):
    y = np.where(rng.random(n_draws) < params.delta1, 1, 2)
    means = np.where((y == 1)[:, None], params.mu1, params.mu2) + params.mu_bar
    L = np.linalg.cholesky(params.Sigma)
    Z = means + rng.standard_normal((n_draws, params.p)) @ L.T
    return Z, y


def matched_error(yhat: np.ndarray, y: np.ndarray) -> float:
    wrong = float(np.mean(yhat != y))
    return min(wrong, 1.0 - wrong)


def empirical_misclassification(
    params: OracleParams,
    split: FeatureSplit | int | None = None,
    n_draws: int = 100_000,
    rng: np.random.Generator | int | None = None,
) -> float:
    """Monte Carlo error of the oracle rule, matched over the label swap.

    With ``split`` the rule only sees the leading block of features (means
    and covariance restricted accordingly); draws come from the full model.
    """
    if n_draws < 1:
        raise InvalidArgument("n_draws must be >= 1")
    rng = np.random.default_rng(rng)
    Z, y = sample_mixture(params, n_draws, rng)
    if split is not None:
        s = split.s if isinstance(split, FeatureSplit) else int(split)
        params, Z = params.restrict(s), Z[:, :s]
    return matched_error(fisher_classify(Z, params), y)


def equicorrelated(rho: float, p: int = 2) -> np.ndarray:
    return (1.0 - rho) * np.eye(p) + rho * np.ones((p, p))
