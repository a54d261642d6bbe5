import math

import numpy as np
import pytest
from scipy import stats

from spcaclust.errors import InvalidConfig
from spcaclust.metrics import error_rate
from spcaclust.spca import SpcaParams, pca_cluster_baseline, spca_cluster
from spcaclust.synth import (
    DATA_STREAM,
    GridPoint,
    SynthConfig,
    contrast_means,
    derive_seed,
    generate,
    run_one,
    run_replicates,
    signal_strength,
    sparsity_count,
)
from spcaclust.core import normalize


def test_sparsity_count():
    assert sparsity_count(4000, 0.6) == 28
    assert sparsity_count(4000, 0.8) == 5
    assert sparsity_count(50, 0.999999) == 1


def test_signal_strength():
    assert signal_strength(0.65, 4000, 145) == pytest.approx(0.27269111655715995, rel=1e-13)
    assert signal_strength(0.65, 4000, 145, "detection") == pytest.approx(
        (64 * 0.65 * math.log(4000) / 145) ** 0.25, rel=1e-13
    )


def test_grid_point_bounds():
    for bad in [(0, 0.5), (1, 0.5), (0.5, 0), (0.5, 1)]:
        with pytest.raises(InvalidConfig):
            GridPoint(*bad)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        SynthConfig(n=10, p=5, class_probs=(0.5, 0.6))
    with pytest.raises(InvalidConfig):
        SynthConfig(n=10, p=3, sigma=(1.0, 0.0, 1.0))


def test_two_class_contrasts():
    M = contrast_means(2, 6, np.array([1, 4]), 0.8)
    np.testing.assert_allclose(M[0], [0, 0.4, 0, 0, 0.4, 0])
    np.testing.assert_allclose(M[1], -M[0])
    M3 = contrast_means(3, 5, np.array([0, 1, 2]), 1.0)
    np.testing.assert_allclose(M3.sum(axis=0), 0.0, atol=1e-15)


def test_generate_is_deterministic_and_shaped():
    cfg = SynthConfig(n=30, p=100, seed=4)
    a, b = generate(cfg, GridPoint(0.5, 0.7)), generate(cfg, GridPoint(0.5, 0.7))
    assert np.array_equal(a.X.values, b.X.values)
    assert np.array_equal(a.labels.labels, b.labels.labels)
    assert a.X.values.shape == (30, 100)
    assert len(a.support) == sparsity_count(100, 0.7) == len(set(a.support.tolist()))
    off = np.setdiff1d(np.arange(100), a.support)
    assert np.all(a.means[:, off] == 0)
    assert np.all(np.abs(a.means[:, a.support]) > 0)


def test_class_proportions_chi_square():
    probs = (0.2, 0.3, 0.5)
    counts = np.zeros(3)
    for seed in range(50):
        ds = generate(SynthConfig(n=400, p=5, K=3, class_probs=probs, seed=seed), GridPoint(0.5, 0.5))
        counts += np.bincount(ds.labels.labels, minlength=4)[1:]
    assert counts.sum() >= 1e4
    assert stats.chisquare(counts, counts.sum() * np.array(probs)).pvalue > 0.01


def test_noise_variances_match_sigma():
    sigma = np.linspace(0.5, 3.0, 40)
    ds = generate(SynthConfig(n=400, p=40, sigma=sigma, seed=1, tau_override=0.0), GridPoint(0.5, 0.5))
    rel = np.abs(ds.X.values.var(axis=0, ddof=1) / sigma - 1)
    assert rel.mean() <= 3 * math.sqrt(2 / 400)


def test_derive_seed_is_stable_and_keyed():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert len({derive_seed(0, 0, 0, 0, r) for r in range(100)}) == 100
    assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
    assert 0 <= derive_seed(2**64 - 1, 2**64 - 1) < 2**64


def _spca(W, rng):
    return spca_cluster(W, SpcaParams(on_empty="initial"), rng)


def test_single_replicate_matches_direct_call():
    cfg = SynthConfig(n=40, p=60, seed=9, tau_override=1.0)
    grid = GridPoint(0.5, 0.6)
    (rep,) = run_replicates(cfg, grid, 1, _spca, key=(3,), method_id=1)
    data = generate(SynthConfig(n=40, p=60, seed=derive_seed(9, 3, DATA_STREAM, 0), tau_override=1.0), grid)
    yhat = _spca(normalize(data.X).values, np.random.default_rng(derive_seed(9, 3, 1, 0)))
    assert rep.error == error_rate(yhat, data.labels, 2)


def test_separable_replicates():
    cfg = SynthConfig(n=40, p=80, seed=0, tau_override=100.0)
    reps = run_replicates(cfg, GridPoint(0.5, 0.6), 5, _spca)
    assert [r.error for r in reps] == [0.0] * 5


def test_null_replicates_are_chance():
    cfg = SynthConfig(n=60, p=100, seed=0, tau_override=0.0)
    reps = run_replicates(cfg, GridPoint(0.5, 0.6), 50, lambda W, rng: pca_cluster_baseline(W, 2, rng))
    assert 0.35 <= np.mean([r.error for r in reps]) <= 0.5


def test_failures_are_isolated_and_thread_independent():
    cfg = SynthConfig(n=40, p=50, seed=2, tau_override=1.0)
    grid = GridPoint(0.5, 0.6)
    strict = lambda W, rng: spca_cluster(W, SpcaParams(), rng)  # noqa: E731
    serial = run_replicates(cfg, grid, 8, strict)
    threaded = run_replicates(cfg, grid, 8, strict, threads=4)
    assert [r.failure for r in serial] == [r.failure for r in threaded]
    np.testing.assert_array_equal([r.error for r in serial], [r.error for r in threaded])
    for i, rep in enumerate(serial):
        alone = run_one(cfg, grid, strict, i)
        assert (alone.failure is None) == (rep.failure is None)
        if rep.failure is None:
            assert alone.error == rep.error
        else:
            assert math.isnan(rep.error)


def test_run_replicates_needs_reps():
    with pytest.raises(InvalidConfig):
        run_replicates(SynthConfig(n=10, p=5), GridPoint(0.5, 0.5), 0, _spca)
