import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rffrates.errors import DegenerateProfileError
from rffrates.features import (RandomFeatureMap, approx_kernel, build_plain, build_weighted, default_pool_size,
                               feature_matrix, gram_factor)
from rffrates.kernels import Frequencies, KernelSpec, gram_matrix, kernel_eval, spectral_sample
from rffrates.leverage import LeverageProfile, build_profile

GAUSS = KernelSpec("gaussian", 1.0, 2)


def _profile(pool, ratio):
    ratio = np.asarray(ratio, dtype=float)
    return LeverageProfile(pool, ratio, ratio, 0.1, float(ratio.mean()), float(ratio.mean()))


def test_single_feature_plain_map():
    fmap = build_plain(GAUSS, 1, 0)
    assert fmap.s == 1 and fmap.weights.tolist() == [1.0] and fmap.scheme == "plain"


def test_zero_frequency_feature_matrix():
    fmap = RandomFeatureMap(GAUSS, Frequencies([[0.0, 0.0]], [0.0]), [1.0])
    assert np.allclose(feature_matrix(fmap, [[1.5, -2.0]]), [[math.sqrt(2)]])
    assert approx_kernel(fmap, [0, 1], [5, -3]) == pytest.approx(2.0)


def test_plain_map_deterministic():
    a, b = build_plain(GAUSS, 20, 3), build_plain(GAUSS, 20, 3)
    assert np.array_equal(a.frequencies.omega, b.frequencies.omega)
    assert np.array_equal(a.frequencies.phase, b.frequencies.phase)


def test_invalid_maps_rejected():
    freqs = spectral_sample(GAUSS, 2, 0)
    with pytest.raises(ValueError):
        RandomFeatureMap(GAUSS, freqs, [1.0, 2.0], "plain")
    with pytest.raises(ValueError):
        RandomFeatureMap(GAUSS, freqs, [1.0, 0.0], "weighted")
    with pytest.raises(ValueError):
        RandomFeatureMap(GAUSS, freqs, [1.0])
    with pytest.raises(ValueError):
        build_plain(GAUSS, 0, 0)


def test_plain_map_approximates_kernel():
    rng = np.random.default_rng(0)
    fmap = build_plain(GAUSS, 10_000, 1)
    for _ in range(20):
        x, y = rng.normal(size=2), rng.normal(size=2)
        assert abs(approx_kernel(fmap, x, y) - kernel_eval(GAUSS, x, y)) <= 0.05


def test_feature_gram_approximates_kernel_gram():
    X = np.random.default_rng(1).normal(size=(30, 2))
    Phi = feature_matrix(build_plain(GAUSS, 10_000, 2), X)
    assert np.max(np.abs(Phi @ Phi.T - gram_matrix(GAUSS, X))) <= 0.05


@given(st.integers(1, 50), st.integers(0, 2**31 - 1))
def test_entries_bounded_and_diagonal_in_range(s, seed):
    X = np.random.default_rng(seed).normal(size=(4, 2))
    fmap = build_plain(GAUSS, s, seed)
    Phi = feature_matrix(fmap, X)
    assert np.all(np.abs(Phi) <= GAUSS.kappa / math.sqrt(s) + 1e-15)
    assert 0.0 <= approx_kernel(fmap, X[0], X[0]) <= 2.0 + 1e-12


def test_approx_kernel_consistent_with_feature_matrix():
    fmap = build_plain(GAUSS, 64, 4)
    x, y = np.array([0.2, 0.1]), np.array([-1.0, 0.4])
    Phi = feature_matrix(fmap, np.vstack([x, y]))
    assert approx_kernel(fmap, x, y) == pytest.approx((Phi @ Phi.T)[0, 1], abs=1e-12)
    assert approx_kernel(fmap, x, y) == approx_kernel(fmap, y, x)


def test_feature_matrix_dimension_mismatch():
    with pytest.raises(ValueError):
        feature_matrix(build_plain(GAUSS, 3, 0), np.zeros((2, 3)))


def test_single_atom_pool_weights():
    pool = Frequencies([[0.5, -0.2]], [1.0])
    fmap = build_weighted(GAUSS, 5, _profile(pool, [0.37]), 0)
    assert np.allclose(fmap.frequencies.omega, [0.5, -0.2])
    # sum(ratio) / (m * ratio) = 1 for a one-atom pool
    assert np.allclose(fmap.weights, 1.0)


def test_uniform_leverage_resamples_uniformly():
    pool = spectral_sample(GAUSS, 10, 0)
    fmap = build_weighted(GAUSS, 100_000, _profile(pool, np.ones(10)), 1)
    counts = np.array([np.sum(np.all(fmap.frequencies.omega == pool.omega[j], axis=1)) for j in range(10)])
    assert counts.sum() == 100_000
    sd = math.sqrt(100_000 * 0.1 * 0.9)
    assert np.all(np.abs(counts - 10_000) <= 3 * sd)
    assert np.allclose(fmap.weights, 1.0)


def test_weighted_resampling_probabilities_follow_ratio():
    pool = spectral_sample(GAUSS, 3, 0)
    ratio = np.array([1.0, 2.0, 7.0])
    fmap = build_weighted(GAUSS, 50_000, _profile(pool, ratio), 2)
    idx = np.array([np.flatnonzero(np.all(pool.omega == w, axis=1))[0] for w in fmap.frequencies.omega])
    freq = np.bincount(idx, minlength=3) / 50_000
    assert np.allclose(freq, ratio / 10, atol=0.01)
    expected_w = np.sqrt(ratio.sum() / (3 * ratio))
    assert np.allclose(fmap.weights, expected_w[idx])


def test_weighted_estimator_matches_pool_estimate():
    X = np.random.default_rng(3).normal(size=(40, 2))
    profile = build_profile(GAUSS, X, 0.05, 4000, 4)
    pool_map = RandomFeatureMap(GAUSS, profile.pool, np.ones(len(profile.pool)))
    Phi_pool = feature_matrix(pool_map, X)
    Phi_w = feature_matrix(build_weighted(GAUSS, 100_000, profile, 5), X)
    assert np.max(np.abs(Phi_w @ Phi_w.T - Phi_pool @ Phi_pool.T)) <= 0.05
    assert np.max(np.abs(Phi_w @ Phi_w.T - gram_matrix(GAUSS, X))) <= 0.05


def test_degenerate_profile_rejected():
    pool = spectral_sample(GAUSS, 4, 0)
    with pytest.raises(DegenerateProfileError):
        build_weighted(GAUSS, 3, _profile(pool, np.zeros(4)), 0)


def test_default_pool_size():
    assert default_pool_size(10) == 2000
    assert default_pool_size(500) == 10_000


def test_map_json_round_trip(tmp_path):
    X = np.random.default_rng(6).normal(size=(20, 2))
    fmap = build_weighted(GAUSS, 12, build_profile(GAUSS, X, 0.1, 300, 1), 2)
    path = tmp_path / "map.json"
    fmap.save(path)
    loaded = RandomFeatureMap.load(path)
    assert set(fmap.to_dict()) == {"kernel", "s", "scheme", "frequencies", "phases", "weights", "seed"}
    assert np.array_equal(feature_matrix(loaded, X), feature_matrix(fmap, X))


@pytest.mark.parametrize("s", [3, 50])
def test_linear_gram_factor_preserves_gram(s):
    spec = KernelSpec("linear", 1.0, 5)
    X = np.random.default_rng(7).normal(size=(15, 5))
    fmap = build_plain(spec, s, 8)
    Phi = feature_matrix(fmap, X)
    F = gram_factor(fmap, X)
    assert F.shape[1] <= min(s, 5)
    assert np.allclose(F @ F.T, Phi @ Phi.T, atol=1e-12)


def test_stationary_gram_factor_is_feature_matrix():
    X = np.random.default_rng(9).normal(size=(5, 2))
    fmap = build_plain(GAUSS, 7, 1)
    assert np.array_equal(gram_factor(fmap, X), feature_matrix(fmap, X))
