import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import ortho_group

from rffrates.kernels import Frequency, KernelSpec, feature_eval, gram_matrix, spectral_density
from rffrates.leverage import (LeverageProfile, build_profile, effective_dimension, empirical_leverage,
                               feature_budget)

GAUSS = KernelSpec("gaussian", 1.0, 2)


def _psd(eigs, seed=0):
    U = ortho_group.rvs(len(eigs), random_state=seed)
    return len(eigs) * (U * np.asarray(eigs)) @ U.T


def _leverage_oracle(spec, X, lam, f):
    """Gaussian-kernel leverage via a dense inverse, independent of the library's Cholesky path."""
    n = X.shape[0]
    K = np.array([[np.exp(-np.sum((x - y) ** 2) / (2 * spec.bandwidth**2)) for y in X] for x in X])
    z = np.array([feature_eval(spec, f, x) for x in X])
    return spectral_density(spec, f) * z @ np.linalg.inv(K / n + lam * np.eye(n)) @ z / n


def test_effective_dimension_examples():
    assert effective_dimension(_psd([1, 1]), 1.0) == pytest.approx(1.0)
    assert effective_dimension(_psd([1, 0.5, 0.25], 3), 0.5) == pytest.approx(1.5)
    assert effective_dimension(np.zeros((4, 4)), 0.3) == 0.0


def test_effective_dimension_rejects_asymmetric_and_bad_lambda():
    with pytest.raises(ValueError):
        effective_dimension(np.array([[1.0, 0.5], [0.0, 1.0]]), 0.1)
    with pytest.raises(ValueError):
        effective_dimension(np.eye(2), 0.0)


@given(st.integers(2, 40), st.floats(1e-4, 10), st.integers(0, 10_000))
def test_effective_dimension_methods_agree(n, lam, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    K = A @ A.T
    assert abs(effective_dimension(K, lam, "eig") - effective_dimension(K, lam, "solve")) <= 1e-8


def test_effective_dimension_monotone_and_limits():
    K = gram_matrix(GAUSS, np.random.default_rng(0).normal(size=(30, 2)))
    lams = np.logspace(-8, 6, 30)
    vals = [effective_dimension(K, lam) for lam in lams]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-5
    low_rank = gram_matrix(KernelSpec("linear", 1.0, 3), np.random.default_rng(1).normal(size=(10, 3)))
    assert effective_dimension(low_rank, 1e-9) == pytest.approx(3.0, abs=1e-5)


def test_effective_dimension_bounded_by_trace():
    K = gram_matrix(GAUSS, np.random.default_rng(2).normal(size=(25, 2)))
    for lam in (1e-3, 0.1, 10):
        assert effective_dimension(K, lam) <= min(25, np.trace(K / 25) / lam) + 1e-12


def test_single_point_closed_form():
    # n = 1, psi = sqrt(2), k(x, x) = 1, lam = 1: tau = p * 2 / (1 + 1) = p
    f = Frequency([0.0, 0.0], 0.0)
    tau = empirical_leverage(GAUSS, [[0.3, 0.4]], 1.0, f)
    assert tau == pytest.approx(spectral_density(GAUSS, f), rel=1e-12)


def test_leverage_matches_dense_oracle():
    X = np.random.default_rng(3).normal(size=(12, 2))
    f = Frequency([0.7, -1.1], 2.0)
    assert empirical_leverage(GAUSS, X, 0.05, f) == pytest.approx(_leverage_oracle(GAUSS, X, 0.05, f), rel=1e-9)


def test_huge_lambda_kills_leverage():
    X = np.random.default_rng(4).normal(size=(10, 2))
    f = Frequency([0.2, 0.1], 1.0)
    assert empirical_leverage(GAUSS, X, 1e9, f) <= spectral_density(GAUSS, f) * 2 / 1e9


@given(st.lists(st.floats(-6, 6), min_size=2, max_size=2), st.floats(0, 2 * math.pi, exclude_max=True),
       st.floats(1e-3, 10))
def test_leverage_ratio_bound(omega, phase, lam):
    X = np.random.default_rng(5).normal(size=(15, 2))
    f = Frequency(omega, phase)
    p = spectral_density(GAUSS, f)
    tau = empirical_leverage(GAUSS, X, lam, f)
    assert 0.0 <= tau
    if p > 0:
        assert tau / p <= GAUSS.kappa**2 / lam * (1 + 1e-10)


def test_profile_fields_and_determinism():
    X = np.random.default_rng(6).normal(size=(30, 2))
    a = build_profile(GAUSS, X, 0.1, 500, 7)
    b = build_profile(GAUSS, X, 0.1, 500, 7)
    assert np.array_equal(a.tau, b.tau)
    assert np.allclose(a.tau, spectral_density(GAUSS, a.pool) * a.ratio)
    assert np.all(a.ratio <= GAUSS.kappa**2 / 0.1 * (1 + 1e-10))
    assert a.d_hat == pytest.approx(effective_dimension(gram_matrix(GAUSS, X), 0.1))
    single = empirical_leverage(GAUSS, X, 0.1, a.pool[3])
    assert a.tau[3] == pytest.approx(single, rel=1e-9)


def test_pool_mean_tracks_effective_dimension():
    X = np.random.default_rng(8).normal(size=(100, 2))
    prof = build_profile(GAUSS, X, 0.05, 100_000, 9)
    assert abs(prof.ratio.mean() / prof.d_hat - 1) <= 0.02


def test_linear_family_pool_mean():
    spec = KernelSpec("linear", 1.0, 5)
    X = np.random.default_rng(10).normal(size=(80, 5))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    prof = build_profile(spec, X, 0.01, 50_000, 11)
    assert abs(prof.ratio.mean() / prof.d_hat - 1) <= 0.02


def test_profile_json_round_trip():
    X = np.random.default_rng(12).normal(size=(10, 2))
    prof = build_profile(GAUSS, X, 0.2, 20, 1)
    again = LeverageProfile.from_dict(json.loads(prof.to_json()))
    assert np.array_equal(again.tau, prof.tau) and np.array_equal(again.pool.omega, prof.pool.omega)
    assert again.d_hat == prof.d_hat


def test_budget_examples():
    assert feature_budget("plain", 0.1, 3.0, math.sqrt(2), 0.1) == 618
    assert feature_budget("weighted", 0.1, 3.0, math.sqrt(2), 0.1) == 93
    assert feature_budget("theorem", 0.1, 3.0, math.sqrt(2), 0.1) == math.ceil(12 * 20 * math.log(30))
    assert feature_budget("theorem", 0.1, 3.0, math.sqrt(2), 0.1, d_tau=3.0) == math.ceil(36 * math.log(30))


def test_budget_errors():
    with pytest.raises(ValueError):
        feature_budget("plain", 0.1, 3.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        feature_budget("plain", 0.1, 0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        feature_budget("nystrom", 0.1, 3.0, 1.0, 0.1)


@given(st.floats(1e-4, 1.0), st.floats(1e-3, 0.99), st.floats(1.0, 100.0))
def test_weighted_budget_never_exceeds_plain(lam, delta, d_raw):
    kappa = math.sqrt(2)
    d_hat = min(d_raw, kappa**2 / lam)
    assert feature_budget("weighted", lam, d_hat, kappa, delta) <= feature_budget("plain", lam, d_hat, kappa, delta)
