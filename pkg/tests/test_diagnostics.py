import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import ortho_group

from rffrates.diagnostics import (SpectrumReport, approximate_target, classify_decay, excess_risk, gram_spectrum,
                                  local_rademacher_fixed_point, normalized_eigenvalues, operator_approx_error)
from rffrates.erm import Loss, TrainedModel
from rffrates.kernels import KernelSpec, gram_matrix


def _from_spectrum(mu, seed=0):
    n = len(mu)
    U = ortho_group.rvs(n, random_state=seed)
    return n * (U * np.asarray(mu)) @ U.T


def _fixed_point_oracle(mu, n):
    best, arg = math.inf, None
    for h in range(n + 1):
        tail = sum(float(m) for m in mu[h:n])
        val = h / n + math.sqrt(max(tail, 0.0) / n)
        if val < best:
            best, arg = val, h
    return best, arg


def test_fixed_point_examples():
    assert local_rademacher_fixed_point(np.zeros(5), 5) == (0.0, 0)
    r, h = local_rademacher_fixed_point([1.0, 0.0], 2)
    assert (r, h) == (0.5, 1)
    r, h = local_rademacher_fixed_point([0.4, 0.1, 0.0, 0.0], 4)
    assert h == 0 and r == pytest.approx(math.sqrt(0.5 / 4))


@given(st.lists(st.floats(0, 10), min_size=1, max_size=40))
def test_fixed_point_equals_oracle(values):
    mu = np.sort(np.array(values))[::-1]
    n = mu.size
    r, h = local_rademacher_fixed_point(mu, n)
    r_o, h_o = _fixed_point_oracle(list(mu), n)
    assert h == h_o
    assert r == pytest.approx(r_o, rel=1e-12, abs=1e-15)


def test_fixed_point_input_checks():
    with pytest.raises(ValueError):
        local_rademacher_fixed_point([0.5, 1.0], 2)
    with pytest.raises(ValueError):
        local_rademacher_fixed_point([1.0, -0.1], 2)


def test_identity_spectrum_is_finite_rank():
    rep = gram_spectrum(3 * np.eye(3))
    assert np.allclose(rep.eigenvalues, 1.0)
    assert rep.decay_class == "finite_rank" and rep.decay_param == 3


def test_duplicate_points_rank_one():
    K = gram_matrix(KernelSpec("gaussian", 1.0, 1), np.zeros((6, 1)))
    rep = gram_spectrum(K)
    assert rep.decay_class == "finite_rank" and rep.decay_param == 1


def test_geometric_spectrum_is_exponential():
    mu = 2.0 ** -np.arange(1, 41)
    rep = gram_spectrum(_from_spectrum(mu))
    assert rep.decay_class == "exponential"
    assert rep.decay_param == pytest.approx(math.log(2), rel=0.05)


def test_power_law_spectrum_is_polynomial():
    mu = np.arange(1, 301, dtype=float) ** -2.0
    cls, gamma, r2 = classify_decay(mu)
    assert cls == "polynomial" and gamma == pytest.approx(2.0, rel=0.01) and r2 > 0.999


def test_noisy_spectrum_unclassified():
    mu = np.sort(np.abs(np.random.default_rng(0).standard_cauchy(200)))[::-1]
    mu[:50] = np.linspace(10, 9.0, 50)
    assert classify_decay(mu)[0] == "unclassified"


def test_eigenvalues_sorted_and_trace_preserved():
    K = gram_matrix(KernelSpec("gaussian", 0.7, 2), np.random.default_rng(1).normal(size=(80, 2)))
    rep = gram_spectrum(K)
    assert np.all(np.diff(rep.eigenvalues) <= 0) and np.all(rep.eigenvalues >= 0)
    assert abs(rep.eigenvalues.sum() - np.trace(K) / 80) <= 1e-8
    assert rep.eigenvalues.sum() <= 2.0  # kappa^2
    assert rep.r_star == pytest.approx(_fixed_point_oracle(list(rep.eigenvalues), 80)[0])


def test_spectrum_rejects_asymmetric():
    with pytest.raises(ValueError):
        gram_spectrum(np.array([[1.0, 0.2], [0.0, 1.0]]))


def test_spectrum_serialisation(tmp_path):
    rep = gram_spectrum(_from_spectrum([0.5, 0.25, 0.125, 0.0625]))
    assert isinstance(rep, SpectrumReport)
    assert set(rep.to_dict()) == {"eigenvalues", "decay_class", "decay_param", "r2", "r_star", "h_star"}
    path = tmp_path / "eig.csv"
    rep.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,eigenvalue" and len(lines) == 5
    assert float(lines[1].split(",")[1]) == pytest.approx(0.5)


def test_operator_error_examples():
    X = np.random.default_rng(2).normal(size=(20, 2))
    K = gram_matrix(KernelSpec("gaussian", 1.0, 2), X)
    assert operator_approx_error(K, K, 0.1) == pytest.approx(0.0, abs=1e-12)
    E = np.random.default_rng(3).normal(size=(20, 20))
    E = 0.01 * (E + E.T)
    big = operator_approx_error(K, K + E, 1e6)
    assert big == pytest.approx(np.abs(np.linalg.eigvalsh(E / 20)).max() / 1e6, rel=1e-3)


def test_operator_error_symmetry_and_linearity():
    X = np.random.default_rng(4).normal(size=(25, 2))
    K = gram_matrix(KernelSpec("gaussian", 1.0, 2), X)
    E = np.random.default_rng(5).normal(size=(25, 25))
    E = 0.01 * (E + E.T)
    a = operator_approx_error(K, K + E, 0.05)
    assert operator_approx_error(K, K - E, 0.05) == pytest.approx(a, rel=1e-8)
    assert operator_approx_error(K, K + 3 * E, 0.05) == pytest.approx(3 * a, rel=1e-8)


def test_operator_error_oracle():
    X = np.random.default_rng(6).normal(size=(15, 2))
    K = gram_matrix(KernelSpec("gaussian", 1.0, 2), X)
    Kt = gram_matrix(KernelSpec("gaussian", 1.2, 2), X)
    n, lam = 15, 0.1
    A = K / n + lam * np.eye(n)
    # generalized symmetric eigenproblem: eigenvalues of A^{-1} (Kt - K)/n
    oracle = np.abs(np.linalg.eigvals(np.linalg.solve(A, (Kt - K) / n)).real).max()
    assert operator_approx_error(K, Kt, lam) == pytest.approx(oracle, rel=1e-8)


def test_operator_error_errors():
    with pytest.raises(ValueError):
        operator_approx_error(np.eye(2), np.eye(3), 0.1)
    with pytest.raises(ValueError):
        operator_approx_error(np.eye(2), np.eye(2), 0.0)


def test_approximate_target_scalar():
    beta, err = approximate_target([[1.0]], [1.0], 1.0)
    assert beta[0] == pytest.approx(0.5) and err == pytest.approx(0.5)


def test_approximate_target_interpolates_span():
    Phi = np.random.default_rng(7).normal(size=(30, 5))
    f = Phi @ np.arange(5.0)
    _, err = approximate_target(Phi, f, 1e-12)
    assert err <= 1e-5


@pytest.mark.parametrize("n,s", [(20, 4), (6, 30)])
def test_approximate_target_beats_random_candidates(n, s):
    rng = np.random.default_rng(8)
    Phi, f = rng.normal(size=(n, s)), rng.normal(size=n)
    lam = 0.1
    beta, _ = approximate_target(Phi, f, lam)
    obj = lambda b: np.mean((Phi @ b.T - f[:, None]) ** 2, axis=0) + lam * np.sum(b**2, axis=1)
    best = obj(beta[None, :])[0]
    for _ in range(10):
        cands = beta + rng.normal(scale=0.5, size=(100_000, s))
        assert best <= obj(cands).min() + 1e-12


def test_excess_risk_examples():
    Z = np.vstack([np.ones((3, 1)), -np.ones((2, 1))])
    y = np.array([1, 1, -1, -1, -1])
    model = TrainedModel(np.array([1.0]), 0.1, Loss("hinge"), "feature", 0.0)
    own = float(np.mean(np.where(Z[:, 0] >= 0, 1, -1) != y))
    assert excess_risk(model, Z, y, own) == 0.0
    assert excess_risk(model, Z, y, 0.0, kind="surrogate") == pytest.approx(0.4)
    with pytest.raises(ValueError):
        excess_risk(model, np.zeros((0, 1)), [], 0.0)


def test_constant_classifier_excess_under_massart():
    rng = np.random.default_rng(9)
    m, gamma0 = 10_000, 0.9
    x = rng.normal(size=m)
    clean = np.where(x >= 0, 1, -1)
    y = np.where(rng.random(m) < (1 - gamma0) / 2, -clean, clean)
    const = TrainedModel(np.array([1.0]), 0.1, Loss("hinge"), "feature", 0.0)
    excess = excess_risk(const, np.ones((m, 1)), y, (1 - gamma0) / 2)
    assert excess == pytest.approx(gamma0 / 2, abs=0.03)
    bayes = excess_risk(const, x[:, None], y, (1 - gamma0) / 2)
    assert abs(bayes) <= 3 * 2 / math.sqrt(m)


def test_normalized_eigenvalues_clamped():
    K = _from_spectrum([1.0, 1e-18, 0.0])
    assert np.all(normalized_eigenvalues(K) >= 0)
