"""Spectral and operator-level diagnostics on Gram matrices."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .erm import empirical_risk, zero_one_risk
from .leverage import _check_symmetric

RANK_CUTOFF = 1e-10
GAP_RATIO = 1e6
FLAT_RATIO = 0.5
MIN_R2 = 0.98


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    decay_class: str
    decay_param: float
    r2: float
    r_star: float
    h_star: int

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eigenvalues"] = self.eigenvalues.tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "eigenvalue"])
            for i, mu in enumerate(self.eigenvalues, start=1):
                writer.writerow([i, repr(float(mu))])


def normalized_eigenvalues(K) -> np.ndarray:
    """Eigenvalues of ``K/n``, clamped at zero and sorted in decreasing order."""
    K = _check_symmetric(K)
    mu = np.linalg.eigvalsh(K / K.shape[0])
    return np.sort(np.clip(mu, 0.0, None))[::-1]


def _linear_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def classify_decay(mu: np.ndarray):
    """Return ``(decay_class, decay_param, r2)`` for a nonincreasing spectrum.

    A spectrum is ``finite_rank`` when it drops off a cliff (the first
    eigenvalue under ``RANK_CUTOFF * mu_1`` sits more than ``GAP_RATIO`` below
    its predecessor) or when every eigenvalue is within ``FLAT_RATIO`` of the
    top one. Otherwise the resolved head (``mu_i >= mu_1 / n``; smaller
    eigenvalues of ``K/n`` are sampling noise) is fitted log-linearly against
    the index (``exponential``, parameter = rate) and log-log (``polynomial``,
    parameter = exponent ``gamma`` of ``i^-gamma``); the better fit wins if its
    R^2 reaches ``MIN_R2``.
    """
    mu = np.asarray(mu, dtype=float)
    n = mu.size
    if n == 0 or mu[0] <= 0:
        return "finite_rank", 0.0, 1.0
    rank = int(np.sum(mu >= RANK_CUTOFF * mu[0]))
    if rank < n and mu[rank - 1] > GAP_RATIO * max(mu[rank], 1e-300):
        return "finite_rank", float(rank), 1.0
    if mu[rank - 1] >= FLAT_RATIO * mu[0]:
        return "finite_rank", float(rank), 1.0
    head = max(3, int(np.sum(mu >= mu[0] / n)))
    head = min(head, rank)
    if head < 3:
        return "unclassified", float("nan"), 0.0
    idx = np.arange(1, head + 1, dtype=float)
    logmu = np.log(mu[:head])
    exp_slope, _, exp_r2 = _linear_fit(idx, logmu)
    pol_slope, _, pol_r2 = _linear_fit(np.log(idx), logmu)
    if exp_r2 >= pol_r2:
        cls, param, r2 = "exponential", -exp_slope, exp_r2
    else:
        cls, param, r2 = "polynomial", -pol_slope, pol_r2
    if r2 < MIN_R2:
        return "unclassified", param, r2
    return cls, param, r2


def local_rademacher_fixed_point(mu, n: int) -> tuple[float, int]:
    """``min_h h/n + sqrt(sum_{i>h} mu_i / n)`` over ``h = 0..n``; ties go to the smallest ``h``."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < -1e-10):
        raise ValueError("eigenvalues must be nonnegative")
    if np.any(np.diff(mu) > 1e-12 * max(1.0, float(np.abs(mu).max(initial=0.0)))):
        raise ValueError("eigenvalues must be nonincreasing")
    mu = np.clip(mu, 0.0, None)
    padded = np.zeros(n)
    padded[: min(n, mu.size)] = mu[:n]
    tail = np.concatenate([np.cumsum(padded[::-1])[::-1], [0.0]])  # tail[h] = sum_{i>h} mu_i
    values = np.arange(n + 1) / n + np.sqrt(np.clip(tail, 0.0, None) / n)
    h = int(np.argmin(values))
    return float(values[h]), h


def gram_spectrum(K) -> SpectrumReport:
    mu = normalized_eigenvalues(K)
    cls, param, r2 = classify_decay(mu)
    r_star, h_star = local_rademacher_fixed_point(mu, mu.size)
    return SpectrumReport(mu, cls, param, r2, r_star, h_star)


def _inv_sqrt(A: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(A)
    evals = np.clip(evals, 0.0, None)
    return (evecs / np.sqrt(evals)) @ evecs.T


def operator_approx_error(K, K_tilde, lam: float) -> float:
    """``|(K/n + lam)^{-1/2} (K_tilde - K)/n (K/n + lam)^{-1/2}|_2``."""
    K = _check_symmetric(K)
    K_tilde = _check_symmetric(K_tilde)
    if K.shape != K_tilde.shape:
        raise ValueError("K and K_tilde must have the same shape")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    n = K.shape[0]
    W = _inv_sqrt(K / n + lam * np.eye(n))
    middle = W @ ((K_tilde - K) / n) @ W
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (middle + middle.T)))))


def approximate_target(Phi, f_vals, lam: float) -> tuple[np.ndarray, float]:
    """Closed-form ``argmin_beta |Phi beta - f|^2/n + lam |beta|^2`` and its L2(P_n) error."""
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    f_vals = np.asarray(f_vals, dtype=float).ravel()
    n, s = Phi.shape
    if f_vals.shape[0] != n:
        raise ValueError("f_vals length must match Phi rows")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if s <= n:
        beta = np.linalg.solve(Phi.T @ Phi / n + lam * np.eye(s), Phi.T @ f_vals / n)
    else:
        beta = Phi.T @ np.linalg.solve(Phi @ Phi.T / n + lam * np.eye(n), f_vals / n)
    resid = Phi @ beta - f_vals
    return beta, math.sqrt(float(resid @ resid) / n)


def excess_risk(model, Z_holdout, y_holdout, baseline_risk: float, kind: str = "zero_one") -> float:
    """Holdout risk of ``model`` minus ``baseline_risk``.

    ``kind`` selects the zero-one or the model's own surrogate loss. The result
    is not clamped: sampling noise can make it negative.
    """
    y_holdout = np.asarray(y_holdout)
    if y_holdout.size == 0:
        raise ValueError("empty holdout")
    if kind == "zero_one":
        risk = zero_one_risk(model, Z_holdout, y_holdout)
    elif kind == "surrogate":
        risk = empirical_risk(model, Z_holdout, y_holdout)
    else:
        raise ValueError(f"unknown risk kind {kind!r}")
    return risk - float(baseline_risk)
