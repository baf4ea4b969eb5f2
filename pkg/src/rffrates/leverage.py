"""Empirical ridge leverage scores, effective dimension and feature budgets.

The population operator ``L`` is replaced by the empirical one, ``K/n`` acting on
``L2(P_n)`` with inner product ``<f, g> = f.g / n``.  For a frequency ``v`` with
feature column ``z_v = (psi(v, x_1), ..., psi(v, x_n))``::

    tau(v) = p(v) * z_v^T (K/n + lam I)^{-1} z_v / n

and ``E_{v~p}[tau(v)/p(v)] = tr[(K/n)(K/n + lam I)^{-1}] = d_hat(lam)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import Frequencies, Frequency, KernelSpec, feature_block, gram_matrix, spectral_density, spectral_sample


@dataclass(frozen=True)
class LeverageProfile:
    pool: Frequencies
    tau: np.ndarray
    ratio: np.ndarray  # tau / p, the quantity pool resampling uses
    lam: float
    d_hat: float
    d_tau: float

    def to_dict(self) -> dict:
        return {
            "pool": {"frequencies": self.pool.omega.tolist(), "phases": self.pool.phase.tolist()},
            "tau": self.tau.tolist(),
            "ratio": self.ratio.tolist(),
            "lambda": self.lam,
            "d_hat": self.d_hat,
            "d_tau": self.d_tau,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LeverageProfile":
        pool = Frequencies(np.array(data["pool"]["frequencies"]), np.array(data["pool"]["phases"]))
        return cls(pool, np.array(data["tau"]), np.array(data["ratio"]), float(data["lambda"]),
                   float(data["d_hat"]), float(data["d_tau"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _check_lam(lam: float) -> None:
    if not lam > 0:
        raise ValueError("lambda must be positive")


def _check_symmetric(K: np.ndarray) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(K).max(initial=0.0)))
    if not np.allclose(K, K.T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("matrix is not symmetric")
    return K


def _regularised_factor(K: np.ndarray, lam: float):
    n = K.shape[0]
    return cho_factor(K / n + lam * np.eye(n), lower=True)


def _leverage_ratio(factor, Z: np.ndarray, block: int = 8192) -> np.ndarray:
    n = Z.shape[0]
    out = np.empty(Z.shape[1])
    for start in range(0, Z.shape[1], block):
        Zb = Z[:, start:start + block]
        out[start:start + block] = np.einsum("ij,ij->j", Zb, cho_solve(factor, Zb)) / n
    return out


def empirical_leverage(spec: KernelSpec, X, lam: float, f: Frequency) -> float:
    _check_lam(lam)
    X = np.asarray(X, dtype=float)
    K = gram_matrix(spec, X)
    z = feature_block(spec, Frequencies(f.omega[None, :], [f.phase]), X)
    ratio = _leverage_ratio(_regularised_factor(K, lam), z)[0]
    return float(spectral_density(spec, f) * ratio)


def effective_dimension(K, lam: float, method: str = "eig") -> float:
    """``tr[(K/n)(K/n + lam I)^{-1}]`` by eigenvalue sum (``eig``) or a Cholesky solve (``solve``)."""
    _check_lam(lam)
    K = _check_symmetric(K)
    n = K.shape[0]
    if method == "eig":
        mu = np.clip(np.linalg.eigvalsh(K / n), 0.0, None)
        return float(np.sum(mu / (mu + lam)))
    if method == "solve":
        factor = _regularised_factor(K, lam)
        return float(np.trace(cho_solve(factor, K / n)))
    raise ValueError(f"unknown method {method!r}")


def build_profile(spec: KernelSpec, X, lam: float, pool_size: int, seed, K=None) -> LeverageProfile:
    """Leverage of ``pool_size`` frequencies drawn from ``p``, sharing one factorisation."""
    _check_lam(lam)
    if pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    X = np.asarray(X, dtype=float)
    if K is None:
        K = gram_matrix(spec, X)
    pool = spectral_sample(spec, pool_size, seed)
    ratio = _leverage_ratio(_regularised_factor(K, lam), feature_block(spec, pool, X))
    ratio = np.clip(ratio, 0.0, None)
    tau = spectral_density(spec, pool) * ratio
    return LeverageProfile(pool, tau, ratio, float(lam), effective_dimension(K, lam), float(ratio.mean()))


def feature_budget(scheme: str, lam: float, d_hat: float, kappa: float, delta: float,
                   d_tau: float | None = None) -> int:
    """Number of features sufficient for the risk bound.

    ``plain``    ceil(5 kappa^2/lam * ln(16 d_hat/delta))
    ``weighted`` ceil(5 d_hat * ln(16 d_hat/delta))
    ``theorem``  ceil(12 d_tau * ln(d_hat/delta)), with ``d_tau`` defaulting to kappa^2/lam
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not d_hat > 0:
        raise ValueError("d_hat must be positive")
    _check_lam(lam)
    if scheme == "plain":
        value = 5 * kappa**2 / lam * math.log(16 * d_hat / delta)
    elif scheme == "weighted":
        value = 5 * d_hat * math.log(16 * d_hat / delta)
    elif scheme == "theorem":
        if d_tau is None:
            d_tau = kappa**2 / lam
        value = 12 * d_tau * math.log(d_hat / delta)
    else:
        raise ValueError(f"unknown budget scheme {scheme!r}")
    return max(1, math.ceil(value))
