"""Shift-invariant kernels, their spectral densities and the bounded feature map.

Every kernel here is written as an expectation ``k(x, y) = E_v[psi(v, x) psi(v, y)]``
over frequencies ``v`` drawn from the kernel's spectral density ``p``.

* ``gaussian``  ``exp(-|x-y|^2 / (2 sigma^2))``; ``omega ~ N(0, I / sigma^2)``.
* ``laplacian`` ``exp(-|x-y|_1 / sigma)``; ``omega`` is product Cauchy with scale ``1/sigma``.
* ``linear``    ``x.y / d`` on the unit sphere; ``v`` is uniform on the sphere.

For the two stationary families ``psi(v, x) = sqrt(2) cos(omega.x + b)`` with a
uniform phase ``b``; for ``linear`` the phase is unused and ``psi(v, x) = v.x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from .errors import UnsupportedFamilyError

FAMILIES = ("gaussian", "laplacian", "linear")
STATIONARY = ("gaussian", "laplacian")


@dataclass(frozen=True)
class KernelSpec:
    family: str
    bandwidth: float = 1.0
    input_dim: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedFamilyError(f"unknown kernel family {self.family!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if int(self.input_dim) != self.input_dim or self.input_dim < 1:
            raise ValueError("input_dim must be a positive integer")

    @property
    def kappa(self) -> float:
        """Uniform bound on ``|psi(v, x)|``."""
        return 1.0 if self.family == "linear" else math.sqrt(2.0)

    def to_dict(self) -> dict:
        return {"family": self.family, "bandwidth": self.bandwidth, "input_dim": self.input_dim}

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        return cls(data["family"], float(data["bandwidth"]), int(data["input_dim"]))


@dataclass(frozen=True)
class Frequency:
    omega: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "omega", np.atleast_1d(np.asarray(self.omega, dtype=float)))
        if not 0.0 <= self.phase < 2 * math.pi:
            raise ValueError("phase must lie in [0, 2*pi)")


@dataclass(frozen=True)
class Frequencies:
    """A batch of frequencies stored column-wise: ``omega`` is (s, d), ``phase`` is (s,)."""

    omega: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        phase = np.atleast_1d(np.asarray(self.phase, dtype=float))
        if omega.shape[0] != phase.shape[0]:
            raise ValueError("omega and phase must have the same number of rows")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "phase", phase)

    def __len__(self) -> int:
        return self.phase.shape[0]

    def __getitem__(self, index):
        if isinstance(index, (int, np.integer)):
            return Frequency(self.omega[index].copy(), float(self.phase[index]))
        return Frequencies(self.omega[index], self.phase[index])

    def __iter__(self) -> Iterator[Frequency]:
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def from_list(cls, freqs: list[Frequency]) -> "Frequencies":
        return cls(np.stack([f.omega for f in freqs]), np.array([f.phase for f in freqs]))


def _as_points(spec: KernelSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise ValueError(f"expected points of dimension {spec.input_dim}, got shape {X.shape}")
    return X


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != (spec.input_dim,) or y.shape != (spec.input_dim,):
        raise ValueError(f"expected vectors of length {spec.input_dim}")
    diff = x - y
    if spec.family == "gaussian":
        return float(np.exp(-diff @ diff / (2 * spec.bandwidth**2)))
    if spec.family == "laplacian":
        return float(np.exp(-np.abs(diff).sum() / spec.bandwidth))
    return float(x @ y / spec.input_dim)


def cross_gram(spec: KernelSpec, X, Y) -> np.ndarray:
    """Kernel matrix between the rows of ``X`` and the rows of ``Y``."""
    X = _as_points(spec, X)
    Y = _as_points(spec, Y)
    if spec.family == "gaussian":
        return np.exp(-cdist(X, Y, "sqeuclidean") / (2 * spec.bandwidth**2))
    if spec.family == "laplacian":
        return np.exp(-cdist(X, Y, "cityblock") / spec.bandwidth)
    return X @ Y.T / spec.input_dim


def gram_matrix(spec: KernelSpec, X) -> np.ndarray:
    X = _as_points(spec, X)
    K = cross_gram(spec, X, X)
    K = 0.5 * (K + K.T)
    if spec.family in STATIONARY:
        np.fill_diagonal(K, 1.0)
    return K


def kernel_matvec(spec: KernelSpec, X, v, block: int = 2048) -> np.ndarray:
    """``K(X, X) @ v`` without forming the full matrix."""
    X = _as_points(spec, X)
    v = np.asarray(v, dtype=float)
    if spec.family == "linear":
        return X @ (X.T @ v) / spec.input_dim
    out = np.empty((X.shape[0],) + v.shape[1:])
    for start in range(0, X.shape[0], block):
        out[start:start + block] = cross_gram(spec, X[start:start + block], X) @ v
    return out


def feature_eval(spec: KernelSpec, f: Frequency, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (spec.input_dim,) or f.omega.shape != (spec.input_dim,):
        raise ValueError("dimension mismatch between frequency and point")
    if spec.family == "linear":
        return float(f.omega @ x)
    return float(math.sqrt(2.0) * math.cos(f.omega @ x + f.phase))


def feature_block(spec: KernelSpec, freqs: Frequencies, X) -> np.ndarray:
    """Unscaled features ``psi(v_j, x_i)`` as an (n, s) array."""
    X = _as_points(spec, X)
    if freqs.omega.shape[1] != spec.input_dim:
        raise ValueError("frequency dimension does not match the kernel")
    proj = X @ freqs.omega.T
    if spec.family == "linear":
        return proj
    proj += freqs.phase
    return math.sqrt(2.0) * np.cos(proj)


def spectral_sample(spec: KernelSpec, count: int, seed) -> Frequencies:
    """Draw ``count`` frequencies from the spectral density of ``spec``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    d = spec.input_dim
    if spec.family == "gaussian":
        omega = rng.standard_normal((count, d)) / spec.bandwidth
    elif spec.family == "laplacian":
        omega = rng.standard_cauchy((count, d)) / spec.bandwidth
    else:
        omega = rng.standard_normal((count, d))
        omega /= np.linalg.norm(omega, axis=1, keepdims=True)
        return Frequencies(omega, np.zeros(count))
    phase = rng.uniform(0.0, 2 * math.pi, size=count)
    return Frequencies(omega, phase)


def spectral_density(spec: KernelSpec, f) -> np.ndarray | float:
    """Density of the frequency part of ``f``; the uniform phase factor is left out.

    Accepts a single :class:`Frequency` (returns a float) or a batch.
    For ``linear`` the density is taken against surface measure on the sphere.
    """
    omega = np.atleast_2d(f.omega)
    d = spec.input_dim
    if spec.family == "gaussian":
        sig = spec.bandwidth
        logp = -0.5 * sig**2 * np.sum(omega**2, axis=1) + d * (math.log(sig) - 0.5 * math.log(2 * math.pi))
        dens = np.exp(logp)
    elif spec.family == "laplacian":
        sig = spec.bandwidth
        dens = np.prod(sig / (math.pi * (1.0 + (sig * omega) ** 2)), axis=1)
    else:
        area = math.exp(math.log(2.0) + 0.5 * d * math.log(math.pi) - gammaln(0.5 * d))
        dens = np.full(omega.shape[0], 1.0 / area)
    if isinstance(f, Frequency):
        return float(dens[0])
    return dens
