"""Plain and leverage-weighted random feature maps.

A :class:`RandomFeatureMap` realises ``phi(x) = s^{-1/2} [w_j psi(v_j, x)]_j``.
Plain maps draw ``v_j`` from the spectral density and use unit weights.
Weighted maps resample atoms of a :class:`~rffrates.leverage.LeverageProfile`
pool in proportion to their leverage ratio ``tau(v)/p(v)`` and carry the
self-normalised importance weight ``w_j = sqrt(mean(ratio) / ratio_j)``, which
keeps ``E[w^2 psi psi]`` equal to the pool's plain Monte Carlo estimate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateProfileError
from .kernels import Frequencies, KernelSpec, feature_block, spectral_sample


@dataclass(frozen=True)
class RandomFeatureMap:
    kernel: KernelSpec
    frequencies: Frequencies
    weights: np.ndarray
    scheme: str = "plain"
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", weights)
        if self.scheme not in ("plain", "weighted"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if weights.shape != (len(self.frequencies),):
            raise ValueError("need exactly one weight per frequency")
        if len(self.frequencies) < 1:
            raise ValueError("a feature map needs at least one frequency")
        if not (np.all(np.isfinite(weights)) and np.all(weights > 0)):
            raise ValueError("weights must be finite and positive")
        if self.scheme == "plain" and not np.all(weights == 1.0):
            raise ValueError("plain maps carry unit weights")

    @property
    def s(self) -> int:
        return len(self.frequencies)

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "s": self.s,
            "scheme": self.scheme,
            "frequencies": self.frequencies.omega.tolist(),
            "phases": self.frequencies.phase.tolist(),
            "weights": self.weights.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RandomFeatureMap":
        freqs = Frequencies(np.array(data["frequencies"], dtype=float), np.array(data["phases"], dtype=float))
        fmap = cls(KernelSpec.from_dict(data["kernel"]), freqs, np.array(data["weights"], dtype=float),
                   data["scheme"], data.get("seed"))
        if fmap.s != data["s"]:
            raise ValueError("feature count does not match the stored frequencies")
        return fmap

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "RandomFeatureMap":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_plain(spec: KernelSpec, s: int, seed: int) -> RandomFeatureMap:
    if s < 1:
        raise ValueError("s must be >= 1")
    freqs = spectral_sample(spec, s, seed)
    return RandomFeatureMap(spec, freqs, np.ones(s), "plain", seed)


def default_pool_size(s: int) -> int:
    return max(20 * s, 2000)


def build_weighted(spec: KernelSpec, s: int, profile, seed: int) -> RandomFeatureMap:
    """Resample ``s`` atoms from ``profile.pool`` with probability proportional to ``profile.ratio``."""
    if s < 1:
        raise ValueError("s must be >= 1")
    ratio = np.asarray(profile.ratio, dtype=float)
    total = ratio.sum()
    if ratio.size == 0 or not total > 0:
        raise DegenerateProfileError("leverage pool has no positive mass")
    rng = np.random.default_rng(seed)
    idx = rng.choice(ratio.size, size=s, replace=True, p=ratio / total)
    weights = np.sqrt(total / (ratio.size * ratio[idx]))
    return RandomFeatureMap(spec, profile.pool[idx], weights, "weighted", seed,
                            meta={"pool_size": int(ratio.size), "lambda": profile.lam})


def feature_matrix(fmap: RandomFeatureMap, X) -> np.ndarray:
    """The (n, s) matrix whose i-th row is ``phi(x_i)``."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise ValueError("X must be nonempty")
    return feature_block(fmap.kernel, fmap.frequencies, X) * (fmap.weights / math.sqrt(fmap.s))


def approx_kernel(fmap: RandomFeatureMap, x, y) -> float:
    Phi = feature_matrix(fmap, np.vstack([np.ravel(x), np.ravel(y)]))
    return float(Phi[0] @ Phi[1])


def gram_factor(fmap: RandomFeatureMap, X) -> np.ndarray:
    """A matrix ``F`` with ``F F^T == Phi Phi^T`` and at most ``min(s, d)`` columns for linear maps.

    The ERM objective depends on the features only through ``Phi Phi^T`` (the
    optimum lies in the row space of ``Phi``), so training on ``F`` gives the
    same margins and objective as training on ``Phi``. For the linear family
    ``Phi = X M`` with ``M`` of size (d, s), which makes huge ``s`` cheap.
    Stationary maps return ``Phi`` itself.
    """
    if fmap.kernel.family != "linear":
        return feature_matrix(fmap, X)
    return np.asarray(X, dtype=float) @ linear_factor(fmap)


def linear_factor(fmap: RandomFeatureMap) -> np.ndarray:
    """Square root ``C`` (d, r) of ``M M^T`` where ``Phi = X M`` for a linear map."""
    M = fmap.frequencies.omega.T * (fmap.weights / math.sqrt(fmap.s))
    if M.shape[1] <= M.shape[0]:
        return M
    evals, evecs = np.linalg.eigh(M @ M.T)
    return evecs * np.sqrt(np.clip(evals, 0.0, None))
