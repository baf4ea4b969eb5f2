"""Regularised ERM with Lipschitz losses in feature or kernel form.

Feature form::

    min_beta  (1/n) sum_i l(y_i, phi_i.beta) + lam |beta|^2

Kernel form (representer expansion ``f = K alpha``)::

    min_alpha (1/n) sum_i l(y_i, (K alpha)_i) + lam alpha^T K alpha

Hinge problems are solved by dual coordinate ascent and stop on a duality gap
``<= tol``. Logistic problems use damped Newton steps and stop once
``|grad|^2 / (4 lam) <= tol``, which bounds the suboptimality of a
``2 lam``-strongly convex objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import _sdca
from .errors import ConvergenceError

REPRESENTATIONS = ("feature", "kernel")


@dataclass(frozen=True)
class Loss:
    kind: str = "hinge"

    def __post_init__(self):
        if self.kind not in ("hinge", "logistic"):
            raise ValueError(f"unknown loss {self.kind!r}")

    @property
    def lipschitz(self) -> float:
        return 1.0

    def value(self, y, t):
        z = np.asarray(y) * np.asarray(t)
        if self.kind == "hinge":
            return np.maximum(0.0, 1.0 - z)
        return np.logaddexp(0.0, -z)

    def derivative(self, y, t):
        """Derivative in the margin argument ``t`` (a subgradient for hinge)."""
        y = np.asarray(y, dtype=float)
        z = y * np.asarray(t)
        if self.kind == "hinge":
            return np.where(z < 1.0, -y, 0.0)
        return -y * expit(-z)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iters: int = 20000
    seed: int = 0
    check_every: int = 5


@dataclass(frozen=True)
class TrainedModel:
    coefficients: np.ndarray
    lam: float
    loss: Loss
    representation: str
    objective_value: float
    norm_constraint: float | None = None
    certificate: float = float("nan")
    iterations: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "coefficients": np.asarray(self.coefficients).tolist(),
            "lambda": self.lam,
            "loss": self.loss.kind,
            "representation": self.representation,
            "objective_value": self.objective_value,
            "norm_constraint": self.norm_constraint,
            "certificate": self.certificate,
            "iterations": self.iterations,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        return cls(np.array(data["coefficients"], dtype=float), float(data["lambda"]), Loss(data["loss"]),
                   data["representation"], float(data["objective_value"]), data.get("norm_constraint"),
                   float(data.get("certificate", float("nan"))), int(data.get("iterations", 0)),
                   data.get("meta", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def objective(representation: str, coef, data, y, loss: Loss, lam: float) -> float:
    """Regularised objective; ``data`` is ``Phi`` (feature form) or ``K`` (kernel form)."""
    coef = np.asarray(coef, dtype=float)
    margins = data @ coef
    risk = float(np.mean(loss.value(y, margins)))
    if representation == "feature":
        return risk + lam * float(coef @ coef)
    return risk + lam * float(coef @ margins)


def _validate(data, y, lam):
    data = np.asarray(data, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError("expected a nonempty 2-d design")
    if data.shape[0] != y.shape[0]:
        raise ValueError("labels and design disagree on n")
    if not np.all(np.isfinite(data)):
        raise ValueError("design contains non-finite values")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return data, y


def _orders(rng, n, epochs):
    return np.stack([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)


def _hinge_feature(Phi, y, lam, opts):
    n, s = Phi.shape
    upper = 1.0 / n
    a = np.zeros(n)
    beta = np.zeros(s)
    sqnorm = np.einsum("ij,ij->i", Phi, Phi)
    rng = np.random.default_rng(opts.seed)
    Phi_c = np.ascontiguousarray(Phi)
    best = (np.inf, beta.copy())
    epochs = 0
    while epochs < opts.max_iters:
        block = min(opts.check_every, opts.max_iters - epochs)
        _sdca.feature_epochs(Phi_c, y, lam, a, beta, sqnorm, _orders(rng, n, block), upper)
        epochs += block
        beta = Phi.T @ (a * y) / (2 * lam)
        primal = float(np.mean(np.maximum(0.0, 1.0 - y * (Phi @ beta)))) + lam * float(beta @ beta)
        gap = primal - (float(a.sum()) - lam * float(beta @ beta))
        if gap < best[0]:
            best = (gap, beta.copy())
        if gap <= opts.tol:
            return beta, gap, epochs
    raise ConvergenceError(f"hinge dual ascent stopped with gap {best[0]:.3g}", best=best[1])


def _hinge_kernel(K, y, lam, opts):
    n = K.shape[0]
    upper = 1.0 / n
    a = np.zeros(n)
    alpha = np.zeros(n)
    f = np.zeros(n)
    rng = np.random.default_rng(opts.seed)
    K_c = np.ascontiguousarray(K)
    best = (np.inf, alpha.copy())
    epochs = 0
    while epochs < opts.max_iters:
        block = min(opts.check_every, opts.max_iters - epochs)
        _sdca.kernel_epochs(K_c, y, lam, a, alpha, f, _orders(rng, n, block), upper)
        epochs += block
        alpha = a * y / (2 * lam)
        f = K @ alpha
        primal = float(np.mean(np.maximum(0.0, 1.0 - y * f))) + lam * float(alpha @ f)
        gap = primal - (float(a.sum()) - lam * float(alpha @ f))
        if gap < best[0]:
            best = (gap, alpha.copy())
        if gap <= opts.tol:
            return alpha, gap, epochs
    raise ConvergenceError(f"hinge dual ascent stopped with gap {best[0]:.3g}", best=best[1])


def _logistic_feature(Phi, y, lam, opts):
    n, s = Phi.shape
    loss = Loss("logistic")
    beta = np.zeros(s)
    obj = objective("feature", beta, Phi, y, loss, lam)
    for it in range(1, opts.max_iters + 1):
        margins = Phi @ beta
        grad = Phi.T @ loss.derivative(y, margins) / n + 2 * lam * beta
        cert = float(grad @ grad) / (4 * lam)
        if cert <= opts.tol:
            return beta, cert, it - 1
        sig = expit(y * margins)
        d = sig * (1.0 - sig)
        if s <= n:
            H = (Phi.T * d) @ Phi / n + 2 * lam * np.eye(s)
            step = -np.linalg.solve(H, grad)
        else:
            # Woodbury with the root of the curvature weights
            root = np.sqrt(d)
            SPhi = Phi * root[:, None]
            inner = 2 * lam * n * np.eye(n) + SPhi @ SPhi.T
            step = -(grad - SPhi.T @ np.linalg.solve(inner, SPhi @ grad)) / (2 * lam)
        beta, obj = _backtrack(lambda b: objective("feature", b, Phi, y, loss, lam), beta, obj, step,
                               float(grad @ step))
    raise ConvergenceError("logistic Newton did not reach tolerance", best=beta)


def _logistic_kernel(K, y, lam, opts):
    n = K.shape[0]
    loss = Loss("logistic")
    alpha = np.zeros(n)
    obj = objective("kernel", alpha, K, y, loss, lam)
    for it in range(1, opts.max_iters + 1):
        f = K @ alpha
        u = loss.derivative(y, f) / n + 2 * lam * alpha
        cert = float(u @ (K @ u)) / (4 * lam)
        if cert <= opts.tol:
            return alpha, cert, it - 1
        sig = expit(y * f)
        d = sig * (1.0 - sig)
        step = -np.linalg.solve(K * (d[:, None] / n) + 2 * lam * np.eye(n), u)
        slope = float((K @ u) @ step)
        alpha, obj = _backtrack(lambda a: objective("kernel", a, K, y, loss, lam), alpha, obj, step, slope)
    raise ConvergenceError("logistic Newton did not reach tolerance", best=alpha)


def _backtrack(fun, x, fx, step, slope, shrink=0.5, c=1e-4):
    t = 1.0
    for _ in range(60):
        cand = x + t * step
        fc = fun(cand)
        if fc <= fx + c * t * slope:
            return cand, fc
        t *= shrink
    return x + t * step, fun(x + t * step)


def _solve(representation, data, y, loss, lam, opts):
    if loss.kind == "hinge":
        solver = _hinge_feature if representation == "feature" else _hinge_kernel
    else:
        solver = _logistic_feature if representation == "feature" else _logistic_kernel
    return solver(data, y, lam, opts)


def _sq_norm(representation, coef, data):
    if representation == "feature":
        return float(coef @ coef)
    return float(coef @ (data @ coef))


def _train(representation, data, y, loss, lam, opts, norm_constraint):
    data, y = _validate(data, y, lam)
    opts = opts or SolverOptions()
    try:
        coef, cert, iters = _solve(representation, data, y, loss, lam, opts)
    except ConvergenceError as err:
        best = err.best
        err.best = TrainedModel(best, lam, loss, representation, objective(representation, best, data, y, loss, lam),
                                norm_constraint)
        raise
    lam_eff = lam
    if norm_constraint is not None and _sq_norm(representation, coef, data) > norm_constraint:
        coef, cert, iters, lam_eff = _constrained(representation, data, y, loss, lam, opts, norm_constraint)
    return TrainedModel(coef, lam, loss, representation, objective(representation, coef, data, y, loss, lam),
                        norm_constraint, cert, iters, {"effective_lambda": lam_eff})


def _constrained(representation, data, y, loss, lam, opts, radius2):
    """Bisection on the penalty: the constrained optimum is the penalised one at the smallest
    ``lam' >= lam`` whose solution lies in the ball."""
    lo, hi = lam, 2 * lam
    while True:
        coef, cert, iters = _solve(representation, data, y, loss, hi, opts)
        if _sq_norm(representation, coef, data) <= radius2:
            break
        lo, hi = hi, 2 * hi
    best = (coef, cert, iters, hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        coef, cert, iters = _solve(representation, data, y, loss, mid, opts)
        if _sq_norm(representation, coef, data) <= radius2:
            hi, best = mid, (coef, cert, iters, mid)
        else:
            lo = mid
        if hi - lo <= 1e-10 * hi:
            break
    coef, cert, iters, lam_eff = best
    norm2 = _sq_norm(representation, coef, data)
    if norm2 > radius2:
        coef = coef * np.sqrt(radius2 / norm2)
    return coef, cert, iters, lam_eff


def train_rff(Phi, y, loss: Loss, lam: float, opts: SolverOptions | None = None,
              norm_constraint: float | None = None) -> TrainedModel:
    return _train("feature", Phi, y, loss, lam, opts, norm_constraint)


def train_kernel(K, y, loss: Loss, lam: float, opts: SolverOptions | None = None,
                 norm_constraint: float | None = None) -> TrainedModel:
    return _train("kernel", K, y, loss, lam, opts, norm_constraint)


def predict(model: TrainedModel, Z) -> np.ndarray:
    """Margins for feature rows ``Z`` (n, s) or kernel rows ``Z[i, j] = k(x_i, x_train_j)``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != model.coefficients.shape[0]:
        raise ValueError("input width does not match the model coefficients")
    return Z @ model.coefficients


def classify(model: TrainedModel, Z) -> np.ndarray:
    return np.where(predict(model, Z) >= 0.0, 1, -1)


def empirical_risk(model: TrainedModel, Z, y, loss: Loss | None = None) -> float:
    loss = loss or model.loss
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("empty data")
    return float(np.mean(loss.value(y, predict(model, Z))))


def zero_one_risk(model: TrainedModel, Z, y) -> float:
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("empty data")
    return float(np.mean(classify(model, Z) != y))


def subgradient_reference(representation, data, y, loss: Loss, lam: float, iters: int = 200000):
    """Slow independent reference: subgradient steps ``1/(2 lam t)`` with suffix averaging.

    Only meant as an optimum oracle for small problems in tests.
    """
    data, y = _validate(data, y, lam)
    n, p = data.shape
    x = np.zeros(p)
    avg = np.zeros(p)
    count = 0
    for t in range(1, iters + 1):
        margins = data @ x
        g_loss = data.T @ loss.derivative(y, margins) / n
        if representation == "feature":
            grad = g_loss + 2 * lam * x
        else:
            grad = g_loss + 2 * lam * margins
        x = x - grad / (2 * lam * t)
        if t > iters // 2:
            count += 1
            avg += (x - avg) / count
    return avg

