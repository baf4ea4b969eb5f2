"""Compiled inner loops for hinge-loss dual coordinate ascent.

Both routines run whole epochs over the supplied coordinate orders and update
their state arrays in place. Dual variables ``a_i`` live in ``[0, 1/n]``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def feature_epochs(Phi, y, lam, a, beta, sqnorm, orders, upper):
    n, s = Phi.shape
    for e in range(orders.shape[0]):
        for t in range(n):
            i = orders[e, t]
            if sqnorm[i] == 0.0:
                a[i] = upper
                continue
            margin = 0.0
            for j in range(s):
                margin += Phi[i, j] * beta[j]
            margin *= y[i]
            new = a[i] + 2.0 * lam * (1.0 - margin) / sqnorm[i]
            if new < 0.0:
                new = 0.0
            elif new > upper:
                new = upper
            delta = new - a[i]
            if delta != 0.0:
                a[i] = new
                step = delta * y[i] / (2.0 * lam)
                for j in range(s):
                    beta[j] += step * Phi[i, j]


@njit(cache=True)
def kernel_epochs(K, y, lam, a, alpha, f, orders, upper):
    n = K.shape[0]
    for e in range(orders.shape[0]):
        for t in range(n):
            i = orders[e, t]
            kii = K[i, i]
            if kii <= 0.0:
                a[i] = upper
                alpha[i] = y[i] * upper / (2.0 * lam)
                continue
            new = a[i] + 2.0 * lam * (1.0 - y[i] * f[i]) / kii
            if new < 0.0:
                new = 0.0
            elif new > upper:
                new = upper
            delta = new - a[i]
            if delta != 0.0:
                a[i] = new
                step = delta * y[i] / (2.0 * lam)
                alpha[i] += step
                for j in range(n):
                    f[j] += step * K[i, j]


def warmup():
    """Compile both loops on tiny inputs."""
    Phi = np.ones((2, 1))
    y = np.array([1.0, -1.0])
    orders = np.zeros((1, 2), dtype=np.int64)
    feature_epochs(Phi, y, 1.0, np.zeros(2), np.zeros(1), np.ones(2), orders, 0.5)
    kernel_epochs(np.eye(2), y, 1.0, np.zeros(2), np.zeros(2), np.zeros(2), orders, 0.5)
