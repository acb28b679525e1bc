"""numba-compiled kernels. Signatures mirror :mod:`fedlime.kernels._numpy`."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._numpy import PIVOT_RTOL


@njit(cache=True, nogil=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@njit(cache=True, nogil=True)
def _softplus(z):
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


@njit(cache=True, nogil=True)
def csr_margins(indptr, indices, data, w, b):
    n = indptr.shape[0] - 1
    z = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * w[indices[p]]
        z[i] = acc + b
    return z


@njit(cache=True, nogil=True)
def batch_loss_grad(indptr, indices, data, y, rows, w, b, l2):
    bsz = rows.shape[0]
    grad_w = np.zeros_like(w)
    grad_b = 0.0
    loss = 0.0
    for k in range(bsz):
        i = rows[k]
        z = b
        for p in range(indptr[i], indptr[i + 1]):
            z += data[p] * w[indices[p]]
        loss += _softplus(z) - y[i] * z
        r = (_sigmoid(z) - y[i]) / bsz
        grad_b += r
        for p in range(indptr[i], indptr[i + 1]):
            grad_w[indices[p]] += r * data[p]
    loss /= bsz
    if l2 > 0.0:
        sq = 0.0
        for j in range(w.shape[0]):
            sq += w[j] * w[j]
            grad_w[j] += l2 * w[j]
        loss += 0.5 * l2 * sq
    return loss, grad_w, grad_b


@njit(cache=True, nogil=True)
def sgd_epoch(w, b, indptr, indices, data, y, order, lr, batch_size, l2):
    n = order.shape[0]
    n_batches = (n + batch_size - 1) // batch_size
    losses = np.zeros(n_batches, dtype=np.float64)
    resid = np.empty(batch_size, dtype=np.float64)
    for k in range(n_batches):
        lo = k * batch_size
        hi = min(lo + batch_size, n)
        bsz = hi - lo
        loss = 0.0
        for q in range(bsz):
            i = order[lo + q]
            z = b
            for p in range(indptr[i], indptr[i + 1]):
                z += data[p] * w[indices[p]]
            loss += _softplus(z) - y[i] * z
            resid[q] = _sigmoid(z) - y[i]
        loss /= bsz
        if l2 > 0.0:
            sq = 0.0
            for j in range(w.shape[0]):
                sq += w[j] * w[j]
            loss += 0.5 * l2 * sq
        losses[k] = loss
        if not math.isfinite(loss):
            return b, losses[:k + 1], k
        if l2 > 0.0:
            for j in range(w.shape[0]):
                w[j] -= lr * (l2 * w[j])
        step = lr / bsz
        rsum = 0.0
        for q in range(bsz):
            i = order[lo + q]
            g = step * resid[q]
            rsum += resid[q]
            for p in range(indptr[i], indptr[i + 1]):
                w[indices[p]] += -g * data[p]
        b = b - step * rsum
        if not math.isfinite(b):
            return b, losses[:k + 1], k
    return b, losses, -1


@njit(cache=True, nogil=True)
def weighted_normal_equations(masks, y, pi, lam):
    n, t = masks.shape
    a = np.zeros((t + 1, t + 1), dtype=np.float64)
    rhs = np.zeros(t + 1, dtype=np.float64)
    for i in range(n):
        wi = pi[i]
        a[0, 0] += wi
        rhs[0] += wi * y[i]
        for j in range(t):
            mj = masks[i, j] * wi
            a[0, j + 1] += mj
            rhs[j + 1] += mj * y[i]
            for l in range(j, t):
                a[j + 1, l + 1] += mj * masks[i, l]
    for j in range(t + 1):
        for l in range(j):
            a[j, l] = a[l, j]
    for j in range(1, t + 1):
        a[j, j] += lam
    return a, rhs


@njit(cache=True, nogil=True)
def cholesky_solve(a, rhs):
    m = a.shape[0]
    scale = 0.0
    for j in range(m):
        scale = max(scale, abs(a[j, j]))
    floor = PIVOT_RTOL * max(scale, 1e-300)
    chol = np.zeros_like(a)
    for j in range(m):
        s = a[j, j]
        for k in range(j):
            s -= chol[j, k] * chol[j, k]
        if not (s > floor) or not math.isfinite(s):
            return np.zeros_like(rhs), False
        chol[j, j] = math.sqrt(s)
        for i in range(j + 1, m):
            s = a[i, j]
            for k in range(j):
                s -= chol[i, k] * chol[j, k]
            chol[i, j] = s / chol[j, j]
    u = np.empty_like(rhs)
    for i in range(m):
        s = rhs[i]
        for k in range(i):
            s -= chol[i, k] * u[k]
        u[i] = s / chol[i, i]
    x = np.empty_like(rhs)
    for i in range(m - 1, -1, -1):
        s = u[i]
        for k in range(i + 1, m):
            s -= chol[k, i] * x[k]
        x[i] = s / chol[i, i]
    return x, True
