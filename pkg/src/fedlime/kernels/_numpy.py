"""Pure-numpy reference implementations of the hot kernels."""
from __future__ import annotations

import numpy as np

# Relative pivot floor below which a Gram matrix is treated as singular.
PIVOT_RTOL = 1e-12


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softplus(z):
    z = np.asarray(z, dtype=np.float64)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def csr_margins(indptr, indices, data, w, b):
    n = indptr.shape[0] - 1
    prod = data * w[indices]
    row_of = np.repeat(np.arange(n), np.diff(indptr))
    z = np.zeros(n, dtype=np.float64)
    np.add.at(z, row_of, prod)
    return z + b


def _batch_residuals(indptr, indices, data, y, rows, w, b):
    starts = indptr[rows]
    ends = indptr[rows + 1]
    lens = ends - starts
    offsets = np.cumsum(lens) - lens
    flat = np.arange(int(lens.sum()), dtype=np.int64) - np.repeat(offsets, lens) + np.repeat(starts, lens)
    row_of = np.repeat(np.arange(len(rows)), lens)
    z = np.zeros(len(rows), dtype=np.float64)
    np.add.at(z, row_of, data[flat] * w[indices[flat]])
    z += b
    return z, flat, row_of


def batch_loss_grad(indptr, indices, data, y, rows, w, b, l2):
    """Mean cross-entropy plus ``l2/2 * ||w||^2`` and its gradient over ``rows``."""
    z, flat, row_of = _batch_residuals(indptr, indices, data, y, rows, w, b)
    yb = y[rows]
    bsz = len(rows)
    loss = float(np.sum(softplus(z) - yb * z)) / bsz
    r = (sigmoid(z) - yb) / bsz
    grad_w = np.zeros_like(w)
    np.add.at(grad_w, indices[flat], r[row_of] * data[flat])
    grad_b = float(np.sum(r))
    if l2 > 0.0:
        loss += 0.5 * l2 * float(np.dot(w, w))
        grad_w += l2 * w
    return loss, grad_w, grad_b


@np.errstate(over="ignore", invalid="ignore")
def sgd_epoch(w, b, indptr, indices, data, y, order, lr, batch_size, l2):
    """One shuffled pass of mini-batch SGD. Updates ``w`` in place.

    Returns ``(bias, batch_losses, bad_batch)`` where ``bad_batch`` is the index
    of the first batch whose loss or parameters went non-finite, else -1.
    """
    n = order.shape[0]
    n_batches = (n + batch_size - 1) // batch_size
    losses = np.zeros(n_batches, dtype=np.float64)
    for k in range(n_batches):
        rows = order[k * batch_size:(k + 1) * batch_size]
        bsz = rows.shape[0]
        z, flat, row_of = _batch_residuals(indptr, indices, data, y, rows, w, b)
        yb = y[rows]
        loss = float(np.sum(softplus(z) - yb * z)) / bsz
        if l2 > 0.0:
            loss += 0.5 * l2 * float(np.dot(w, w))
        losses[k] = loss
        if not np.isfinite(loss):
            return b, losses[:k + 1], k
        r = sigmoid(z) - yb
        if l2 > 0.0:
            w -= lr * (l2 * w)
        step = lr / bsz
        np.add.at(w, indices[flat], -(step * r[row_of]) * data[flat])
        b = b - step * float(np.sum(r))
        if not np.isfinite(b):
            return b, losses[:k + 1], k
    return b, losses, -1


def weighted_normal_equations(masks, y, pi, lam):
    n, t = masks.shape
    z = np.empty((n, t + 1), dtype=np.float64)
    z[:, 0] = 1.0
    z[:, 1:] = masks
    zw = z * pi[:, None]
    a = z.T @ zw
    rhs = zw.T @ y
    a[np.arange(1, t + 1), np.arange(1, t + 1)] += lam
    return a, rhs


def cholesky_solve(a, rhs):
    """Solve ``a x = rhs`` for symmetric positive-definite ``a``.

    Returns ``(x, ok)``; ``ok`` is False when ``a`` is (numerically) singular.
    """
    scale = float(np.max(np.abs(np.diag(a)))) if a.size else 0.0
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return np.zeros_like(rhs), False
    piv = np.diag(chol) ** 2
    if not np.all(np.isfinite(piv)) or np.min(piv) <= PIVOT_RTOL * max(scale, 1e-300):
        return np.zeros_like(rhs), False
    u = np.linalg.solve(chol, rhs)
    return np.linalg.solve(chol.T, u), True
