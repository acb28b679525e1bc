"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time. Set ``FEDLIME_DISABLE_NUMBA=1``
to force the numpy path (useful for debugging or when numba is missing).
Both backends agree to within floating-point rounding; bitwise agreement is
only guaranteed within a single backend.
"""
from __future__ import annotations

import os

from . import _numpy as numpy_backend

_disabled = os.environ.get("FEDLIME_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

numba_backend = None
if not _disabled:
    try:
        from . import _numba as numba_backend  # noqa: F811
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba_backend = None

backend = numba_backend if numba_backend is not None else numpy_backend
BACKEND_NAME = "numba" if backend is numba_backend else "numpy"

csr_margins = backend.csr_margins
sgd_epoch = backend.sgd_epoch
batch_loss_grad = backend.batch_loss_grad
weighted_normal_equations = backend.weighted_normal_equations
cholesky_solve = backend.cholesky_solve

__all__ = [
    "BACKEND_NAME",
    "backend",
    "batch_loss_grad",
    "cholesky_solve",
    "csr_margins",
    "numba_backend",
    "numpy_backend",
    "sgd_epoch",
    "weighted_normal_equations",
]
