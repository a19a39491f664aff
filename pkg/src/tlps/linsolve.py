"""Dense Gaussian elimination with partial pivoting.

:func:`solve` factors with LAPACK ``dgetrf`` (the same row-pivoted elimination)
for speed on the 1000-phase systems; :func:`gauss_solve` is a plain numpy
implementation kept as an independent reference.  Both apply the same pivot
and residual acceptance rules.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import IllConditionedError, InvalidModelError, SingularSystemError

PIVOT_RTOL = 1e-13
RESIDUAL_RTOL = 1e-8


def _check_inputs(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidModelError(f"matrix must be square and non-empty, got shape {a.shape}")
    if b.shape != (a.shape[0],):
        raise InvalidModelError(f"right-hand side has shape {b.shape}, expected ({a.shape[0]},)")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidModelError("non-finite entries")
    return a, b


def _accept(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    resid = np.max(np.abs(a @ x - b))
    bound = RESIDUAL_RTOL * (1.0 + np.max(np.abs(b)))
    if not resid <= bound:
        raise IllConditionedError(f"residual {resid:.3e} exceeds {bound:.3e}")
    return x


def solve(a, b) -> np.ndarray:
    a, b = _check_inputs(a, b)
    scale = np.max(np.abs(a))
    # raw getrf: lu_factor would also warn on an exact zero pivot, which is handled below
    lu, piv, _ = scipy.linalg.lapack.dgetrf(a)
    pivots = np.abs(np.diag(lu))
    k = int(np.argmin(pivots))
    if scale == 0 or pivots[k] < PIVOT_RTOL * scale:
        raise SingularSystemError(f"pivot {pivots[k]:.3e} at step {k} below {PIVOT_RTOL} * max|a|")
    x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    return _accept(a, b, x)


def gauss_solve(a, b) -> np.ndarray:
    a, b = _check_inputs(a, b)
    a0, b0 = a.copy(), b.copy()
    n = a.shape[0]
    tol = PIVOT_RTOL * np.max(np.abs(a))
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if not abs(a[p, k]) >= tol or tol == 0:
            raise SingularSystemError(f"pivot {abs(a[p, k]):.3e} at step {k} below tolerance")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        b[k + 1 :] -= factors * b[k]
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return _accept(a0, b0, x)
