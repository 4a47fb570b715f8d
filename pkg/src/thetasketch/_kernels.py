"""Hot loops for the Monte Carlo harness.

Per-chunk work runs over (trials x n) matrices.  The fused kernels avoid the
large temporaries a numpy expression chain would allocate, and the
level-counter scan is inherently sequential.  Pure numpy fallbacks perform
the identical float operations, so results are bit-equal either way.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return deco


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_SCALE = 2.0**-64


@njit(cache=True, nogil=True)
def _hashed_values_batch_jit(folds, keys, out):
    for r in range(keys.shape[0]):
        key = keys[r]
        for j in range(folds.shape[0]):
            z = folds[j] ^ key
            z = (z ^ (z >> _S30)) * _M1
            z = (z ^ (z >> _S27)) * _M2
            z = z ^ (z >> _S31)
            out[r, j] = (z + 0.5) * _SCALE


@njit(cache=True, nogil=True)
def _order_raws_batch_jit(folds, keys, out):
    for r in range(keys.shape[0]):
        key = keys[r]
        for j in range(folds.shape[0]):
            z = folds[j] ^ key
            z = (z ^ (z >> _S30)) * _M1
            z = (z ^ (z >> _S27)) * _M2
            out[r, j] = z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def _alpha_scan_batch_jit(values, k, alpha, out_theta):
    rows, n = values.shape
    for r in range(rows):
        theta = 1.0
        for t in range(k, n):
            if values[r, t] < theta:
                theta *= alpha
        out_theta[r] = theta


@njit(cache=True, nogil=True)
def _alpha_scan_perm_batch_jit(values, order, k, alpha, out_theta):
    rows, n = order.shape
    for r in range(rows):
        theta = 1.0
        for t in range(k, n):
            if values[r, order[r, t]] < theta:
                theta *= alpha
        out_theta[r] = theta


@njit(cache=True, nogil=True)
def _count_below_batch_jit(values, thetas, out):
    rows, n = values.shape
    for r in range(rows):
        theta = thetas[r]
        c = 0
        for j in range(n):
            if values[r, j] < theta:
                c += 1
        out[r] = c


@njit(cache=True, nogil=True)
def _count_below_masked_batch_jit(values, thetas, mask, out):
    rows, n = values.shape
    for r in range(rows):
        theta = thetas[r]
        c = 0
        for j in range(n):
            if mask[j] and values[r, j] < theta:
                c += 1
        out[r] = c


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> _S30
    z *= _M1
    z ^= z >> _S27
    z *= _M2
    z ^= z >> _S31
    return z


def hashed_values_batch(folds: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """(trials x n) unit-interval values: mix64(folds[j] ^ keys[r]) mapped to (0,1)."""
    out = np.empty((keys.shape[0], folds.shape[0]), dtype=np.float64)
    if HAVE_NUMBA:
        _hashed_values_batch_jit(folds, keys, out)
    else:
        raws = _mix64_np(folds[None, :] ^ keys[:, None])
        out[:] = (raws.astype(np.float64) + 0.5) * _SCALE
    return out


def order_raws_batch(folds: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """(trials x n) raw hashes used only to derive per-trial stream orders."""
    if HAVE_NUMBA:
        out = np.empty((keys.shape[0], folds.shape[0]), dtype=np.uint64)
        _order_raws_batch_jit(folds, keys, out)
        return out
    return _mix64_np(folds[None, :] ^ keys[:, None])


def alpha_scan_batch(values: np.ndarray, k: int, alpha: float) -> np.ndarray:
    """Row-wise final threshold of the level-counter rule on distinct values."""
    out = np.empty(values.shape[0], dtype=np.float64)
    if HAVE_NUMBA:
        _alpha_scan_batch_jit(values, k, alpha, out)
        return out
    for r in range(values.shape[0]):
        theta = 1.0
        for t in range(k, values.shape[1]):
            if values[r, t] < theta:
                theta *= alpha
        out[r] = theta
    return out


def alpha_scan_perm_batch(
    values: np.ndarray, order: np.ndarray, k: int, alpha: float
) -> np.ndarray:
    """alpha_scan_batch reading row r in the order given by order[r]."""
    out = np.empty(values.shape[0], dtype=np.float64)
    if HAVE_NUMBA:
        _alpha_scan_perm_batch_jit(values, order, k, alpha, out)
        return out
    for r in range(values.shape[0]):
        theta = 1.0
        for t in range(k, order.shape[1]):
            if values[r, order[r, t]] < theta:
                theta *= alpha
        out[r] = theta
    return out


def count_below_batch(values: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Per-row count of values strictly below the row threshold."""
    if HAVE_NUMBA:
        out = np.empty(values.shape[0], dtype=np.int64)
        _count_below_batch_jit(values, thetas, out)
        return out
    return (values < thetas[:, None]).sum(axis=1)


def count_below_masked_batch(
    values: np.ndarray, thetas: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    """count_below_batch restricted to mask-selected columns."""
    if HAVE_NUMBA:
        out = np.empty(values.shape[0], dtype=np.int64)
        _count_below_masked_batch_jit(values, thetas, mask, out)
        return out
    return ((values < thetas[:, None]) & mask[None, :]).sum(axis=1)
