"""Hot inner loops, with numba and pure-numpy implementations.

The numba path is used when numba imports and ``DIRATE_DISABLE_NUMBA`` is
unset (or ``0``). Set ``DIRATE_DISABLE_NUMBA=1`` to force the numpy path.
Both paths are always importable under explicit names so they can be
compared against each other.
"""
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("DIRATE_DISABLE_NUMBA", "0") in ("", "0")


def var_recursion_numpy(coeffs, init, noise):
    """Run ``w[k] = sum_i F_i w[k-i] + e[k]`` forward.

    Parameters
    ----------
    coeffs : array, shape (q, n, n)
        ``coeffs[i-1]`` is ``F_i``.
    init : array, shape (q, n)
        ``w[0], ..., w[q-1]`` in time order.
    noise : array, shape (N, n)
        Innovations; rows ``0..q-1`` are ignored.

    Returns
    -------
    out : array, shape (N, n)
    """
    q = coeffs.shape[0]
    N, n = noise.shape
    out = np.empty((N, n))
    m = min(q, N)
    out[:m] = init[:m]
    for k in range(q, N):
        acc = noise[k].copy()
        for i in range(1, q + 1):
            acc += coeffs[i - 1] @ out[k - i]
        out[k] = acc
    return out


def lagged_block_cov_numpy(data, p):
    """Average of stacked-window outer products (overlapping windows).

    Returns the ``n(p+1)`` square matrix ``(1/M) sum_k X_k X_k^T`` with
    ``X_k = [w[k]; w[k+1]; ...; w[k+p]]`` and ``M = N - p``.
    """
    N, n = data.shape
    M = N - p
    X = np.hstack([data[i:i + M] for i in range(p + 1)])
    return (X.T @ X) / M


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def var_recursion_numba(coeffs, init, noise):
        q = coeffs.shape[0]
        N, n = noise.shape
        out = np.empty((N, n))
        m = min(q, N)
        for k in range(m):
            for a in range(n):
                out[k, a] = init[k, a]
        for k in range(q, N):
            for a in range(n):
                acc = noise[k, a]
                for i in range(1, q + 1):
                    for b in range(n):
                        acc += coeffs[i - 1, a, b] * out[k - i, b]
                out[k, a] = acc
        return out

    @njit(cache=True, nogil=True)
    def lagged_block_cov_numba(data, p):
        # Block (a, b) with a = b + lag is sum_{j=b}^{b+M-1} w[j+lag] w[j]^T:
        # one full pass per lag, then O(1) sliding updates along b.
        N, n = data.shape
        M = N - p
        m = n * (p + 1)
        out = np.zeros((m, m))
        S = np.empty((n, n))
        for lag in range(p + 1):
            S[:, :] = 0.0
            for k in range(M):
                for i in range(n):
                    x = data[k + lag, i]
                    for j in range(n):
                        S[i, j] += x * data[k, j]
            for b in range(p + 1 - lag):
                a = b + lag
                for i in range(n):
                    for j in range(n):
                        v = S[i, j] / M
                        out[a * n + i, b * n + j] = v
                        out[b * n + j, a * n + i] = v
                if b < p - lag:
                    hi = b + M
                    for i in range(n):
                        xa = data[hi + lag, i]
                        xr = data[b + lag, i]
                        for j in range(n):
                            S[i, j] += xa * data[hi, j] - xr * data[b, j]
        return out

else:  # pragma: no cover
    var_recursion_numba = None
    lagged_block_cov_numba = None


def var_recursion(coeffs, init, noise):
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    init = np.ascontiguousarray(init, dtype=np.float64)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    if USE_NUMBA:
        return var_recursion_numba(coeffs, init, noise)
    return var_recursion_numpy(coeffs, init, noise)


def lagged_block_cov(data, p):
    data = np.ascontiguousarray(data, dtype=np.float64)
    if USE_NUMBA:
        return lagged_block_cov_numba(data, int(p))
    return lagged_block_cov_numpy(data, int(p))
