"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time: numba when importable, unless the
environment variable MRMLAB_DISABLE_NUMBA is set to a non-empty value other
than "0", in which case the numpy implementations are used.  Both
implementations are kept importable so the benchmark and the agreement tests
can compare them directly.

Kernels
-------
energy_pairs(points, weights, alpha)   -> (sum_{i!=j} w_i w_j d_ij^-alpha, min d_ij^2)
lse_scaled(C, vec, inv_eps, axis)      -> log sum exp((vec_j - C_ij) * inv_eps) rows/cols
nearest_index(queries, points)         -> first-index argmin of squared distance
"""

from __future__ import annotations

import os

import numpy as np
from scipy.special import logsumexp as _scipy_logsumexp

# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def energy_pairs_numpy(points: np.ndarray, weights: np.ndarray, alpha: float,
                       chunk: int = 512):
    """Off-diagonal interaction energy sum w_i w_j |x_i-x_j|^-alpha.

    Returns (energy, min off-diagonal squared distance).  Chunked over rows
    to bound the memory of the pairwise-distance block.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    n = pts.shape[0]
    total = 0.0
    min_d2 = np.inf
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = pts[start:stop, None, :] - pts[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        rows = np.arange(start, stop)
        d2[rows - start, rows] = np.inf
        block_min = d2.min()
        if block_min < min_d2:
            min_d2 = block_min
        with np.errstate(divide="ignore", over="ignore"):
            contrib = (w[start:stop, None] * w[None, :]) * d2 ** (-0.5 * alpha)
        contrib[rows - start, rows] = 0.0
        total += contrib.sum()
    return total, min_d2


def lse_scaled_numpy(C: np.ndarray, vec: np.ndarray, inv_eps: float,
                     axis: int) -> np.ndarray:
    """out_i = logsumexp_j((vec_j - C_ij) * inv_eps) for axis=1, transposed
    for axis=0."""
    if axis == 1:
        return _scipy_logsumexp((vec[None, :] - C) * inv_eps, axis=1)
    return _scipy_logsumexp((vec[:, None] - C) * inv_eps, axis=0)


def nearest_index_numpy(queries: np.ndarray, points: np.ndarray,
                        chunk: int = 1024) -> np.ndarray:
    """Index of the nearest point (squared Euclidean) for each query; ties
    resolve to the lowest index."""
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.empty(q.shape[0], dtype=np.int64)
    for start in range(0, q.shape[0], chunk):
        stop = min(start + chunk, q.shape[0])
        diff = q[start:stop, None, :] - p[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        out[start:stop] = np.argmin(d2, axis=1)
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

_disable = os.environ.get("MRMLAB_DISABLE_NUMBA", "")
_want_numba = _disable in ("", "0")

if _want_numba:
    try:
        import numba
    except ImportError:  # pragma: no cover - environment without numba
        numba = None
        _want_numba = False
else:
    numba = None

if _want_numba:

    @numba.njit(parallel=True, cache=True)
    def _energy_pairs_numba(points, weights, alpha):
        n = points.shape[0]
        dim = points.shape[1]
        total = 0.0
        min_d2 = np.inf
        for i in numba.prange(n):
            row = 0.0
            row_min = np.inf
            for j in range(n):
                if i == j:
                    continue
                d2 = 0.0
                for k in range(dim):
                    diff = points[i, k] - points[j, k]
                    d2 += diff * diff
                row_min = min(row_min, d2)
                row += weights[i] * weights[j] * d2 ** (-0.5 * alpha)
            total += row
            min_d2 = min(min_d2, row_min)
        return total, min_d2

    @numba.njit(parallel=True, cache=True)
    def _lse_rows_numba(C, vec, inv_eps):
        n = C.shape[0]
        out = np.empty(n)
        for i in numba.prange(n):
            hi = -np.inf
            for j in range(C.shape[1]):
                v = (vec[j] - C[i, j]) * inv_eps
                if v > hi:
                    hi = v
            if hi == -np.inf:
                out[i] = -np.inf
                continue
            acc = 0.0
            for j in range(C.shape[1]):
                acc += np.exp((vec[j] - C[i, j]) * inv_eps - hi)
            out[i] = hi + np.log(acc)
        return out

    @numba.njit(parallel=True, cache=True)
    def _lse_cols_numba(C, vec, inv_eps):
        ncol = C.shape[1]
        out = np.empty(ncol)
        for j in numba.prange(ncol):
            hi = -np.inf
            for i in range(C.shape[0]):
                v = (vec[i] - C[i, j]) * inv_eps
                if v > hi:
                    hi = v
            if hi == -np.inf:
                out[j] = -np.inf
                continue
            acc = 0.0
            for i in range(C.shape[0]):
                acc += np.exp((vec[i] - C[i, j]) * inv_eps - hi)
            out[j] = hi + np.log(acc)
        return out

    @numba.njit(parallel=True, cache=True)
    def _nearest_index_numba(queries, points):
        nq = queries.shape[0]
        npts = points.shape[0]
        dim = queries.shape[1]
        out = np.empty(nq, dtype=np.int64)
        for i in numba.prange(nq):
            best = np.inf
            best_j = 0
            for j in range(npts):
                d2 = 0.0
                for k in range(dim):
                    diff = queries[i, k] - points[j, k]
                    d2 += diff * diff
                if d2 < best:
                    best = d2
                    best_j = j
            out[i] = best_j
        return out

    def energy_pairs_numba(points, weights, alpha):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        w = np.ascontiguousarray(weights, dtype=np.float64)
        return _energy_pairs_numba(pts, w, float(alpha))

    def lse_scaled_numba(C, vec, inv_eps, axis):
        Cc = np.ascontiguousarray(C, dtype=np.float64)
        v = np.ascontiguousarray(vec, dtype=np.float64)
        if axis == 1:
            return _lse_rows_numba(Cc, v, float(inv_eps))
        return _lse_cols_numba(Cc, v, float(inv_eps))

    def nearest_index_numba(queries, points):
        q = np.ascontiguousarray(np.atleast_2d(queries), dtype=np.float64)
        p = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        return _nearest_index_numba(q, p)

    BACKEND = "numba"
    energy_pairs = energy_pairs_numba
    lse_scaled = lse_scaled_numba
    nearest_index = nearest_index_numba
else:
    BACKEND = "numpy"
    energy_pairs = energy_pairs_numpy
    lse_scaled = lse_scaled_numpy
    nearest_index = nearest_index_numpy


def backend_name() -> str:
    return BACKEND


def set_threads(n: int) -> None:
    """Cap the numba worker count (no-op on the numpy backend)."""
    if BACKEND == "numba" and n > 0:
        numba.set_num_threads(n)
