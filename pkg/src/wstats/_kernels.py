"""Hot inner loops with a numba path and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``WSTATS_DISABLE_NUMBA=1``
to force the numpy path (also used automatically when numba is missing).
Both paths compute the same quantities; results agree to rounding but are
not bit-identical because summation order differs.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("WSTATS_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on",
}

try:
    if _DISABLED:
        raise ImportError("disabled by WSTATS_DISABLE_NUMBA")
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"

# columns of the array returned by ``row_statistics``
MEAN, PROJ, MIN, MAX, STD = range(5)


def _row_statistics_np(block, k):
    xs = np.sort(block, axis=1)
    out = np.empty((xs.shape[0], 5))
    out[:, MEAN] = xs.mean(axis=1)
    out[:, PROJ] = xs @ k
    out[:, MIN] = xs[:, 0]
    out[:, MAX] = xs[:, -1]
    out[:, STD] = xs.std(axis=1)
    return out


def _w2_sorted_np(x, y):
    d = x - y
    return float(np.dot(d, d) / x.shape[0])


def _closed_form_cost_np(xs, k, mu, sigma):
    n = xs.shape[0]
    return float(
        mu * mu + sigma * sigma + np.dot(xs, xs) / n
        - 2.0 * np.dot(xs, sigma * k + mu / n)
    )


if HAS_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _row_statistics_nb(sorted_block, k):
        m, n = sorted_block.shape
        out = np.empty((m, 5))
        for r in range(m):
            xs = sorted_block[r]
            s = 0.0
            p = 0.0
            for i in range(n):
                s += xs[i]
                p += k[i] * xs[i]
            mean = s / n
            ss = 0.0
            for i in range(n):
                d = xs[i] - mean
                ss += d * d
            out[r, 0] = mean
            out[r, 1] = p
            out[r, 2] = xs[0]
            out[r, 3] = xs[n - 1]
            out[r, 4] = np.sqrt(ss / n)
        return out

    @numba.njit(cache=True, nogil=True)
    def _w2_sorted_nb(x, y):
        acc = 0.0
        for i in range(x.shape[0]):
            d = x[i] - y[i]
            acc += d * d
        return acc / x.shape[0]

    @numba.njit(cache=True, nogil=True)
    def _closed_form_cost_nb(xs, k, mu, sigma):
        n = xs.shape[0]
        sq = 0.0
        cross = 0.0
        for i in range(n):
            sq += xs[i] * xs[i]
            cross += xs[i] * (sigma * k[i] + mu / n)
        return mu * mu + sigma * sigma + sq / n - 2.0 * cross


def row_statistics(block, k):
    """Sort each row of ``block`` and return per-row summary statistics.

    Columns are ``MEAN``, ``PROJ`` (sorted row dotted with ``k``), ``MIN``,
    ``MAX`` and ``STD`` (biased standard deviation).
    """
    block = np.ascontiguousarray(block, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    if HAS_NUMBA:
        # numpy's vectorised sort beats a per-row sort inside numba
        return _row_statistics_nb(np.sort(block, axis=1), k)
    return _row_statistics_np(block, k)


def w2_sorted(x, y):
    """Mean squared difference of two equally long sorted arrays."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if HAS_NUMBA:
        return float(_w2_sorted_nb(x, y))
    return _w2_sorted_np(x, y)


def closed_form_cost(xs, k, mu, sigma):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    if HAS_NUMBA:
        return float(_closed_form_cost_nb(xs, k, float(mu), float(sigma)))
    return _closed_form_cost_np(xs, k, float(mu), float(sigma))
