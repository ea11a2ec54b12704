"""One-dimensional optimal transport under squared-distance cost.

In 1D the optimal plan is the monotone coupling, so every cost here is a
squared L2 distance between quantile functions.  The empirical-to-model
cost reduces to a quadratic in the sorted sample whose weights are the
cell first moments ``k_i`` of the model's equi-probability partition.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import _kernels
from .densities import LocationScaleModel, StandardDensity
from .errors import DensityError, EmptySampleError, SampleSizeMismatchError


@dataclass(frozen=True)
class OrderedSample:
    """Observations sorted ascending; the support of the empirical measure."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size == 0:
            raise EmptySampleError("sample is empty")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample contains non-finite values")
        v.sort()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.size

    def __len__(self):
        return self.values.size

    def empirical_quantile(self, u):
        """Step quantile: ``values[ceil(n u) - 1]`` for ``u`` in (0, 1]."""
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.ceil(self.n * u).astype(int) - 1, 0, self.n - 1)
        return self.values[idx]


def as_sample(data) -> OrderedSample:
    return data if isinstance(data, OrderedSample) else OrderedSample(data)


def load_sample_csv(path, column=None) -> OrderedSample:
    """Read a sample from CSV.

    ``column`` may be a header name or a 0-based index; by default the first
    column holding a numeric value is used.  Rows whose selected cell is
    blank are skipped; any other non-numeric cell is an error.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptySampleError(f"{path}: no rows")

    def is_num(c):
        try:
            float(c)
            return True
        except ValueError:
            return False

    header = None
    if not any(is_num(c) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if column is None:
        col = next(
            (j for r in rows for j, c in enumerate(r) if is_num(c)),
            None,
        )
        if col is None:
            raise EmptySampleError(f"{path}: no numeric column")
    elif isinstance(column, int) or str(column).lstrip("-").isdigit():
        col = int(column)
    else:
        if header is None or column not in header:
            raise KeyError(f"{path}: no column named {column!r}")
        col = header.index(column)

    values = []
    for lineno, r in enumerate(rows, start=2 if header else 1):
        cell = r[col].strip() if col < len(r) else ""
        if not cell:
            continue
        try:
            values.append(float(cell))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric value {cell!r}") from None
    if not values:
        raise EmptySampleError(f"{path}: no numeric values in column {col}")
    return OrderedSample(np.array(values))


@dataclass(frozen=True)
class Partition:
    """Equi-probability partition of a standardised density into ``n`` cells.

    ``z`` holds the ``n - 1`` interior points, ``k`` the cell first moments.
    """

    z: np.ndarray
    k: np.ndarray
    n: int
    density: StandardDensity

    @property
    def edges(self):
        lo, hi = self.density.support
        return np.concatenate([[lo], self.z, [hi]])


def _freeze(a):
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


@lru_cache(maxsize=64)
def _partition_cached(d, n, method):
    z = d.quantile(np.arange(1, n) / n) if n > 1 else np.empty(0)
    z = np.asarray(z, dtype=float)
    lo, hi = d.support
    edges = np.concatenate([[lo], z, [hi]])
    if method == "analytic":
        k = np.asarray(d.partial_first_moment(edges[:-1], edges[1:]), dtype=float)
    else:
        k = _cell_moments_quad(d, edges)
    return Partition(z=_freeze(z), k=_freeze(k), n=n, density=d)


def _cell_moments_quad(d, edges):
    lo, hi = d.truncated_support()
    e = edges.copy()
    e[0] = max(e[0], lo)
    e[-1] = min(e[-1], hi)
    zf = lambda t: t * float(d.pdf(t))
    out = np.empty(len(e) - 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for i in range(len(out)):
            out[i] = integrate.quad(zf, e[i], e[i + 1], epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    return out


def partition(d: StandardDensity, n: int, method: str = "auto") -> Partition:
    """Equi-probability points ``z_i = F^{-1}(i/n)`` and cell moments ``k_i``.

    ``method='auto'`` uses the density's own partial first moment (exact
    limits, including infinite ones); ``'quad'`` integrates ``z f(z)`` per
    cell with the unbounded ends truncated at the 1e-12 quantiles.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if method not in ("auto", "quad"):
        raise ValueError(f"unknown method {method!r}")
    m = "analytic" if method == "auto" and d.partial_first_moment is not None else "quad"
    return _partition_cached(d, n, m)


def cost_empirical_to_model(s, m: LocationScaleModel) -> float:
    """Closed-form transport cost from the empirical measure of ``s`` to ``m``.

    ``mu^2 + sigma^2 + mean(x^2) - 2 sum x_i (sigma k_i + mu/n)``.
    """
    s = as_sample(s)
    k = partition(m.base, s.n).k
    return _kernels.closed_form_cost(s.values, k, m.mu, m.sigma)


def cost_interval_sum(s, m: LocationScaleModel) -> float:
    """Same cost as :func:`cost_empirical_to_model`, evaluated directly.

    Sums ``int (x_i - x)^2 p(x) dx`` over the model's equi-probability cells
    by adaptive quadrature in the data coordinates.  Independent of ``k_i``;
    used to cross-check the closed form.
    """
    s = as_sample(s)
    n = s.n
    u = np.arange(1, n) / n
    inner = m.quantile(u) if n > 1 else np.empty(0)
    lo, hi = m.support
    edges = np.concatenate([[lo], inner, [hi]])
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for i, xi in enumerate(s.values):
            g = lambda x, xi=xi: (xi - x) ** 2 * float(m.pdf(x))
            a, b = edges[i], edges[i + 1]
            # split at the centre, where builtin densities may have a kink
            pieces = [(a, m.mu), (m.mu, b)] if a < m.mu < b else [(a, b)]
            for lo_, hi_ in pieces:
                total += integrate.quad(g, lo_, hi_, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return total


def cost_general(s, model, theta) -> float:
    """Transport cost from the empirical measure to ``model`` at ``theta``.

    ``mean(x^2) - 2 sum k_i(theta) x_i + S(theta)`` where ``S`` is the
    model's raw second moment.  Returns ``inf`` for infeasible ``theta``.
    """
    s = as_sample(s)
    theta = np.asarray(theta, dtype=float)
    if not model.feasible(theta):
        return math.inf
    k = np.asarray(model.cell_first_moments(s.n, theta), dtype=float)
    S = float(model.second_moment(theta))
    if not math.isfinite(S):
        raise DensityError(f"model has no finite second moment at theta={theta}")
    x = s.values
    return float(np.dot(x, x) / s.n - 2.0 * np.dot(k, x) + S)


def _quantile_fn(m):
    if hasattr(m, "quantile") and not hasattr(m, "names"):
        return m.quantile
    model, theta = m
    return lambda u: model.quantile(u, theta)


def w2_squared_models(m1, m2, rtol: float = 1e-9) -> float:
    """``int_0^1 (Q1(u) - Q2(u))^2 du`` by adaptive quadrature on the probability axis.

    Arguments are :class:`LocationScaleModel` instances or ``(model, theta)``
    pairs for a :class:`~wstats.models.ParametricModel`.
    """
    q1, q2 = _quantile_fn(m1), _quantile_fn(m2)

    def g(u):
        d = float(q1(u)) - float(q2(u))
        return d * d

    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in ((0.0, 0.5), (0.5, 1.0)):
            total += integrate.quad(g, a, b, epsabs=1e-15, epsrel=rtol, limit=400)[0]
    return total


def w2_squared_samples(s1, s2) -> float:
    """Mean squared gap between the sorted samples (the monotone coupling)."""
    a = as_sample(s1).values
    b = as_sample(s2).values
    if a.size != b.size:
        raise SampleSizeMismatchError(f"sample sizes differ: {a.size} vs {b.size}")
    return _kernels.w2_sorted(a, b)
