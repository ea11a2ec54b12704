"""Parametric model interface used by the general cost, fitter and metric.

A model maps a parameter vector ``theta`` to a 1D distribution.  The
transport machinery only needs the quantile function, the cell first
moments ``k_i(theta)`` of an equi-probability partition and the raw second
moment ``S(theta)``; defaults compute the latter two by quadrature on the
probability axis.
"""
from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate

from .densities import PanelTable, StandardDensity, make_standard
from .errors import DensityError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class ParametricModel:
    """Base class; subclasses implement ``quantile``, ``cdf`` and ``pdf``."""

    names: tuple[str, ...] = ()

    @property
    def dim(self):
        return len(self.names)

    def quantile(self, u, theta):
        raise NotImplementedError

    def cdf(self, x, theta):
        raise NotImplementedError

    def pdf(self, x, theta):
        raise NotImplementedError

    def feasible(self, theta):
        return bool(np.all(np.isfinite(theta)))

    def support(self, theta):
        return -math.inf, math.inf

    def cell_first_moments(self, n, theta):
        """``k_i = int_{(i-1)/n}^{i/n} Q(u) du`` for ``i = 1..n``."""
        theta = np.asarray(theta, dtype=float)
        a = np.arange(n) / n
        b = np.arange(1, n + 1) / n
        half = 0.5 * (b - a)
        u = (0.5 * (a + b))[:, None] + half[:, None] * _GL_NODES
        k = half * (self.quantile(u, theta) @ _GL_WEIGHTS)
        # end cells can carry an integrable endpoint singularity
        q = lambda t: float(self.quantile(np.array([t]), theta)[0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            k[0] = integrate.quad(q, 0.0, 1.0 / n, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
            if n > 1:
                k[-1] = integrate.quad(q, 1.0 - 1.0 / n, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        return k

    def second_moment(self, theta):
        """``S = int x^2 p(x) dx = int_0^1 Q(u)^2 du``."""
        theta = np.asarray(theta, dtype=float)
        q2 = lambda t: float(self.quantile(np.array([t]), theta)[0]) ** 2
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                lo = integrate.quad(q2, 0.0, 0.5, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
                hi = integrate.quad(q2, 0.5, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
            except integrate.IntegrationWarning as exc:
                raise DensityError(f"second moment does not converge: {exc}") from None
        return lo + hi


class LocationScaleFamily(ParametricModel):
    """``theta = (mu, sigma)`` over a standardised density, seen generically.

    ``sigma = 0`` is admitted as the degenerate point-mass limit so that cost
    minimisation can reach the boundary (a constant sample has ``sigma_hat = 0``).
    """

    names = ("mu", "sigma")

    def __init__(self, base: StandardDensity | str):
        self.base = make_standard(base) if isinstance(base, str) else base

    def __repr__(self):
        return f"LocationScaleFamily({self.base.family!r})"

    def feasible(self, theta):
        mu, sigma = theta
        return math.isfinite(mu) and math.isfinite(sigma) and sigma >= 0

    def support(self, theta):
        mu, sigma = theta
        lo, hi = self.base.support
        return mu + sigma * lo, mu + sigma * hi

    def quantile(self, u, theta):
        mu, sigma = theta
        return mu + sigma * self.base.quantile(u)

    def cdf(self, x, theta):
        mu, sigma = theta
        return self.base.cdf((np.asarray(x, dtype=float) - mu) / sigma)

    def pdf(self, x, theta):
        mu, sigma = theta
        return self.base.pdf((np.asarray(x, dtype=float) - mu) / sigma) / sigma

    def cell_first_moments(self, n, theta):
        from .transport import partition

        mu, sigma = theta
        return mu / n + sigma * partition(self.base, n).k

    def second_moment(self, theta):
        mu, sigma = theta
        return mu * mu + sigma * sigma


class PdfModel(ParametricModel):
    """A model given only by ``pdf(x, theta)`` on a parameter-dependent support.

    The cdf, quantile and cell moments are rebuilt by panel quadrature for
    each distinct ``theta`` (small LRU cache).  Densities whose mass differs
    from 1 by more than ``mass_tol`` raise :class:`DensityError`.
    """

    def __init__(self, pdf, names, support=None, feasible=None, mass_tol=1e-6):
        self._pdf = pdf
        self.names = tuple(names)
        self._support = support
        self._feasible = feasible
        self.mass_tol = mass_tol
        self._table = lru_cache(maxsize=32)(self._build)

    def feasible(self, theta):
        if not np.all(np.isfinite(theta)):
            return False
        return True if self._feasible is None else bool(self._feasible(np.asarray(theta)))

    def support(self, theta):
        if self._support is None:
            return -math.inf, math.inf
        return tuple(float(v) for v in self._support(np.asarray(theta)))

    def _build(self, key):
        theta = np.array(key)
        f = lambda x: np.asarray(self._pdf(np.asarray(x, dtype=float), theta), dtype=float)
        table = PanelTable(f, self.support(theta))
        mass = table.total[0]
        if not abs(mass - 1.0) <= self.mass_tol:
            raise DensityError(f"density at theta={key} has mass {mass:.6g}, not 1")
        return table

    def table(self, theta):
        return self._table(tuple(float(t) for t in np.asarray(theta, dtype=float)))

    def pdf(self, x, theta):
        lo, hi = self.support(theta)
        x = np.asarray(x, dtype=float)
        inside = (x >= lo) & (x <= hi)
        vals = np.asarray(self._pdf(np.where(inside, x, lo if math.isfinite(lo) else 0.0), np.asarray(theta)), dtype=float)
        return np.where(inside, vals, 0.0)

    def cdf(self, x, theta):
        return self.table(theta).cdf(x)

    def quantile(self, u, theta):
        return self.table(theta).quantile(u)

    def cell_first_moments(self, n, theta):
        t = self.table(theta)
        lo, hi = self.support(theta)
        z = t.quantile(np.arange(1, n) / n)
        edges = np.concatenate([[lo], z, [hi]])
        return t.moment(1, edges[:-1], edges[1:])

    def second_moment(self, theta):
        return float(self.table(theta).total[2])
