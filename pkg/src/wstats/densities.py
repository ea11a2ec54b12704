"""Standardised (mean 0, variance 1) densities and location-scale models.

Three builtin families have closed-form cdf, quantile and partial moments.
Arbitrary densities go through :func:`make_custom`, which standardises the
input numerically and tabulates cumulative integrals on adaptively refined
panels so that cdf, quantile and partial moments stay vectorised.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import DensityError, QuantileError, UnknownFamilyError

SQRT3 = math.sqrt(3.0)
LAPLACE_B = 1.0 / math.sqrt(2.0)

# probability mass ignored in the tails of unbounded supports
TAIL_MASS = 1e-12
QUANTILE_TOL = 1e-12

BUILTIN_FAMILIES = ("gaussian", "uniform", "laplace")

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StandardDensity:
    """A density ``f`` with zero mean and unit variance.

    All callables accept scalars or arrays and broadcast.  ``partial_first_moment(a, b)``
    is the integral of ``z f(z)`` over ``[a, b]``; infinite limits are allowed.
    """

    family: str
    pdf: ArrayFn
    cdf: ArrayFn
    quantile: ArrayFn
    partial_first_moment: Callable
    partial_second_moment: Callable
    fourth_moment: float
    support: tuple[float, float]
    analytic: bool = True
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __repr__(self):
        return f"StandardDensity(family={self.family!r}, support={self.support})"

    @property
    def bounded(self):
        return math.isfinite(self.support[0]) and math.isfinite(self.support[1])

    def truncated_support(self, mass=TAIL_MASS):
        """Support clipped at the ``mass`` and ``1 - mass`` quantiles when unbounded."""
        lo, hi = self.support
        if not math.isfinite(lo):
            lo = float(self.quantile(mass))
        if not math.isfinite(hi):
            hi = float(self.quantile(1.0 - mass))
        return lo, hi


# ---------------------------------------------------------------------------
# builtin families


def _gaussian():
    inv_sqrt_2pi = 1.0 / math.sqrt(2.0 * math.pi)

    def pdf(z):
        z = np.asarray(z, dtype=float)
        return inv_sqrt_2pi * np.exp(-0.5 * z * z)

    def cdf(z):
        return special.ndtr(np.asarray(z, dtype=float))

    def quantile(u):
        return special.ndtri(np.asarray(u, dtype=float))

    def g1(z):
        # antiderivative of z*phi(z)
        return -pdf(z)

    def g2(z):
        # antiderivative of z^2*phi(z); z*phi(z) -> 0 at both infinities
        z = np.asarray(z, dtype=float)
        zphi = np.where(np.isfinite(z), z * pdf(np.where(np.isfinite(z), z, 0.0)), 0.0)
        return cdf(z) - zphi

    return StandardDensity(
        family="gaussian",
        pdf=pdf,
        cdf=cdf,
        quantile=quantile,
        partial_first_moment=lambda a, b: g1(b) - g1(a),
        partial_second_moment=lambda a, b: g2(b) - g2(a),
        fourth_moment=3.0,
        support=(-math.inf, math.inf),
    )


def _uniform():
    c = SQRT3
    h = 1.0 / (2.0 * SQRT3)

    def pdf(z):
        z = np.asarray(z, dtype=float)
        return np.where(np.abs(z) <= c, h, 0.0)

    def cdf(z):
        return np.clip((np.asarray(z, dtype=float) + c) * h, 0.0, 1.0)

    def quantile(u):
        return c * (2.0 * np.asarray(u, dtype=float) - 1.0)

    def clip(z):
        return np.clip(np.asarray(z, dtype=float), -c, c)

    return StandardDensity(
        family="uniform",
        pdf=pdf,
        cdf=cdf,
        quantile=quantile,
        partial_first_moment=lambda a, b: h * (clip(b) ** 2 - clip(a) ** 2) / 2.0,
        partial_second_moment=lambda a, b: h * (clip(b) ** 3 - clip(a) ** 3) / 3.0,
        fourth_moment=9.0 / 5.0,
        support=(-c, c),
    )


def _laplace():
    b = LAPLACE_B

    def pdf(z):
        z = np.asarray(z, dtype=float)
        return np.exp(-np.abs(z) / b) / (2.0 * b)

    def cdf(z):
        z = np.asarray(z, dtype=float)
        e = 0.5 * np.exp(-np.abs(z) / b)
        return np.where(z < 0, e, 1.0 - e)

    def quantile(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lower = b * np.log(2.0 * u)
            upper = -b * np.log(2.0 * (1.0 - u))
        return np.where(u < 0.5, lower, upper)

    def _tail(z, poly):
        # poly(|z|) * exp(-|z|/b) with the convention 0 * exp(-inf) = 0
        a = np.abs(z)
        with np.errstate(invalid="ignore", over="ignore"):
            val = poly(a) * np.exp(-a / b)
        return np.where(np.isfinite(a), val, 0.0)

    def g1(z):
        z = np.asarray(z, dtype=float)
        t = _tail(z, lambda a: 0.5 * (a + b))
        return -t

    def g2(z):
        z = np.asarray(z, dtype=float)
        t = _tail(z, lambda a: 0.5 * (a * a + 2 * b * a + 2 * b * b))
        return np.where(z < 0, t, 2 * b * b - t)

    return StandardDensity(
        family="laplace",
        pdf=pdf,
        cdf=cdf,
        quantile=quantile,
        partial_first_moment=lambda a, b_: g1(b_) - g1(a),
        partial_second_moment=lambda a, b_: g2(b_) - g2(a),
        fourth_moment=24.0 * b**4,
        support=(-math.inf, math.inf),
    )


_BUILDERS = {"gaussian": _gaussian, "uniform": _uniform, "laplace": _laplace}
_CACHE: dict[str, StandardDensity] = {}


def make_standard(family: str) -> StandardDensity:
    """Return the builtin standardised density called ``family``."""
    try:
        builder = _BUILDERS[family]
    except (KeyError, TypeError):
        raise UnknownFamilyError(
            f"unknown family {family!r}; expected one of {', '.join(BUILTIN_FAMILIES)}"
        ) from None
    if family not in _CACHE:
        _CACHE[family] = builder()
    return _CACHE[family]


# ---------------------------------------------------------------------------
# custom densities

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _vectorize(pdf):
    probe = np.array([0.1, 0.2, 0.3])
    try:
        out = np.asarray(pdf(probe), dtype=float)
        if out.shape == probe.shape:
            return lambda z: np.asarray(pdf(np.asarray(z, dtype=float)), dtype=float)
    except Exception:
        pass
    vec = np.vectorize(lambda t: float(pdf(t)), otypes=[float])
    return lambda z: vec(np.asarray(z, dtype=float))


_QUAD_MAX_POINTS = 100


def _quad(fn, a, b, points=None, what="integral"):
    if points is not None and (not math.isfinite(a) or not math.isfinite(b)):
        points = None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if points is not None and len(points) > _QUAD_MAX_POINTS:
                # quad caps the breakpoint count; integrate piece by piece instead
                edges = [a, *points, b]
                parts = [integrate.quad(fn, lo, hi, epsabs=1e-14 / len(edges), epsrel=1e-13, limit=100)
                         for lo, hi in zip(edges[:-1], edges[1:])]
                val, err = math.fsum(v for v, _ in parts), math.fsum(e for _, e in parts)
            else:
                val, err = integrate.quad(
                    fn, a, b, epsabs=1e-14, epsrel=1e-13, limit=500, points=points
                )
        except integrate.IntegrationWarning as exc:
            raise DensityError(f"{what} did not converge: {exc}") from None
    if not math.isfinite(val):
        raise DensityError(f"{what} is not finite")
    return val, err


def _gl(fn, a, b):
    """Vectorised 20-point Gauss-Legendre over elementwise intervals [a, b]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    z = mid[..., None] + half[..., None] * _GL_NODES
    return half * (fn(z) @ _GL_WEIGHTS)


class PanelTable:
    """Cumulative integrals of ``f``, ``z f`` and ``z^2 f`` at panel knots.

    Panels are refined until 20-point Gauss-Legendre agrees with adaptive
    quadrature, after which any partial integral is a table lookup plus one
    Gauss-Legendre evaluation on a sub-panel.
    """

    def __init__(self, f, support, breakpoints=(), tail_mass=1e-15):
        self.f = f
        lo, hi = support
        self.support = support
        L = lo if math.isfinite(lo) else self._tail_edge(-1.0, tail_mass)
        R = hi if math.isfinite(hi) else self._tail_edge(+1.0, tail_mass)
        knots = np.linspace(L, R, 129)
        extra = [p for p in breakpoints if L < p < R]
        knots = np.unique(np.concatenate([knots, extra]))
        knots = self._refine(knots)
        self.knots = knots
        self.L, self.R = float(knots[0]), float(knots[-1])

        moments = [lambda z: f(z), lambda z: z * f(z), lambda z: z * z * f(z)]
        self.left_tail = np.array(
            [_quad(m, lo, self.L)[0] if not math.isfinite(lo) else 0.0 for m in moments]
        )
        self.right_tail = np.array(
            [_quad(m, self.R, hi)[0] if not math.isfinite(hi) else 0.0 for m in moments]
        )
        a, b = knots[:-1], knots[1:]
        cums = []
        for j, m in enumerate(moments):
            pieces = _gl(m, a, b)
            cums.append(self.left_tail[j] + np.concatenate([[0.0], np.cumsum(pieces)]))
        self.cum = np.array(cums)
        self.total = self.cum[:, -1] + self.right_tail

    def _tail_edge(self, direction, mass):
        edge = direction
        for _ in range(200):
            if direction < 0:
                tail = _quad(self.f, -math.inf, edge)[0]
            else:
                tail = _quad(self.f, edge, math.inf)[0]
            if tail < mass:
                return edge
            edge *= 2.0
        raise DensityError("tail mass does not vanish; density is not integrable")

    def _refine(self, knots, max_rounds=20):
        f = self.f
        for _ in range(max_rounds):
            a, b = knots[:-1], knots[1:]
            gl = _gl(lambda z: (1.0 + z * z) * f(z), a, b)
            ref = np.array(
                [_quad(lambda z: (1.0 + z * z) * f(z), x0, x1)[0] for x0, x1 in zip(a, b)]
            )
            bad = np.abs(gl - ref) > 1e-16 + 1e-13 * np.abs(ref)
            if not bad.any():
                return knots
            mids = 0.5 * (a[bad] + b[bad])
            knots = np.sort(np.concatenate([knots, mids]))
        return knots

    def _cumulative(self, z, j):
        z = np.asarray(z, dtype=float)
        out = np.empty(z.shape)
        inside = (z >= self.L) & (z <= self.R)
        if inside.any():
            zi = z[inside]
            idx = np.clip(np.searchsorted(self.knots, zi, side="right") - 1, 0, len(self.knots) - 2)
            m = (lambda t: self.f(t)) if j == 0 else (lambda t: t**j * self.f(t))
            out[inside] = self.cum[j, idx] + _gl(m, self.knots[idx], zi)
        below = z < self.L
        above = z > self.R
        m = (lambda t: self.f(t)) if j == 0 else (lambda t: t**j * self.f(t))
        for pos in np.flatnonzero(below):
            out.flat[pos] = 0.0 if z.flat[pos] <= self.support[0] else _quad(m, self.support[0], z.flat[pos])[0]
        for pos in np.flatnonzero(above):
            zz = z.flat[pos]
            out.flat[pos] = self.total[j] - (
                0.0 if zz >= self.support[1] else _quad(m, zz, self.support[1])[0]
            )
        return out

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.clip(self._cumulative(z.ravel(), 0).reshape(z.shape), 0.0, 1.0)

    def moment(self, j, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        ca = self._cumulative(a.ravel(), j).reshape(a.shape)
        cb = self._cumulative(b.ravel(), j).reshape(b.shape)
        return cb - ca

    def quantile(self, u):
        """Safeguarded Newton iteration inside the panel bracketing each ``u``."""
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        out = np.full(flat.shape, np.nan)
        cum0 = self.cum[0]
        inside = (flat >= cum0[0]) & (flat <= cum0[-1])
        if inside.any():
            uu = flat[inside]
            idx = np.clip(np.searchsorted(cum0, uu, side="right") - 1, 0, len(cum0) - 2)
            lo = self.knots[idx].copy()
            hi = self.knots[idx + 1].copy()
            flo = cum0[idx]
            fhi = cum0[idx + 1]
            span = np.where(fhi > flo, fhi - flo, 1.0)
            x = lo + (hi - lo) * np.clip((uu - flo) / span, 0.0, 1.0)
            for _ in range(100):
                r = self.cdf(x) - uu
                lo = np.where(r < 0, x, lo)
                hi = np.where(r > 0, x, hi)
                done = (np.abs(r) <= 0.1 * QUANTILE_TOL) | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(x)))
                if done.all():
                    break
                dens = self.f(x)
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = x - r / dens
                ok = np.isfinite(step) & (step > lo) & (step < hi)
                x = np.where(done, x, np.where(ok, step, 0.5 * (lo + hi)))
            out[inside] = x
        for pos in np.flatnonzero(~inside):
            out[pos] = _bisect_quantile(self.cdf, self.support, flat[pos])
        return out.reshape(u.shape)


def _check_prob(u):
    if not (0.0 < u < 1.0):
        raise QuantileError(f"probability {u!r} outside (0, 1)")


def _bisect_quantile(cdf, support, u, max_bracket=1e12, tol=QUANTILE_TOL):
    _check_prob(u)
    lo, hi = support
    if not math.isfinite(lo):
        lo = -1.0
        while float(cdf(lo)) >= u:
            lo *= 2.0
            if -lo > max_bracket:
                raise QuantileError(f"bracket for u={u} exceeded {max_bracket}")
    if not math.isfinite(hi):
        hi = 1.0
        while float(cdf(hi)) <= u:
            hi *= 2.0
            if hi > max_bracket:
                raise QuantileError(f"bracket for u={u} exceeded {max_bracket}")
    best, best_r = 0.5 * (lo + hi), math.inf
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        r = float(cdf(mid)) - u
        if abs(r) < abs(best_r):
            best, best_r = mid, r
        if r < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2e-16 * max(1.0, abs(mid)):
            break
    if abs(best_r) > tol:
        raise QuantileError(f"cdf could not be inverted at u={u} (residual {best_r:.3g})")
    return best


def quantile_numeric(d: StandardDensity, u: float, *, max_bracket: float = 1e12) -> float:
    """Invert ``d.cdf`` at ``u`` by bracketed bisection.

    For unbounded supports the bracket starts at [-1, 1] and doubles until it
    straddles ``u``; :class:`QuantileError` is raised once it exceeds
    ``max_bracket`` or when ``u`` is not in (0, 1).
    """
    return _bisect_quantile(d.cdf, d.support, float(u), max_bracket=max_bracket)


def make_custom(
    pdf: Callable,
    support: tuple[float, float] = (-math.inf, math.inf),
    *,
    breakpoints=(),
    family: str = "custom",
) -> StandardDensity:
    """Standardise an arbitrary density and build its numeric machinery.

    ``pdf`` need not be normalised.  It is shifted and scaled to mean 0 and
    variance 1; ``breakpoints`` are kinks or jumps of ``pdf`` (in the input
    coordinates) that the quadrature should respect.
    """
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise DensityError(f"empty support {support}")
    raw = _vectorize(pdf)
    pts = sorted(p for p in breakpoints if lo < p < hi) or None

    probe_lo = lo if math.isfinite(lo) else -50.0
    probe_hi = hi if math.isfinite(hi) else 50.0
    probe = raw(np.linspace(probe_lo, probe_hi, 2001))
    if np.any(probe < 0) or not np.all(np.isfinite(probe)):
        raise DensityError("pdf must be finite and nonnegative on its support")

    def scalar(fn):
        return lambda t: float(fn(np.array([t]))[0])

    mass = _quad(scalar(raw), lo, hi, pts, "normalisation")[0]
    if not mass > 0:
        raise DensityError("pdf integrates to zero")
    m1 = _quad(scalar(lambda t: t * raw(t)), lo, hi, pts, "mean")[0] / mass
    m2 = _quad(scalar(lambda t: (t - m1) ** 2 * raw(t)), lo, hi, pts, "variance")[0] / mass
    if not (m2 > 0 and math.isfinite(m2)):
        raise DensityError("density has zero or undefined variance")
    s = math.sqrt(m2)

    def build(shift, scale, norm):
        def f(z):
            return scale * raw(shift + scale * np.asarray(z, dtype=float)) / norm

        zsupport = ((lo - shift) / scale, (hi - shift) / scale)
        zbreaks = [(p - shift) / scale for p in (pts or [])]
        return f, zsupport, zbreaks, PanelTable(f, zsupport, zbreaks)

    f, zsupport, zbreaks, table = build(m1, s, mass)
    # one corrective pass from the table moments, which are exact for the panels
    tm0, tm1, tm2 = table.total
    mean = tm1 / tm0
    var = tm2 / tm0 - mean**2
    if abs(tm0 - 1) > 1e-13 or abs(mean) > 1e-13 or abs(var - 1) > 1e-13:
        m1, s, mass = m1 + s * mean, s * math.sqrt(var), mass * tm0
        f, zsupport, zbreaks, table = build(m1, s, mass)

    try:
        m4 = _quad(scalar(lambda t: t**4 * f(t)), *zsupport, zbreaks or None, "fourth moment")[0]
    except DensityError:
        m4 = math.inf

    def pdf_std(z):
        z = np.asarray(z, dtype=float)
        inside = (z >= zsupport[0]) & (z <= zsupport[1])
        return np.where(inside, f(np.where(inside, z, 0.0)), 0.0)

    return StandardDensity(
        family=family,
        pdf=pdf_std,
        cdf=table.cdf,
        quantile=table.quantile,
        partial_first_moment=lambda a, b: table.moment(1, a, b),
        partial_second_moment=lambda a, b: table.moment(2, a, b),
        fourth_moment=m4,
        support=zsupport,
        analytic=False,
        meta={"shift": m1, "scale": s, "mass": mass, "knots": len(table.knots)},
    )


def load_tabulated(path) -> StandardDensity:
    """Custom density from a two-column CSV ``z, f(z)``, linearly interpolated."""
    zs, fs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                z, v = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if zs:
                    raise DensityError(f"malformed row in {path}: {row}") from None
                continue  # header
            zs.append(z)
            fs.append(v)
    if len(zs) < 2:
        raise DensityError(f"{path}: need at least two (z, f) rows")
    z = np.array(zs)
    v = np.array(fs)
    if np.any(np.diff(z) <= 0):
        raise DensityError(f"{path}: z column must be strictly increasing (atoms are not supported)")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise DensityError(f"{path}: pdf values must be finite and nonnegative")
    return make_custom(
        lambda t: np.interp(t, z, v, left=0.0, right=0.0),
        (float(z[0]), float(z[-1])),
        breakpoints=z[1:-1].tolist(),
    )


def resolve_density(family: str, pdf_table=None) -> StandardDensity:
    """Builtin family by name, or ``custom`` loaded from ``pdf_table``."""
    if family == "custom":
        if pdf_table is None:
            raise DensityError("family 'custom' requires a tabulated pdf file")
        return load_tabulated(pdf_table)
    return make_standard(family)


@dataclass(frozen=True)
class LocationScaleModel:
    """The density ``(1/sigma) f((x - mu)/sigma)`` for a standardised ``f``."""

    base: StandardDensity
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")

    @property
    def theta(self):
        return np.array([self.mu, self.sigma])

    @property
    def support(self):
        lo, hi = self.base.support
        return self.mu + self.sigma * lo, self.mu + self.sigma * hi

    def pdf(self, x):
        return self.base.pdf((np.asarray(x, dtype=float) - self.mu) / self.sigma) / self.sigma

    def cdf(self, x):
        return self.base.cdf((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def quantile(self, u):
        return self.mu + self.sigma * self.base.quantile(u)

    def mean(self):
        return self.mu

    def variance(self):
        return self.sigma**2
