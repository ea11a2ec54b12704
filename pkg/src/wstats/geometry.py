"""Wasserstein metric tensor of parametric families and related diagnostics.

The infinitesimal transport cost between ``p`` and ``p + dp`` is
``int (1/p) Psi(x)^2 dx`` with ``Psi(x) = int_{-inf}^x dp``.  For a family,
``Psi = sum_i psi_i dtheta_i`` with ``psi_i = dP(x, theta)/dtheta_i``, so
``g_ij = int psi_i psi_j / p dx``.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import _kernels
from .densities import LocationScaleModel, StandardDensity
from .errors import SingularDensityError
from .estimation import fit_w_location_scale
from .models import LocationScaleFamily, ParametricModel
from .transport import as_sample, partition, w2_squared_models

TRUNCATION = 1e-10
ENDPOINT_MARGIN = 1e-8


@dataclass(frozen=True)
class MetricTensor:
    g: np.ndarray
    theta: np.ndarray
    quadrature_error_estimate: float
    names: tuple[str, ...] = ("mu", "sigma")
    excluded_mass: float = 0.0

    def deviation_from_identity(self):
        return float(np.max(np.abs(self.g - np.eye(self.g.shape[0]))))

    def as_dict(self):
        return {
            "theta": [float(t) for t in self.theta],
            "g": [[float(v) for v in row] for row in self.g],
            "quadrature_error_estimate": float(self.quadrature_error_estimate),
            "excluded_mass": float(self.excluded_mass),
        }


def _coerce(model, theta):
    if isinstance(model, LocationScaleModel):
        return LocationScaleFamily(model.base), np.array([model.mu, model.sigma])
    if isinstance(model, StandardDensity):
        model = LocationScaleFamily(model)
    if theta is None:
        raise ValueError("theta is required for a parametric model")
    return model, np.asarray(theta, dtype=float)


def _integrate(fn, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
    return val, err


def metric_tensor(model, theta=None, *, psi: str = "auto", step: float = 1e-6) -> MetricTensor:
    """Wasserstein metric ``g_ij(theta)`` of a parametric family.

    ``psi='analytic'`` (default for location-scale families) uses
    ``psi_mu = -p`` and ``psi_sigma = -((x - mu)/sigma) p``; ``'fd'`` takes
    central differences of the cdf with step ``step * max(1, |theta_j|)``.
    Unbounded supports are truncated at the 1e-10 quantiles; bounded ones
    lose an endpoint margin of 1e-8 probability on the finite-difference
    path.  Raises :class:`SingularDensityError` if ``p`` vanishes inside.
    """
    model, theta = _coerce(model, theta)
    location_scale = isinstance(model, LocationScaleFamily)
    if psi == "auto":
        psi = "analytic" if location_scale else "fd"
    if psi == "analytic" and not location_scale:
        raise ValueError("analytic psi is only available for location-scale families")
    if psi not in ("analytic", "fd"):
        raise ValueError(f"unknown psi mode {psi!r}")
    if location_scale and not theta[1] > 0:
        raise ValueError(f"sigma must be positive, got {theta[1]}")

    lo, hi = model.support(theta)
    excluded = 0.0
    margin_lo = margin_hi = 0.0
    if not math.isfinite(lo):
        margin_lo = TRUNCATION
    elif psi == "fd":
        margin_lo = ENDPOINT_MARGIN
    if not math.isfinite(hi):
        margin_hi = TRUNCATION
    elif psi == "fd":
        margin_hi = ENDPOINT_MARGIN
    a = float(model.quantile(np.array([margin_lo]), theta)[0]) if margin_lo else lo
    b = float(model.quantile(np.array([1.0 - margin_hi]), theta)[0]) if margin_hi else hi
    excluded = margin_lo + margin_hi

    probe = np.linspace(a, b, 4003)[1:-1]
    if np.any(model.pdf(probe, theta) <= 0):
        raise SingularDensityError("density vanishes inside its support; 1/p is not integrable")

    d = theta.size
    if psi == "analytic":
        mu, sigma = theta

        def ratio(x, i):
            # psi_i / p
            return -1.0 if i == 0 else -(x - mu) / sigma

        def integrand(x, i, j):
            return ratio(x, i) * ratio(x, j) * float(model.pdf(np.array([x]), theta)[0])
    else:
        hs = [step * max(1.0, abs(t)) for t in theta]

        def psi_fn(x, i):
            tp, tm = theta.copy(), theta.copy()
            tp[i] += hs[i]
            tm[i] -= hs[i]
            xa = np.array([x])
            return float(model.cdf(xa, tp)[0] - model.cdf(xa, tm)[0]) / (2 * hs[i])

        def integrand(x, i, j):
            p = float(model.pdf(np.array([x]), theta)[0])
            if p <= 0:
                raise SingularDensityError(f"density vanishes at x={x}")
            return psi_fn(x, i) * psi_fn(x, j) / p

    g = np.empty((d, d))
    err = 0.0
    for i in range(d):
        for j in range(i, d):
            val, e = _integrate(lambda x: integrand(x, i, j), a, b)
            g[i, j] = g[j, i] = val
            err += e
    # second-moment tail beyond the truncation, bounded by the excluded mass
    err += excluded
    return MetricTensor(g=g, theta=theta, quadrature_error_estimate=err,
                        names=tuple(model.names), excluded_mass=excluded)


def verify_euclidean(d: StandardDensity, grid, steps=(1e-2, 1e-3), workers: int = 1) -> dict:
    """Deviation of the location-scale metric from the identity over ``grid``.

    Also checks the second-order expansion: ``W2^2(theta, theta + dtheta)``
    divided by ``|dtheta|^2`` for each step size along both axes and the
    diagonal.  Returns a JSON-ready report.
    """
    grid = [(float(m), float(s)) for m, s in grid]
    for m, s in grid:
        if not s > 0:
            raise ValueError(f"grid point ({m}, {s}) has non-positive sigma")

    def one(point):
        mu, sigma = point
        mt = metric_tensor(LocationScaleModel(d, mu, sigma))
        base = LocationScaleModel(d, mu, sigma)
        ratios = []
        for h in steps:
            for direction in ((1.0, 0.0), (0.0, 1.0), (math.sqrt(0.5), math.sqrt(0.5))):
                dm, ds = h * direction[0], h * direction[1]
                w2 = w2_squared_models(base, LocationScaleModel(d, mu + dm, sigma + ds), rtol=1e-12)
                ratios.append({"step": h, "direction": list(direction),
                               "ratio": w2 / (dm * dm + ds * ds)})
        return {
            "mu": mu,
            "sigma": sigma,
            "g": mt.as_dict()["g"],
            "deviation": mt.deviation_from_identity(),
            "quadrature_error_estimate": mt.quadrature_error_estimate,
            "ratios": ratios,
        }

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            points = list(ex.map(one, grid))
    else:
        points = [one(p) for p in grid]
    ratio_dev = {
        str(h): max(abs(r["ratio"] - 1.0) for p in points for r in p["ratios"] if r["step"] == h)
        for h in steps
    }
    return {
        "family": d.family,
        "points": points,
        "max_deviation": max(p["deviation"] for p in points),
        "max_ratio_deviation": ratio_dev,
    }


def pythagoras_residual(s, d: StandardDensity, theta_prime) -> float:
    """``C(p_hat, theta') - C(p_hat, theta_hat) - |theta' - theta_hat|^2``.

    ``theta_hat`` is the closed-form W-fit of ``s``.  The residual measures
    how far the cost decomposes through the projection point.
    """
    s = as_sample(s)
    mu_p, sigma_p = (float(t) for t in theta_prime)
    if not sigma_p > 0:
        raise ValueError(f"sigma' must be positive, got {sigma_p}")
    fit = fit_w_location_scale(s, d)
    k = partition(d, s.n).k
    c_prime = _kernels.closed_form_cost(s.values, k, mu_p, sigma_p)
    gap = (mu_p - fit.mu) ** 2 + (sigma_p - fit.sigma) ** 2
    return c_prime - fit.cost - gap
