"""W-estimators (transport-cost minimisers) and maximum-likelihood baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import _kernels
from .densities import SQRT3, StandardDensity
from .errors import ConvergenceError, DegenerateSampleError
from .models import ParametricModel
from .transport import as_sample, cost_general, partition


@dataclass
class FitResult:
    theta_hat: np.ndarray
    cost: float
    method: str
    warnings: list[str] = field(default_factory=list)
    iterations: int = 0
    names: tuple[str, ...] = ("mu", "sigma")
    diagnostics: dict = field(default_factory=dict)

    @property
    def mu(self):
        return float(self.theta_hat[self.names.index("mu")])

    @property
    def sigma(self):
        return float(self.theta_hat[self.names.index("sigma")])

    def as_dict(self):
        out = {name: float(v) for name, v in zip(self.names, self.theta_hat)}
        out.update(cost=float(self.cost), method=self.method,
                   warnings=list(self.warnings), iterations=int(self.iterations))
        return out


@dataclass(frozen=True)
class SolverOptions:
    """Settings for :func:`fit_w_general`.

    ``method`` is ``'simplex'`` (Nelder-Mead on the cost), ``'equation'``
    (root of the estimating equation) or ``'both'`` (lower cost wins).
    """

    method: str = "simplex"
    max_iter: int = 10_000
    xtol: float = 1e-8
    residual_tol: float = 1e-8
    initial_scale: float = 0.1
    fd_step: float = 1e-5
    starts: tuple = ()


def _sigma_warnings(sigma):
    return [f"non-positive sigma_hat ({sigma!r})"] if not sigma > 0 else []


def fit_w_location_scale(s, d: StandardDensity) -> FitResult:
    """Closed-form W-estimator: sample mean and ``sum k_i x_(i)``.

    A non-positive scale estimate is returned unchanged with a warning.
    """
    s = as_sample(s)
    x = s.values
    k = partition(d, s.n).k
    mu = float(np.mean(x))
    sigma = float(np.dot(k, x))
    cost = _kernels.closed_form_cost(x, k, mu, sigma)
    return FitResult(
        theta_hat=np.array([mu, sigma]),
        cost=cost,
        method="w_closed_form",
        warnings=_sigma_warnings(sigma),
    )


def _simplex(fun, theta0, opts):
    theta0 = np.asarray(theta0, dtype=float)
    d = theta0.size
    scale = max(1.0, float(np.max(np.abs(theta0))))
    simplex = np.tile(theta0, (d + 1, 1))
    for j in range(d):
        simplex[j + 1, j] += opts.initial_scale * max(1.0, abs(theta0[j]))
    res = optimize.minimize(
        fun,
        theta0,
        method="Nelder-Mead",
        options=dict(
            maxiter=opts.max_iter,
            maxfev=4 * opts.max_iter,
            xatol=opts.xtol * scale,
            fatol=1e-14,
            initial_simplex=simplex,
        ),
    )
    if not res.success:
        raise ConvergenceError(
            f"simplex did not converge after {res.nit} iterations: {res.message}",
            best=np.asarray(res.x), cost=float(res.fun), iterations=int(res.nit),
        )
    return np.asarray(res.x), float(res.fun), int(res.nit)


def estimating_residual(s, model: ParametricModel, theta, step=1e-5):
    """``sum_i dk_i/dtheta x_i - (1/2) dS/dtheta`` by central differences."""
    s = as_sample(s)
    theta = np.asarray(theta, dtype=float)
    r = np.empty(theta.size)
    for j in range(theta.size):
        h = step * max(1.0, abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        dk = (model.cell_first_moments(s.n, tp) - model.cell_first_moments(s.n, tm)) / (2 * h)
        dS = (model.second_moment(tp) - model.second_moment(tm)) / (2 * h)
        r[j] = np.dot(dk, s.values) - 0.5 * dS
    return r


def _equation(s, model, theta0, opts):
    fun = lambda t: estimating_residual(s, model, t, opts.fd_step)
    res = optimize.root(fun, np.asarray(theta0, dtype=float), method="hybr",
                        options=dict(maxfev=opts.max_iter, xtol=opts.xtol))
    theta = np.asarray(res.x)
    resid = float(np.linalg.norm(fun(theta)))
    if resid >= opts.residual_tol or not model.feasible(theta):
        raise ConvergenceError(
            f"estimating equation not solved (|residual| = {resid:.3g})",
            best=theta, cost=cost_general(s, model, theta), iterations=int(res.nfev),
        )
    return theta, cost_general(s, model, theta), int(res.nfev)


def fit_w_general(s, model: ParametricModel, theta0, options: SolverOptions | None = None) -> FitResult:
    """Minimise the transport cost from the empirical measure over ``theta``.

    With ``options.starts`` the search is repeated from each extra start and
    every distinct local minimum is listed in ``diagnostics['local_minima']``;
    the lowest-cost one is returned.
    """
    s = as_sample(s)
    opts = options or SolverOptions()
    if opts.method not in ("simplex", "equation", "both"):
        raise ValueError(f"unknown solver method {opts.method!r}")
    fun = lambda t: cost_general(s, model, t)

    if not model.feasible(np.asarray(theta0, dtype=float)):
        raise ValueError(f"theta0={theta0} is infeasible")

    candidates = []
    failures = []
    for start in [theta0, *opts.starts]:
        solvers = {"simplex": ["simplex"], "equation": ["equation"],
                   "both": ["simplex", "equation"]}[opts.method]
        for name in solvers:
            try:
                if name == "simplex":
                    theta, cost, it = _simplex(fun, start, opts)
                else:
                    theta, cost, it = _equation(s, model, start, opts)
                candidates.append((cost, theta, it, name))
            except ConvergenceError as exc:
                failures.append(exc)
    if not candidates:
        best = min(failures, key=lambda e: e.cost if e.cost is not None else math.inf)
        raise best

    candidates.sort(key=lambda c: c[0])
    cost, theta, it, name = candidates[0]
    minima = []
    for c in candidates:
        scale = max(1.0, float(np.max(np.abs(c[1]))))
        if all(np.max(np.abs(c[1] - m["theta"])) > 1e-6 * scale for m in minima):
            minima.append({"theta": c[1], "cost": c[0], "solver": c[3]})
    warn = []
    if "sigma" in model.names:
        warn = _sigma_warnings(theta[model.names.index("sigma")])
    return FitResult(
        theta_hat=theta,
        cost=cost,
        method="w_numeric",
        warnings=warn,
        iterations=it,
        names=tuple(model.names),
        diagnostics={"solver": name, "local_minima": minima,
                     "failed_starts": len(failures)},
    )


def _neg_loglik(d, x):
    def nll(params):
        mu, log_sigma = params
        sigma = math.exp(log_sigma)
        with np.errstate(divide="ignore"):
            ll = np.log(d.pdf((x - mu) / sigma))
        total = float(np.sum(ll)) - x.size * log_sigma
        return -total if math.isfinite(total) else math.inf

    return nll


def fit_mle_location_scale(s, d: StandardDensity) -> FitResult:
    """Maximum-likelihood location and scale.

    Gaussian and uniform use their closed forms; any other family is fitted
    numerically over ``(mu, log sigma)``.
    """
    s = as_sample(s)
    x = s.values
    if s.n < 2:
        raise DegenerateSampleError("MLE of a scale needs at least two observations")
    if x[0] == x[-1]:
        raise DegenerateSampleError("all observations are equal; likelihood is unbounded")

    it = 0
    if d.family == "gaussian":
        mu, sigma = float(np.mean(x)), float(np.std(x))
    elif d.family == "uniform":
        mu = 0.5 * (x[0] + x[-1])
        sigma = (x[-1] - x[0]) / (2.0 * SQRT3)
    else:
        start = np.array([float(np.median(x)), math.log(float(np.std(x)))])
        nll = _neg_loglik(d, x)
        lo, hi = d.support
        if not math.isfinite(nll(start)) and math.isfinite(hi - lo):
            # bounded support: start from a scale that covers every observation
            sig0 = 1.01 * (x[-1] - x[0]) / (hi - lo)
            start = np.array([0.5 * (x[0] + x[-1]) - sig0 * 0.5 * (lo + hi), math.log(sig0)])
        res = optimize.minimize(
            nll, start, method="Nelder-Mead",
            options=dict(xatol=1e-10, fatol=1e-12, maxiter=10_000, maxfev=40_000),
        )
        if not res.success or not math.isfinite(res.fun):
            raise ConvergenceError(f"likelihood maximisation failed: {res.message}",
                                   best=res.x, cost=res.fun, iterations=int(res.nit))
        mu, sigma, it = float(res.x[0]), math.exp(float(res.x[1])), int(res.nit)

    k = partition(d, s.n).k
    return FitResult(
        theta_hat=np.array([mu, sigma]),
        cost=_kernels.closed_form_cost(x, k, mu, sigma),
        method="mle",
        iterations=it,
    )
