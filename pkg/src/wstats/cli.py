"""Command-line interface: ``wstats <subcommand> [options]``.

Every subcommand prints one JSON document on stdout.  Exit status is 0 on
success, 1 when a computation finished degraded (e.g. too many failed fits
in a simulation) and 2 for usage or input errors.  Options may also come
from ``--config FILE`` (``key = value`` lines, keys spelt like the long
option without dashes); command-line flags win.  ``WSTATS_SEED`` sets the
default simulation seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import ConvergenceError, SimulationError, WStatsError

EXIT_OK, EXIT_DEGRADED, EXIT_USAGE = 0, 1, 2

DEFAULT_GRID = [(mu, sigma) for mu in (-3.0, 0.0, 5.0) for sigma in (0.1, 1.0, 10.0)]


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _grid(text):
    points = []
    for chunk in str(text).split(";"):
        if not chunk.strip():
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"grid point {chunk!r} is not 'mu,sigma'")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise argparse.ArgumentTypeError(f"grid point {chunk!r} is not numeric") from None
    return points


# option name -> (type, default); defaults apply after config-file merging
OPTIONS = {
    "data": (str, None),
    "data1": (str, None),
    "data2": (str, None),
    "column": (str, None),
    "family": (str, "gaussian"),
    "family2": (str, None),
    "pdf": (str, None),
    "method": (str, "w"),
    "solver": (str, "closed"),
    "max_iter": (int, 10_000),
    "xtol": (float, 1e-8),
    "initial_scale": (float, 0.1),
    "mu": (float, 0.0),
    "sigma": (float, 1.0),
    "mu1": (float, 0.0),
    "sigma1": (float, 1.0),
    "mu2": (float, 0.0),
    "sigma2": (float, 1.0),
    "form": (str, "closed"),
    "grid": (_grid, None),
    "n": (int, 1000),
    "trials": (int, 1000),
    "seed": (int, None),
    "estimators": (_str_list, ["w"]),
    "threads": (int, 1),
    "n_values": (_int_list, [100, 400, 1600, 6400]),
    "plot_data": (str, None),
    "csv": (str, None),
}


def _add(p, name, help=None, **kw):
    typ = OPTIONS[name][0]
    p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None, help=help, **kw)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wstats",
        description="Wasserstein (optimal transport) estimation for 1D location-scale models.",
    )
    parser.add_argument("--version", action="version", version=f"wstats {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def command(name, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", help="key = value file supplying option defaults")
        return p

    family_help = "gaussian, uniform, laplace or custom (with --pdf)"

    p = command("estimate", "fit location and scale to a sample")
    _add(p, "data", "CSV file with the sample")
    _add(p, "column", "column name or 0-based index (default: first numeric)")
    _add(p, "family", family_help)
    _add(p, "pdf", "two-column CSV (z, f(z)) for --family custom")
    p.add_argument("--method", dest="method", choices=["w", "mle", "both"], default=None)
    p.add_argument("--solver", dest="solver", choices=["closed", "simplex", "equation", "both"],
                   default=None, help="W solver: closed form (default) or numeric")
    _add(p, "max_iter")
    _add(p, "xtol")
    _add(p, "initial_scale")

    p = command("cost", "transport cost from a sample to a location-scale model")
    _add(p, "data")
    _add(p, "column")
    _add(p, "family", family_help)
    _add(p, "pdf")
    _add(p, "mu")
    _add(p, "sigma")
    p.add_argument("--form", dest="form", choices=["closed", "interval", "both"], default=None)

    p = command("distance", "squared W2 distance between two models or two samples")
    _add(p, "family", family_help)
    _add(p, "family2", "family of the second model (default: --family)")
    _add(p, "pdf")
    for name in ("mu1", "sigma1", "mu2", "sigma2"):
        _add(p, name)
    _add(p, "data1", "first sample CSV (sample mode)")
    _add(p, "data2", "second sample CSV (sample mode)")
    _add(p, "column")

    p = command("metric", "Wasserstein metric tensor over a (mu, sigma) grid")
    _add(p, "family", family_help)
    _add(p, "pdf")
    _add(p, "grid", "points as 'mu,sigma;mu,sigma;...' (default: 3x3 grid)")
    _add(p, "threads")

    for name, help in (("simulate", "Monte Carlo study of the estimators"),
                       ("sweep", "variance decay across sample sizes")):
        p = command(name, help)
        _add(p, "family", family_help)
        _add(p, "pdf")
        _add(p, "mu")
        _add(p, "sigma")
        _add(p, "trials")
        _add(p, "seed", "master seed (default: $WSTATS_SEED or 0)")
        _add(p, "estimators", "comma-separated subset of w,mle")
        _add(p, "threads", "worker threads (results do not depend on it)")
        _add(p, "plot_data", "write n-vs-variance rows to this CSV")
        if name == "simulate":
            _add(p, "n")
            _add(p, "csv", "write the flat report CSV here")
        else:
            _add(p, "n_values", "comma-separated ascending sample sizes")
    return parser


def read_config(path):
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (t.strip() for t in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in OPTIONS:
                raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
            try:
                out[key] = OPTIONS[key][0](value)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def resolve_options(args):
    """Merge builtin defaults < WSTATS_SEED < config file < flags."""
    merged = {k: v[1] for k, v in OPTIONS.items()}
    if os.environ.get("WSTATS_SEED"):
        try:
            merged["seed"] = int(os.environ["WSTATS_SEED"])
        except ValueError:
            raise UsageError("WSTATS_SEED must be an integer") from None
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    merged.update({k: v for k, v in vars(args).items() if v is not None and k in OPTIONS})
    if merged["seed"] is None:
        merged["seed"] = 0
    return argparse.Namespace(command=args.command, **merged)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def emit(doc, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(_clean(doc), sort_keys=True, allow_nan=False))
    stream.write("\n")


def _density(opts):
    from .densities import resolve_density

    if opts.family == "custom" and not opts.pdf:
        raise UsageError("--family custom requires --pdf")
    return resolve_density(opts.family, opts.pdf)


def _sample(path, column):
    from .transport import load_sample_csv

    if not path:
        raise UsageError("a data file is required")
    col = int(column) if column is not None and str(column).lstrip("-").isdigit() else column
    return load_sample_csv(path, col)


def cmd_estimate(opts):
    from .estimation import (SolverOptions, fit_mle_location_scale, fit_w_general,
                             fit_w_location_scale)
    from .models import LocationScaleFamily

    d = _density(opts)
    s = _sample(opts.data, opts.column)
    if opts.method not in ("w", "mle", "both"):
        raise UsageError(f"unknown method {opts.method!r}")
    estimates = {}
    if opts.method in ("w", "both"):
        if opts.solver == "closed":
            fit = fit_w_location_scale(s, d)
        elif opts.solver in ("simplex", "equation", "both"):
            start = (float(np.mean(s.values)), max(float(np.std(s.values)), 1.0))
            fit = fit_w_general(s, LocationScaleFamily(d), start, SolverOptions(
                method=opts.solver, max_iter=opts.max_iter, xtol=opts.xtol,
                initial_scale=opts.initial_scale))
        else:
            raise UsageError(f"unknown solver {opts.solver!r}")
        estimates["w"] = fit.as_dict()
    if opts.method in ("mle", "both"):
        estimates["mle"] = fit_mle_location_scale(s, d).as_dict()
    warning = any(e["warnings"] for e in estimates.values())
    emit({"family": d.family, "n": s.n, "estimates": estimates, "warning": warning})
    return EXIT_OK


def cmd_cost(opts):
    from .densities import LocationScaleModel
    from .transport import cost_empirical_to_model, cost_interval_sum

    d = _density(opts)
    s = _sample(opts.data, opts.column)
    if not opts.sigma > 0:
        raise UsageError("--sigma must be positive")
    m = LocationScaleModel(d, opts.mu, opts.sigma)
    doc = {"family": d.family, "n": s.n, "mu": opts.mu, "sigma": opts.sigma}
    if opts.form in ("closed", "both"):
        doc["cost"] = cost_empirical_to_model(s, m)
    if opts.form in ("interval", "both"):
        doc["cost_interval"] = cost_interval_sum(s, m)
    emit(doc)
    return EXIT_OK


def cmd_distance(opts):
    from .densities import LocationScaleModel, resolve_density
    from .transport import w2_squared_models, w2_squared_samples

    if opts.data1 or opts.data2:
        s1 = _sample(opts.data1, opts.column)
        s2 = _sample(opts.data2, opts.column)
        emit({"mode": "samples", "n": s1.n, "w2_squared": w2_squared_samples(s1, s2)})
        return EXIT_OK
    d1 = _density(opts)
    d2 = resolve_density(opts.family2, opts.pdf) if opts.family2 else d1
    if not (opts.sigma1 > 0 and opts.sigma2 > 0):
        raise UsageError("--sigma1 and --sigma2 must be positive")
    m1 = LocationScaleModel(d1, opts.mu1, opts.sigma1)
    m2 = LocationScaleModel(d2, opts.mu2, opts.sigma2)
    doc = {
        "mode": "models",
        "family1": d1.family,
        "family2": d2.family,
        "w2_squared": w2_squared_models(m1, m2),
        "closed_form": None,
    }
    if d1 is d2:
        doc["closed_form"] = (opts.mu1 - opts.mu2) ** 2 + (opts.sigma1 - opts.sigma2) ** 2
    emit(doc)
    return EXIT_OK


def cmd_metric(opts):
    from .geometry import verify_euclidean

    grid = opts.grid or DEFAULT_GRID
    for mu, sigma in grid:
        if not sigma > 0:
            raise UsageError(f"grid point ({mu}, {sigma}) has non-positive sigma")
    d = _density(opts)
    report = verify_euclidean(d, grid, workers=max(1, opts.threads))
    emit(report)
    return EXIT_OK


def _sim_config(opts, n):
    from .montecarlo import SimConfig

    return SimConfig(
        family=opts.family,
        true_mu=opts.mu,
        true_sigma=opts.sigma,
        n=n,
        trials=opts.trials,
        master_seed=opts.seed,
        estimators=tuple(opts.estimators),
        pdf_table=opts.pdf,
    ).validate()


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])


PLOT_HEADER = ["estimator", "parameter", "n", "variance", "n_variance"]


def cmd_simulate(opts):
    from .montecarlo import run_simulation

    if opts.family == "custom" and not opts.pdf:
        raise UsageError("--family custom requires --pdf")
    cfg = _sim_config(opts, opts.n)
    status = EXIT_OK
    try:
        report = run_simulation(cfg, threads=max(1, opts.threads))
    except SimulationError as exc:
        print(f"wstats: {exc}", file=sys.stderr)
        report, status = exc.report, EXIT_DEGRADED
    emit(report.to_dict())
    if opts.csv:
        with open(opts.csv, "w", newline="") as fh:
            fh.write(report.to_csv())
    if opts.plot_data:
        rows = []
        for name, est in sorted(report.estimators.items()):
            for param in ("mu", "sigma"):
                v = est[f"{param}_variance"]["value"]
                rows.append((name, param, cfg.n, v, cfg.n * v))
        _write_rows(opts.plot_data, PLOT_HEADER, rows)
    return status


def cmd_sweep(opts):
    from .montecarlo import convergence_sweep, sweep_plot_rows

    if opts.family == "custom" and not opts.pdf:
        raise UsageError("--family custom requires --pdf")
    cfg = _sim_config(opts, max(opts.n_values or [1]))
    try:
        sweep = convergence_sweep(cfg, opts.n_values, threads=max(1, opts.threads))
    except SimulationError as exc:
        print(f"wstats: {exc}", file=sys.stderr)
        emit(exc.report.to_dict() if exc.report else {})
        return EXIT_DEGRADED
    emit(sweep)
    if opts.plot_data:
        _write_rows(opts.plot_data, PLOT_HEADER, sweep_plot_rows(sweep))
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "cost": cmd_cost,
    "distance": cmd_distance,
    "metric": cmd_metric,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        return COMMANDS[opts.command](opts)
    except (UsageError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"wstats: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"wstats: {exc}", file=sys.stderr)
        return EXIT_DEGRADED
    except (WStatsError, ValueError) as exc:
        print(f"wstats: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
