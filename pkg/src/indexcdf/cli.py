"""Command-line interface.

Subcommands: fit, predict-interval, select-bandwidth, simulate.  Every run
serializes its fully-resolved configuration (defaults filled in) into the
output document, so a run can be reproduced from its own output.  Exit codes:
0 success, 1 numerical failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .anw import anw_cdf_curve_multi, prediction_interval, quantile_multi
from .bandwidth import geometric_grid, ols_fit, select_H, select_h
from .criterion import criterion_total, make_data_spheres, make_sphere_grid
from .data import Dataset, embed_time_series, load_csv, load_series, standardize
from .directions import Direction, canonicalize
from .errors import NumericalError, ValidationError
from .optimize import SimplexOptions, fit_theta
from .simulate import RNG_NAME, StudyConfig, gen_example1, gen_example2, run_study


def _add_data_flags(p: argparse.ArgumentParser):
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--x-cols", help="comma-separated covariate column names")
    p.add_argument("--y-col", default="y", help="response column name")
    p.add_argument(
        "--time-series",
        action="store_true",
        help="treat the response column as a scalar series and lag-embed it",
    )
    p.add_argument("--lags", type=int, default=2, help="embedding dimension")
    p.add_argument(
        "--standardize",
        choices=("on", "off", "auto"),
        default="auto",
        help="standardize X columns; auto = on for time series, off otherwise",
    )


def _add_sphere_flags(p: argparse.ArgumentParser, default_mode: str):
    p.add_argument("--sphere-mode", choices=("grid", "data"), default=default_mode)
    p.add_argument("--sphere-low", type=float, default=-1.5)
    p.add_argument("--sphere-high", type=float, default=1.5)
    p.add_argument("--sphere-points", type=int, default=5)
    p.add_argument("--sphere-radius", type=float, default=1.0)


def _add_bandwidth_flags(p: argparse.ArgumentParser):
    p.add_argument("--h", type=float, help="fixed search bandwidth (skips selection)")
    p.add_argument("--H", dest="H_value", type=float, help="fixed estimation bandwidth")
    p.add_argument("--grid-start", type=float, default=0.1)
    p.add_argument("--grid-ratio", type=float, default=1.2)
    p.add_argument("--grid-size", type=int, default=15)
    p.add_argument("--replicates", type=int, default=20, help="bootstrap replicates")


def _add_simplex_flags(p: argparse.ArgumentParser):
    p.add_argument("--restarts", type=int, default=2)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--init", default="ols", help="ols, random, or a comma vector")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indexcdf",
        description="Conditional distribution estimation through a fitted single index",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="estimate the index direction")
    _add_data_flags(p_fit)
    _add_sphere_flags(p_fit, default_mode="grid")
    _add_bandwidth_flags(p_fit)
    _add_simplex_flags(p_fit)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", help="output JSON path (default stdout)")

    p_pi = sub.add_parser(
        "predict-interval", help="quantile prediction intervals along the fitted index"
    )
    _add_data_flags(p_pi)
    _add_sphere_flags(p_pi, default_mode="data")
    _add_bandwidth_flags(p_pi)
    _add_simplex_flags(p_pi)
    p_pi.add_argument("--alpha", type=float, default=0.1)
    p_pi.add_argument(
        "--estimator", choices=("anw", "local-linear"), default="anw",
        help="final conditional-CDF estimator (intervals always use anw weights)",
    )
    p_pi.add_argument(
        "--predictor", choices=("index", "lag1", "lag12"), default="index",
        help="index smoother, first-lag smoother, or two-lag comparison baseline",
    )
    p_pi.add_argument("--train-prefix", type=int, help="train on the first K series points")
    p_pi.add_argument("--validate-suffix", type=int, default=0)
    p_pi.add_argument("--at", help="comma vector: predict at this covariate point")
    p_pi.add_argument(
        "--last-window", action="store_true",
        help="time series only: predict the next value from the last lag window",
    )
    p_pi.add_argument("--seed", type=int, default=0)
    p_pi.add_argument("--out")

    p_sb = sub.add_parser("select-bandwidth", help="bootstrap bandwidth selection")
    _add_data_flags(p_sb)
    _add_sphere_flags(p_sb, default_mode="grid")
    _add_bandwidth_flags(p_sb)
    _add_simplex_flags(p_sb)
    p_sb.add_argument("--seed", type=int, default=0)
    p_sb.add_argument("--out")

    p_sim = sub.add_parser("simulate", help="replicated synthetic study")
    p_sim.add_argument("--model", choices=("example1", "example2"), default="example1")
    p_sim.add_argument("--n", type=int, default=200)
    p_sim.add_argument("--replications", type=int, default=10)
    p_sim.add_argument("--seed", type=int, default=0)
    _add_sphere_flags(p_sim, default_mode="grid")
    p_sim.add_argument("--policy", choices=("auto", "fixed"), default="auto")
    p_sim.add_argument("--h-multiplier", type=float, default=1.0)
    p_sim.add_argument("--h", type=float)
    p_sim.add_argument("--H", dest="H_value", type=float)
    p_sim.add_argument("--grid-start", type=float, default=0.1)
    p_sim.add_argument("--grid-ratio", type=float, default=1.2)
    p_sim.add_argument("--grid-size", type=int, default=15)
    p_sim.add_argument("--boot-replicates", type=int, default=20)
    p_sim.add_argument("--no-errors", action="store_true")
    p_sim.add_argument(
        "--emit-data",
        help="write the first replication's dataset to this CSV and exit",
    )
    p_sim.add_argument(
        "--jobs", type=int,
        default=int(os.environ.get("INDEXCDF_JOBS", "1")),
        help="worker processes for replications (env INDEXCDF_JOBS)",
    )
    p_sim.add_argument("--out")
    return parser


def _emit(doc: dict, out_path) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _resolved_config(args: argparse.Namespace) -> dict:
    # The output path is where the document goes, not part of what it means;
    # leaving it out keeps documents byte-identical across --out choices.
    cfg = {k: v for k, v in vars(args).items() if k not in ("command", "out")}
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items()}


def _load_dataset(args) -> Dataset:
    if args.time_series:
        return embed_time_series(load_series(args.data, args.y_col), args.lags)
    if not args.x_cols:
        raise ValidationError("--x-cols is required unless --time-series is given")
    return load_csv(args.data, [c.strip() for c in args.x_cols.split(",")], args.y_col)


def _maybe_standardize(args, data: Dataset):
    flag = args.standardize
    on = flag == "on" or (flag == "auto" and args.time_series)
    if not on:
        return data, None
    return standardize(data)


def _spheres(args, data: Dataset):
    if args.sphere_mode == "data":
        return make_data_spheres(data, args.sphere_radius)
    return make_sphere_grid(
        args.sphere_low, args.sphere_high, args.sphere_points, data.d, args.sphere_radius
    )


def _simplex_options(args) -> SimplexOptions:
    return SimplexOptions(
        max_iterations=args.max_iter, rel_tolerance=args.tol, restarts=args.restarts
    )


def _initial_direction(args, data: Dataset):
    if args.init == "ols":
        return None
    if args.init == "random":
        rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(99,)))
        return canonicalize(rng.standard_normal(data.d))
    return canonicalize(np.array([float(v) for v in args.init.split(",")]))


def _fit_pipeline(args, data: Dataset):
    """Shared fit logic: returns (fit, h, H, spheres)."""
    spheres = _spheres(args, data)
    grid = geometric_grid(args.grid_start, args.grid_ratio, args.grid_size)
    options = _simplex_options(args)
    if args.h is not None:
        h = args.h
    else:
        h, _ = select_h(
            data, spheres, grid,
            replicates=args.replicates, options=options, seed=args.seed,
        )
    fit = fit_theta(
        data, spheres, h,
        init=_initial_direction(args, data), options=options, seed=args.seed,
    )
    if args.H_value is not None:
        H = args.H_value
    else:
        H, _ = select_H(
            data, fit.theta, grid, replicates=args.replicates, seed=args.seed
        )
    return fit, h, H, spheres


def cmd_fit(args) -> int:
    data = _load_dataset(args)
    data, _ = _maybe_standardize(args, data)
    fit, h, H, spheres = _fit_pipeline(args, data)
    crit = criterion_total(data, fit.theta, h, spheres)
    doc = {
        "theta_hat": [float(c) for c in fit.theta.components],
        "h": h,
        "H": H,
        "criterion": fit.criterion,
        "degenerate_terms": crit.degenerate_terms,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "seed": args.seed,
        "rng": RNG_NAME,
        "config": _resolved_config(args),
    }
    _emit(doc, args.out)
    return 0


def _interval_machinery(args, train: Dataset, seed: int):
    """Returns (theta or None, h, H, interval_fn(x) -> (lo, hi, z))."""
    grid = geometric_grid(args.grid_start, args.grid_ratio, args.grid_size)
    if args.predictor == "index":
        fit, h, H, _ = _fit_pipeline(args, train)
        theta = fit.theta

        def interval(x):
            pi = prediction_interval(train, theta, H, x, args.alpha)
            return pi.lower, pi.upper, pi.index_value

        return theta, h, H, interval
    if args.predictor == "lag1":
        lag1 = Dataset(train.X[:, :1], train.Y)
        theta = Direction(np.array([1.0]))
        if args.H_value is not None:
            H = args.H_value
        else:
            H, _ = select_H(lag1, theta, grid, replicates=args.replicates, seed=seed)

        def interval(x):
            pi = prediction_interval(lag1, theta, H, np.asarray(x)[:1], args.alpha)
            return pi.lower, pi.upper, pi.index_value

        return None, None, H, interval
    # lag12: multivariate comparison baseline (full-covariate smoother).
    if args.H_value is not None:
        H = args.H_value
    else:

        def curve(boot, Hc, x_row, ys):
            return anw_cdf_curve_multi(boot, x_row, Hc, ys)

        H, _ = select_H(
            train, Direction(np.ones(train.d) / np.sqrt(train.d)), grid,
            replicates=args.replicates, seed=seed, estimator_curve=curve,
        )

    def interval(x):
        x = np.asarray(x, dtype=float)
        # Near the design boundary the vector moment constraint can be
        # infeasible at the selected H; widen locally until it is solvable.
        Hx = H
        for _ in range(6):
            try:
                lo = quantile_multi(train, x, Hx, args.alpha / 2.0)
                hi = quantile_multi(train, x, Hx, 1.0 - args.alpha / 2.0)
                return lo, hi, float("nan")
            except NumericalError:
                Hx *= 1.5
        raise NumericalError(
            f"two-lag smoother failed at {x} even after widening the bandwidth"
        )

    return None, None, H, interval


def cmd_predict_interval(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        raise ValidationError("--alpha must lie in (0, 1)")
    data = _load_dataset(args)

    if args.train_prefix is not None:
        if args.time_series:
            # Prefix counts raw series points; embedded train rows end at
            # target index train_prefix - 1 (0-based).
            train_rows = args.train_prefix - args.lags
        else:
            train_rows = args.train_prefix
        if train_rows < 1 or train_rows > data.n:
            raise ValidationError("--train-prefix leaves no usable training rows")
        train = data.take(range(train_rows))
    else:
        train = data

    train, scaling = _maybe_standardize(args, train)
    theta, h, H, interval_fn = _interval_machinery(args, train, args.seed)

    points = []
    if args.at:
        x = np.array([float(v) for v in args.at.split(",")])
        points.append((x, None))
    elif args.last_window:
        if not args.time_series:
            raise ValidationError("--last-window requires --time-series")
        series = load_series(args.data, args.y_col)
        x = series[-1 : -args.lags - 1 : -1].copy()
        points.append((x, None))
    else:
        k = args.validate_suffix
        if k < 0 or k > data.n:
            raise ValidationError("--validate-suffix out of range")
        for r in range(data.n - k, data.n):
            points.append((data.X[r], float(data.Y[r])))

    results = []
    lengths = []
    covered_count = 0
    for x, truth in points:
        x_eval = scaling.apply(x) if scaling is not None else x
        lo, hi, z = interval_fn(x_eval)
        rec = {"lower": lo, "upper": hi, "index_value": z}
        lengths.append(hi - lo)
        if truth is not None:
            rec["true"] = truth
            rec["covered"] = bool(lo <= truth <= hi)
            covered_count += rec["covered"]
        results.append(rec)

    doc = {
        "alpha": args.alpha,
        "predictor": args.predictor,
        "theta_hat": [float(c) for c in theta.components] if theta is not None else None,
        "h": h,
        "H": H,
        "intervals": results,
        "average_length": float(np.mean(lengths)) if lengths else None,
        "covered": covered_count if points and points[0][1] is not None else None,
        "seed": args.seed,
        "rng": RNG_NAME,
        "config": _resolved_config(args),
    }
    _emit(doc, args.out)
    return 0


def cmd_select_bandwidth(args) -> int:
    data = _load_dataset(args)
    data, _ = _maybe_standardize(args, data)
    spheres = _spheres(args, data)
    grid = geometric_grid(args.grid_start, args.grid_ratio, args.grid_size)
    options = _simplex_options(args)
    h, h_scores = select_h(
        data, spheres, grid, replicates=args.replicates, options=options, seed=args.seed
    )
    fit = fit_theta(data, spheres, h, options=options, seed=args.seed)
    H, H_scores = select_H(
        data, fit.theta, grid, replicates=args.replicates, seed=args.seed
    )
    doc = {
        "h": h,
        "H": H,
        "grid": [float(v) for v in grid.values],
        "h_scores": [None if np.isnan(s) else float(s) for s in h_scores],
        "H_scores": [None if np.isnan(s) else float(s) for s in H_scores],
        "theta_hat": [float(c) for c in fit.theta.components],
        "seed": args.seed,
        "rng": RNG_NAME,
        "config": _resolved_config(args),
    }
    _emit(doc, args.out)
    return 0


def _write_dataset_csv(data: Dataset, path: str) -> None:
    header = ",".join([f"x{j + 1}" for j in range(data.d)] + ["y"])
    rows = np.column_stack([data.X, data.Y])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_simulate(args) -> int:
    if args.emit_data:
        gen = gen_example1 if args.model == "example1" else gen_example2
        rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(0, 0)))
        data, theta_true = gen(args.n, rng)
        _write_dataset_csv(data, args.emit_data)
        doc = {
            "emitted": args.emit_data,
            "model": args.model,
            "n": args.n,
            "true_theta": [float(c) for c in theta_true.components],
            "seed": args.seed,
            "rng": RNG_NAME,
        }
        _emit(doc, args.out)
        return 0
    config = StudyConfig(
        model=args.model,
        n=args.n,
        replications=args.replications,
        seed=args.seed,
        sphere_mode=args.sphere_mode,
        sphere_low=args.sphere_low,
        sphere_high=args.sphere_high,
        sphere_points=args.sphere_points,
        sphere_radius=args.sphere_radius,
        bandwidth_policy=args.policy,
        h_multiplier=args.h_multiplier,
        fixed_h=args.h,
        fixed_H=args.H_value,
        grid_start=args.grid_start,
        grid_ratio=args.grid_ratio,
        grid_size=args.grid_size,
        boot_replicates=args.boot_replicates,
        compute_errors=not args.no_errors,
        n_jobs=args.jobs,
    )
    report = run_study(config)
    _emit(report.to_dict(), args.out)
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "predict-interval": cmd_predict_interval,
    "select-bandwidth": cmd_select_bandwidth,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
