"""Synthetic data generators, evaluation metrics and the replicated study harness.

Model "example1": Y = b'X + eps with b = (1, 2, 0, 3)/sqrt(14), so Y | X is
N(b'X, 1) and the index direction is exact.  Model "example2":
Y = (sin X_1 + ... + sin X_4)/2 + eps with direction (1,1,1,1)/2, where the
single index is only the least-squares approximation.  Both draw X entries
and eps as independent standard normals.

All randomness flows through numpy's default PCG64 generator; the study
harness derives one independent stream per (replication, purpose) from the
master seed, so results are reproducible and independent of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from .anw import anw_cdf_curve
from .bandwidth import geometric_grid, select_H, select_h
from .criterion import SphereSet, make_data_spheres, make_sphere_grid
from .data import Dataset
from .directions import Direction, as_unit_vector
from .errors import NumericalError, ValidationError
from .kernels import EPANECHNIKOV
from .local_linear import local_linear_cdf_curve
from .optimize import SimplexOptions, fit_theta

RNG_NAME = "numpy-pcg64"

ERROR_GRID_STEP = 0.05

_THETA_EX1 = np.array([1.0, 2.0, 0.0, 3.0]) / math.sqrt(14.0)
_THETA_EX2 = np.array([0.5, 0.5, 0.5, 0.5])

# Purpose tags for per-replication stream splitting.
_P_DATA, _P_SELECT_H, _P_FIT, _P_SELECT_HH, _P_TRUTH = 0, 1, 2, 3, 4


def _stream(seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _stream_seed(seed: int, *key) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1)[0])


def std_normal_cdf(x):
    """Phi, exact to machine precision."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def gen_example1(n: int, rng: np.random.Generator, noise_sd: float = 1.0):
    """Linear single-index model; returns (Dataset, true Direction)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    X = rng.standard_normal((n, 4))
    eps = rng.standard_normal(n) * noise_sd
    return Dataset(X, X @ _THETA_EX1 + eps), Direction(_THETA_EX1.copy())


def gen_example2(n: int, rng: np.random.Generator, noise_sd: float = 1.0):
    """Additive sine model; the stated direction is the approximation target."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    X = rng.standard_normal((n, 4))
    eps = rng.standard_normal(n) * noise_sd
    return Dataset(X, 0.5 * np.sin(X).sum(axis=1) + eps), Direction(_THETA_EX2.copy())


def true_cdf_example1(theta_true, z: float, y) -> float:
    """P(Y <= y | index = z) for the linear model: Phi(y - z)."""
    y = np.asarray(y, dtype=float)
    out = std_normal_cdf(y - z)
    return out


def true_cdf_example2_curve(theta_true, z: float, y_values, mc_size: int, rng: np.random.Generator):
    """Monte Carlo conditional CDF for the sine model, shared draws across y.

    X given index = z decomposes exactly as z*theta + (I - theta theta')*xi
    with xi standard normal; conditionally on X the response is normal around
    the sine mean.  Returns (values, standard errors).
    """
    if mc_size < 10_000:
        raise ValidationError("mc_size must be at least 10^4")
    v = as_unit_vector(theta_true)
    xi = rng.standard_normal((mc_size, v.size))
    X = z * v[None, :] + xi - np.outer(xi @ v, v)
    mean = 0.5 * np.sin(X).sum(axis=1)
    y_values = np.asarray(y_values, dtype=float)
    probs = std_normal_cdf(y_values[None, :] - mean[:, None])
    values = probs.mean(axis=0)
    stderr = probs.std(axis=0, ddof=1) / math.sqrt(mc_size)
    return values, stderr


def true_cdf_example2(theta_true, z: float, y: float, mc_size: int, rng: np.random.Generator):
    """Scalar wrapper around the curve version; returns (value, stderr)."""
    values, stderr = true_cdf_example2_curve(theta_true, z, [y], mc_size, rng)
    return float(values[0]), float(stderr[0])


def default_error_grid(data: Dataset, theta):
    """Grid ranges for the error metric: index values clipped to [-2, 2] and
    to the central 90% of the observed index; responses to their central 90%."""
    z = data.X @ as_unit_vector(theta)
    z_lo = max(-2.0, float(np.quantile(z, 0.05)))
    z_hi = min(2.0, float(np.quantile(z, 0.95)))
    y_lo = float(np.quantile(data.Y, 0.05))
    y_hi = float(np.quantile(data.Y, 0.95))
    if not (z_lo < z_hi and y_lo < y_hi):
        raise ValidationError("empty error grid (degenerate index or response range)")
    return (z_lo, z_hi), (y_lo, y_hi)


def _grid(lo: float, hi: float) -> np.ndarray:
    pts = np.arange(lo, hi + 1e-9, ERROR_GRID_STEP)
    if pts.size == 0:
        raise ValidationError(f"empty grid for range [{lo}, {hi}]")
    return pts


def avg_abs_error(
    data: Dataset,
    theta_hat,
    H: float,
    truth,
    z_range,
    y_range,
    estimator: str = "local-linear",
    kernel=EPANECHNIKOV,
) -> float:
    """Mean absolute deviation of the fitted conditional CDF from `truth`.

    `truth(z, y_array)` must return the reference CDF values along y.  The
    grid spacing is 0.05 in both coordinates.
    """
    z_grid = _grid(*z_range)
    y_grid = _grid(*y_range)
    if estimator == "local-linear":
        curve = lambda z: local_linear_cdf_curve(data, theta_hat, H, z, y_grid, kernel=kernel)
    elif estimator == "anw":
        curve = lambda z: anw_cdf_curve(data, theta_hat, H, z, y_grid, kernel=kernel)
    else:
        raise ValidationError(f"unknown estimator {estimator!r}")
    total = 0.0
    for z in z_grid:
        est = curve(float(z))
        ref = np.asarray(truth(float(z), y_grid), dtype=float)
        total += float(np.sum(np.abs(est - ref)))
    return total / (z_grid.size * y_grid.size)


@dataclass(frozen=True)
class StudyConfig:
    model: str = "example1"
    n: int = 200
    replications: int = 10
    seed: int = 0
    # Sphere configuration (grid mode mirrors the four-covariate setup).
    sphere_mode: str = "grid"
    sphere_low: float = -1.5
    sphere_high: float = 1.5
    sphere_points: int = 5
    sphere_radius: float = 1.0
    # Bandwidth policy: bootstrap selection or fixed values.
    bandwidth_policy: str = "auto"
    h_multiplier: float = 1.0
    fixed_h: float | None = None
    fixed_H: float | None = None
    grid_start: float = 0.1
    grid_ratio: float = 1.2
    grid_size: int = 15
    boot_replicates: int = 20
    # Simplex budgets: full for the final fit, reduced inside the bootstrap.
    simplex: SimplexOptions = field(default_factory=SimplexOptions)
    boot_simplex: SimplexOptions = field(
        default_factory=lambda: SimplexOptions(
            max_iterations=200, rel_tolerance=1e-4, restarts=0
        )
    )
    compute_errors: bool = True
    error_estimator: str = "local-linear"
    truth_mc_size: int = 10_000
    n_jobs: int = 1

    def __post_init__(self):
        if self.model not in ("example1", "example2"):
            raise ValidationError(f"unknown model {self.model!r}")
        if self.replications < 1:
            raise ValidationError("replications must be >= 1")
        if self.bandwidth_policy not in ("auto", "fixed"):
            raise ValidationError("bandwidth_policy must be 'auto' or 'fixed'")
        if self.bandwidth_policy == "auto" and self.h_multiplier not in (0.7, 1.0, 1.5):
            raise ValidationError("h_multiplier must be one of 0.7, 1.0, 1.5")
        if self.bandwidth_policy == "fixed" and (
            self.fixed_h is None or self.fixed_H is None
        ):
            raise ValidationError("fixed policy needs fixed_h and fixed_H")
        if self.sphere_mode not in ("grid", "data"):
            raise ValidationError("sphere_mode must be 'grid' or 'data'")


@dataclass(frozen=True)
class ReplicationRecord:
    replication: int
    theta_hat: tuple
    inner_product: float
    h: float
    H: float
    err_fitted: float | None
    err_true: float | None


@dataclass(frozen=True)
class StudyReport:
    config: StudyConfig
    records: tuple
    failures: tuple
    summary: dict
    rng_name: str = RNG_NAME

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        return {
            "config": cfg,
            "rng": self.rng_name,
            "records": [asdict(r) for r in self.records],
            "failures": list(self.failures),
            "summary": self.summary,
        }


def _spheres_for(config: StudyConfig, data: Dataset) -> SphereSet:
    if config.sphere_mode == "data":
        return make_data_spheres(data, config.sphere_radius)
    return make_sphere_grid(
        config.sphere_low,
        config.sphere_high,
        config.sphere_points,
        data.d,
        config.sphere_radius,
    )


def _truth_function(config: StudyConfig, theta_true, r: int):
    if config.model == "example1":
        return lambda z, ys: true_cdf_example1(theta_true, z, ys)
    rng = _stream(config.seed, r, _P_TRUTH)
    memo: dict = {}

    def truth(z, ys):
        key = float(z)
        if key not in memo:
            memo[key], _ = true_cdf_example2_curve(
                theta_true, key, ys, config.truth_mc_size, rng
            )
        return memo[key]

    return truth


def _run_replication(config: StudyConfig, r: int) -> ReplicationRecord:
    gen = gen_example1 if config.model == "example1" else gen_example2
    data, theta_true = gen(config.n, _stream(config.seed, r, _P_DATA))
    spheres = _spheres_for(config, data)
    grid = geometric_grid(config.grid_start, config.grid_ratio, config.grid_size)

    if config.bandwidth_policy == "fixed":
        h, H = float(config.fixed_h), float(config.fixed_H)
        fit = fit_theta(
            data, spheres, h, options=config.simplex,
            seed=_stream_seed(config.seed, r, _P_FIT),
        )
    else:
        h_sel, _ = select_h(
            data, spheres, grid,
            replicates=config.boot_replicates,
            options=config.boot_simplex,
            seed=_stream_seed(config.seed, r, _P_SELECT_H),
        )
        h = h_sel * config.h_multiplier
        fit = fit_theta(
            data, spheres, h, options=config.simplex,
            seed=_stream_seed(config.seed, r, _P_FIT),
        )
        H, _ = select_H(
            data, fit.theta, grid,
            replicates=config.boot_replicates,
            seed=_stream_seed(config.seed, r, _P_SELECT_HH),
        )

    inner = float(theta_true.components @ fit.theta.components)
    err_fitted = err_true = None
    if config.compute_errors:
        truth = _truth_function(config, theta_true, r)
        z_range, y_range = default_error_grid(data, theta_true)
        err_fitted = avg_abs_error(
            data, fit.theta, H, truth, z_range, y_range,
            estimator=config.error_estimator,
        )
        err_true = avg_abs_error(
            data, theta_true, H, truth, z_range, y_range,
            estimator=config.error_estimator,
        )
    return ReplicationRecord(
        replication=r,
        theta_hat=tuple(float(c) for c in fit.theta.components),
        inner_product=inner,
        h=float(h),
        H=float(H),
        err_fitted=err_fitted,
        err_true=err_true,
    )


_WORKER_LIMITS = None


def _limit_worker_threads():
    """Pin BLAS to one thread inside worker processes; the processes are the
    parallelism and nested pools only contend on a small machine."""
    global _WORKER_LIMITS
    try:
        from threadpoolctl import threadpool_limits

        _WORKER_LIMITS = threadpool_limits(limits=1)
    except ImportError:
        pass


def _replication_guard(args):
    config, r = args
    try:
        return _run_replication(config, r)
    except (NumericalError, ValidationError) as exc:
        return (r, f"{type(exc).__name__}: {exc}")


def _five_numbers(values) -> dict:
    v = np.asarray(values, dtype=float)
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {
        "min": float(q[0]),
        "q1": float(q[1]),
        "median": float(q[2]),
        "q3": float(q[3]),
        "max": float(q[4]),
    }


def run_study(config: StudyConfig) -> StudyReport:
    """Run the replicated study; aborts if more than 20% of replications fail."""
    jobs = [(config, r) for r in range(config.replications)]
    if config.n_jobs > 1 and config.replications > 1:
        with ProcessPoolExecutor(
            max_workers=config.n_jobs, initializer=_limit_worker_threads
        ) as pool:
            outcomes = list(pool.map(_replication_guard, jobs))
    else:
        outcomes = [_replication_guard(job) for job in jobs]

    records = tuple(o for o in outcomes if isinstance(o, ReplicationRecord))
    failures = tuple(o for o in outcomes if not isinstance(o, ReplicationRecord))
    if len(failures) > 0.2 * config.replications:
        raise NumericalError(
            f"{len(failures)} of {config.replications} replications failed: "
            f"{failures[0][1]}"
        )
    if not records:
        raise NumericalError("no successful replications")

    summary = {
        "inner_product": _five_numbers([rec.inner_product for rec in records]),
        "h": _five_numbers([rec.h for rec in records]),
        "H": _five_numbers([rec.H for rec in records]),
    }
    if config.compute_errors:
        summary["err_fitted"] = _five_numbers([rec.err_fitted for rec in records])
        summary["err_true"] = _five_numbers([rec.err_true for rec in records])
    return StudyReport(config=config, records=records, failures=failures, summary=summary)
