"""Bootstrap rule-of-thumb bandwidth selection.

Both selectors resample responses from a fitted linear model, so the
resampled world has a known index direction (the normalized OLS slope) and a
known conditional CDF (a shifted residual ECDF).  The search bandwidth h is
scored by how well the direction search recovers that known direction; the
estimation bandwidth H is scored by how well the adjusted Nadaraya-Watson
estimator recovers the known conditional CDF.

Every (candidate, replicate) cell draws from an independent generator seeded
by (seed, candidate index, replicate index), so serial and parallel runs
agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anw import anw_cdf_curve
from .data import Dataset
from .directions import as_unit_vector, canonicalize
from .errors import NumericalError, ValidationError
from .kernels import EPANECHNIKOV, Kernel
from .optimize import SimplexOptions, fit_theta


@dataclass(frozen=True)
class LinearFit:
    """OLS fit of Y on (1, X) with centered residuals."""

    beta0: float
    beta: np.ndarray
    residuals: np.ndarray
    sigma: float

    def fitted(self, X) -> np.ndarray:
        return self.beta0 + np.asarray(X, dtype=float) @ self.beta


@dataclass(frozen=True)
class BandwidthGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValidationError("bandwidth grid must be a nonempty 1-d sequence")
        if np.any(v <= 0):
            raise ValidationError("bandwidth grid values must be positive")
        if np.any(np.diff(v) <= 0):
            raise ValidationError("bandwidth grid must be strictly increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class BandwidthPair:
    h: float
    H: float
    h_scores: np.ndarray
    H_scores: np.ndarray


def geometric_grid(start: float = 0.1, ratio: float = 1.2, size: int = 15) -> BandwidthGrid:
    """Candidate bandwidths start * ratio**i for i = 0..size-1."""
    if start <= 0 or ratio <= 1 or size < 1:
        raise ValidationError("need start > 0, ratio > 1, size >= 1")
    return BandwidthGrid(start * ratio ** np.arange(size))


def ols_fit(data: Dataset) -> LinearFit:
    """Least-squares fit of the linear model Y = b0 + b'X + eps."""
    n, d = data.n, data.d
    if n <= d + 1:
        raise ValidationError(f"OLS needs n > d + 1 (n={n}, d={d})")
    design = np.column_stack([np.ones(n), data.X])
    coef, _, rank, _ = np.linalg.lstsq(design, data.Y, rcond=None)
    if rank < d + 1:
        raise ValidationError("rank-deficient design matrix")
    resid = data.Y - design @ coef
    resid = resid - resid.mean()
    return LinearFit(
        beta0=float(coef[0]),
        beta=coef[1:],
        residuals=resid,
        sigma=float(resid.std(ddof=1)),
    )


def bootstrap_sample(fit: LinearFit, data: Dataset, rng: np.random.Generator) -> Dataset:
    """Residual bootstrap: X unchanged, Y* = fitted + resampled centered residual."""
    idx = rng.integers(0, data.n, size=data.n)
    return Dataset(data.X, fit.fitted(data.X) + fit.residuals[idx])


def _cell_rng(seed: int, candidate: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(candidate, replicate))
    )


def _cell_seed(seed: int, candidate: int, replicate: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(candidate, replicate, 1))
    return int(ss.generate_state(1)[0])


def select_h(
    data: Dataset,
    spheres,
    grid: BandwidthGrid,
    replicates: int = 20,
    options: SimplexOptions | None = None,
    seed: int = 0,
    kernel: Kernel = EPANECHNIKOV,
):
    """Pick the search bandwidth by bootstrap recovery of the OLS direction.

    For every candidate h, `replicates` resampled datasets are refit and the
    mean squared distance between the recovered direction and the normalized
    OLS slope is the candidate's score.  Returns (h, scores); candidates whose
    replicates all fail are excluded (score NaN).
    """
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    fit = ols_fit(data)
    target = canonicalize(fit.beta).components
    scores = np.full(len(grid), np.nan)
    for ci, h in enumerate(grid):
        vals = []
        for b in range(replicates):
            boot = bootstrap_sample(fit, data, _cell_rng(seed, ci, b))
            try:
                refit = fit_theta(
                    boot,
                    spheres,
                    float(h),
                    options=options,
                    seed=_cell_seed(seed, ci, b),
                    kernel=kernel,
                )
            except (NumericalError, ValidationError):
                continue
            diff = refit.theta.components - target
            vals.append(float(diff @ diff))
        if vals:
            scores[ci] = float(np.mean(vals))
    if np.all(np.isnan(scores)):
        raise NumericalError("all bandwidth candidates failed in select_h")
    best = int(np.nanargmin(scores))
    return float(grid.values[best]), scores


def _residual_cdf(fit: LinearFit):
    """ECDF-based truth G*(y|x) = P(eps <= y - fitted(x)) under resampling."""
    sorted_resid = np.sort(fit.residuals)
    n = sorted_resid.size

    def g(y_values, x_row):
        mu = float(fit.beta0 + x_row @ fit.beta)
        return np.searchsorted(sorted_resid, np.asarray(y_values) - mu, side="right") / n

    return g


def _eval_rows(data: Dataset, theta, count: int = 20) -> np.ndarray:
    """Deterministic evaluation rows: evenly spaced index order statistics."""
    z = data.X @ as_unit_vector(theta)
    order = np.argsort(z, kind="stable")
    if data.n <= count:
        return order
    pos = np.unique(np.round(np.linspace(0, data.n - 1, count)).astype(int))
    return order[pos]


def select_H(
    data: Dataset,
    theta,
    grid: BandwidthGrid,
    replicates: int = 20,
    seed: int = 0,
    kernel: Kernel = EPANECHNIKOV,
    estimator_curve=None,
):
    """Pick the estimation bandwidth by bootstrap recovery of a known CDF.

    Under the residual bootstrap the conditional CDF of Y* given X = x is the
    shifted residual ECDF.  Each candidate H is scored by the mean squared
    deviation of the adjusted Nadaraya-Watson estimate (computed on the
    resampled data along `theta`) from that truth, over 20 evaluation rows
    and 20 response points spanning the central 90% of Y*.

    `estimator_curve(boot, H, x_row, y_values) -> array` may override the
    estimator under evaluation (used for the multivariate comparison
    baseline); the default smooths along the index theta'x.
    """
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    fit = ols_fit(data)
    truth = _residual_cdf(fit)
    rows = _eval_rows(data, theta)
    v = as_unit_vector(theta)

    if estimator_curve is None:

        def estimator_curve(boot, H, x_row, y_values):
            return anw_cdf_curve(boot, v, H, float(x_row @ v), y_values, kernel=kernel)

    scores = np.full(len(grid), np.nan)
    for ci, H in enumerate(grid):
        rep_scores = []
        for b in range(replicates):
            boot = bootstrap_sample(fit, data, _cell_rng(seed, ci, b))
            lo, hi = np.quantile(boot.Y, [0.05, 0.95])
            y_grid = np.linspace(lo, hi, 20)
            sq = []
            for r in rows:
                x_row = data.X[r]
                try:
                    est = estimator_curve(boot, float(H), x_row, y_grid)
                except NumericalError:
                    continue
                diff = est - truth(y_grid, x_row)
                sq.append(float(np.mean(diff * diff)))
            if sq:
                rep_scores.append(float(np.mean(sq)))
        if rep_scores:
            scores[ci] = float(np.mean(rep_scores))
    if np.all(np.isnan(scores)):
        raise NumericalError("all bandwidth candidates failed in select_H")
    best = int(np.nanargmin(scores))
    return float(grid.values[best]), scores
