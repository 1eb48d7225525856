"""Adjusted Nadaraya-Watson conditional CDF estimator and quantile intervals.

The estimator reweights in-window observations with empirical-likelihood
style multinomial weights p_i that maximize sum log p_i subject to

    p_i >= 0,   sum p_i = 1,   sum p_i (z_i - z) K_H(z_i - z) = 0,

which gives p_i proportional to 1 / (1 + lambda (z_i - z) K_H(z_i - z)).
The moment condition kills the first-order design bias term while the
weights stay nonnegative, so the resulting CDF estimate is monotone in y and
lives in [0, 1] without clamping.  Here K_H(u) = K(u / H) and the weights are
supported on the kernel window (p_i = 0 outside it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .directions import as_unit_vector
from .errors import BracketFailure, ExtrapolationError, NumericalError, ValidationError
from .kernels import EPANECHNIKOV, Kernel

# Points whose |(z_i - z) K_H| falls at or below this count as "at the
# evaluation point" for the moment constraint.
_T_TOL = 1e-14
_RESIDUAL_TOL = 1e-8
_MAX_BISECT = 200


@dataclass(frozen=True)
class AnwWeights:
    """Constraint-adjusted weights: p sums to 1, supported on the kernel window."""

    p: np.ndarray
    lam: float
    constraint_residual: float


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float
    level: float
    index_value: float


def _solve_lambda(t: np.ndarray) -> float:
    """Root of g(lam) = sum t_i / (1 + lam t_i) on the interval keeping all
    factors positive.  g is strictly decreasing there and spans +inf..-inf."""
    t_max = float(t.max())
    t_min = float(t.min())
    if not (t_max > _T_TOL and t_min < -_T_TOL):
        raise BracketFailure(
            "moment constraint is one-sided (all in-window points on the same "
            "side of the evaluation point); widen the bandwidth"
        )
    lo = -1.0 / t_max
    hi = -1.0 / t_min

    def g(lam):
        return float(np.sum(t / (1.0 + lam * t)))

    # Shrink endpoints slightly into the open interval; g(lo) > 0 > g(hi).
    width = hi - lo
    lo += 1e-12 * width
    hi -= 1e-12 * width
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val = g(mid)
        if val == 0.0:
            return mid
        if val > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def anw_weights(index_values, z: float, H: float, kernel: Kernel = EPANECHNIKOV) -> AnwWeights:
    """Empirical-likelihood weights at index value z with bandwidth H."""
    if H <= 0:
        raise ValidationError(f"bandwidth must be positive, got {H}")
    zi = np.asarray(index_values, dtype=float)
    kv = kernel((zi - z) / H)
    window = kv > 0.0
    if not np.any(window):
        raise ExtrapolationError(
            f"no sample index values within the kernel window at z={z}"
        )
    t_full = (zi - z) * kv
    tw = t_full[window]
    if np.max(np.abs(tw)) <= _T_TOL:
        lam = 0.0
        pw = np.full(tw.size, 1.0 / tw.size)
    else:
        lam = _solve_lambda(tw)
        q = 1.0 / (1.0 + lam * tw)
        pw = q / q.sum()
    p = np.zeros(zi.size)
    p[window] = pw
    residual = abs(float(pw @ tw))
    if residual > _RESIDUAL_TOL:
        raise NumericalError(
            f"moment constraint residual {residual:.3e} exceeds {_RESIDUAL_TOL}"
        )
    return AnwWeights(p=p, lam=float(lam), constraint_residual=residual)


class _StepCdf:
    """Weighted step function: responses sorted ascending with cumulative
    weight mass.  Evaluation reads the cumulative sum, so monotonicity, the
    [0, 1] range and the closed-inequality tie convention are structurally
    exact (cumulative sums of nonnegative terms cannot decrease)."""

    def __init__(self, ys_sorted: np.ndarray, cum: np.ndarray):
        self.ys = ys_sorted
        self.ratios = cum / cum[-1]

    def cdf(self, y):
        idx = np.searchsorted(self.ys, y, side="right") - 1
        scalar = np.isscalar(idx)
        idx = np.atleast_1d(idx)
        out = np.where(idx >= 0, self.ratios[np.maximum(idx, 0)], 0.0)
        return float(out[0]) if scalar else out

    def quantile(self, p: float) -> float:
        pos = int(np.searchsorted(self.ratios, p, side="left"))
        if pos >= self.ys.size:
            raise NumericalError("no response value reaches the requested CDF level")
        return float(self.ys[pos])


def _index_smoother(data: Dataset, theta, H: float, z: float, kernel: Kernel) -> _StepCdf:
    v = as_unit_vector(theta)
    zi = data.X @ v
    w = anw_weights(zi, z, H, kernel=kernel)
    omega = w.p * kernel((zi - z) / H)
    order = np.argsort(data.Y, kind="stable")
    return _StepCdf(data.Y[order], np.cumsum(omega[order]))


def anw_cdf(data: Dataset, theta, H: float, z: float, y: float, kernel: Kernel = EPANECHNIKOV) -> float:
    """Adjusted Nadaraya-Watson estimate of P(Y <= y | index = z)."""
    return float(_index_smoother(data, theta, H, z, kernel).cdf(float(y)))


def anw_cdf_curve(data: Dataset, theta, H: float, z: float, y_values, kernel: Kernel = EPANECHNIKOV) -> np.ndarray:
    """Vector of estimates over y_values, sharing one weight computation."""
    step = _index_smoother(data, theta, H, z, kernel)
    return step.cdf(np.asarray(y_values, dtype=float))


def quantile(data: Dataset, theta, H: float, z: float, p: float, kernel: Kernel = EPANECHNIKOV) -> float:
    """Generalized inverse: smallest observed y with estimated CDF >= p."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"quantile level must lie in (0, 1), got {p}")
    return _index_smoother(data, theta, H, z, kernel).quantile(p)


def prediction_interval(
    data: Dataset,
    theta,
    H: float,
    x,
    alpha: float,
    kernel: Kernel = EPANECHNIKOV,
) -> PredictionInterval:
    """Two-sided quantile interval [q(alpha/2), q(1 - alpha/2)] at index theta'x."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    v = as_unit_vector(theta)
    x = np.asarray(x, dtype=float)
    z = float(x @ v)
    lower = quantile(data, theta, H, z, alpha / 2.0, kernel=kernel)
    upper = quantile(data, theta, H, z, 1.0 - alpha / 2.0, kernel=kernel)
    return PredictionInterval(lower=lower, upper=upper, level=1.0 - alpha, index_value=z)


# ---------------------------------------------------------------------------
# Multivariate variant (comparison baseline for full-covariate smoothing).
# ---------------------------------------------------------------------------


def _product_kernel(U: np.ndarray, kernel: Kernel) -> np.ndarray:
    vals = kernel(U)
    return np.prod(vals, axis=1)


def anw_weights_multi(X, x, H: float, kernel: Kernel = EPANECHNIKOV) -> AnwWeights:
    """Weights with a vector moment constraint sum p_i (x_i - x) K_H = 0.

    Solved by damped Newton on the empirical-likelihood dual; used only for
    the multivariate comparison smoother, not the index estimator.
    """
    if H <= 0:
        raise ValidationError(f"bandwidth must be positive, got {H}")
    X = np.asarray(X, dtype=float)
    x = np.asarray(x, dtype=float)
    diff = X - x[None, :]
    kv = _product_kernel(diff / H, kernel)
    window = kv > 0.0
    if not np.any(window):
        raise ExtrapolationError("no sample points within the product-kernel window")
    T = diff[window] * kv[window, None]
    m = T.shape[1]
    if np.max(np.abs(T)) <= _T_TOL:
        lam = np.zeros(m)
        q = np.ones(T.shape[0])
    else:
        # The dual problem minimizes the convex R(lam) = -sum log(1 + T lam)
        # over the region keeping all factors positive; the constraint root is
        # its stationary point.  Damped Newton with an Armijo line search
        # converges whenever the zero vector lies inside the convex hull of
        # the t_i; divergence of lam signals an infeasible (one-sided) hull.
        lam = np.zeros(m)
        denom = 1.0 + T @ lam
        for _ in range(200):
            q = 1.0 / denom
            grad = -(T.T @ q)
            if float(np.max(np.abs(grad))) / q.sum() <= _RESIDUAL_TOL * 1e-2:
                break
            hess = (T * (q * q)[:, None]).T @ T
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                raise BracketFailure(
                    "moment constraint directions are degenerate; widen the bandwidth"
                ) from None
            slope = float(grad @ step)
            r0 = -float(np.sum(np.log(denom)))
            scale = 1.0
            while scale > 1e-12:
                cand = denom + scale * (T @ step)
                if np.all(cand > 1e-300) and -float(
                    np.sum(np.log(cand))
                ) <= r0 + 1e-4 * scale * slope:
                    break
                scale *= 0.5
            else:
                raise BracketFailure(
                    "moment constraint appears infeasible at this point; "
                    "widen the bandwidth"
                )
            lam = lam + scale * step
            denom = 1.0 + T @ lam
            if float(np.linalg.norm(lam)) > 1e12:
                raise BracketFailure(
                    "moment constraint appears infeasible at this point; "
                    "widen the bandwidth"
                )
        q = 1.0 / denom
    pw = q / q.sum()
    p = np.zeros(X.shape[0])
    p[window] = pw
    residual = float(np.max(np.abs(pw @ T))) if T.size else 0.0
    if residual > _RESIDUAL_TOL:
        raise NumericalError(
            f"moment constraint residual {residual:.3e} exceeds {_RESIDUAL_TOL}"
        )
    return AnwWeights(p=p, lam=float(np.linalg.norm(lam)), constraint_residual=residual)


def _multi_smoother(data: Dataset, x, H: float, kernel: Kernel) -> _StepCdf:
    x = np.asarray(x, dtype=float)
    w = anw_weights_multi(data.X, x, H, kernel=kernel)
    omega = w.p * _product_kernel((data.X - x[None, :]) / H, kernel)
    order = np.argsort(data.Y, kind="stable")
    return _StepCdf(data.Y[order], np.cumsum(omega[order]))


def anw_cdf_curve_multi(data: Dataset, x, H: float, y_values, kernel: Kernel = EPANECHNIKOV) -> np.ndarray:
    """Multivariate smoother analogue of anw_cdf_curve at covariate point x."""
    step = _multi_smoother(data, x, H, kernel)
    return step.cdf(np.asarray(y_values, dtype=float))


def quantile_multi(data: Dataset, x, H: float, p: float, kernel: Kernel = EPANECHNIKOV) -> float:
    """Step-function inverse for the multivariate smoother."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"quantile level must lie in (0, 1), got {p}")
    return _multi_smoother(data, x, H, kernel).quantile(p)
