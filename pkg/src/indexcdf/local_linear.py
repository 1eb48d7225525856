"""Local linear conditional CDF estimators on a scalar index.

Two variants of the same construction: a leave-two-out estimator evaluated at
sample index values (used inside the direction-search criterion), and a
full-sample estimator evaluated at arbitrary points.  Both are ratios of
kernel-weighted indicator sums; any common scale factor on the weights
cancels, so the internal computation drops the 1/(m h) moment normalizer and
works with plain sums.

Degenerate neighbourhoods are resolved per a fixed fallback ladder: if the
local-linear weight sum (the scale-free quantity S0*S2 - S1^2 built from
unnormalized kernel moment sums) is <= 1e-12, fall back to Nadaraya-Watson
weights; if the kernel mass itself is <= 1e-12, fall back to the empirical
CDF of the included responses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is expected to be present
    HAVE_NUMBA = False

from .data import Dataset
from .directions import as_unit_vector
from .errors import ValidationError
from .kernels import EPANECHNIKOV, Kernel

# Threshold on the unnormalized local-linear weight sum below which the
# neighbourhood is treated as degenerate.  Fixed on the unnormalized scale so
# normalized and unnormalized pipelines classify identically.
DEGENERATE_TOL = 1e-12

FALLBACK_NONE = "none"
FALLBACK_NW = "nadaraya_watson"
FALLBACK_ECDF = "global_ecdf"


@dataclass(frozen=True)
class LocalLinearWeights:
    """Kernel moment sums and the induced local-linear weights.

    t0, t1, t2 are the normalized moment sums (1/(m h)) * sum K(u) u^k over
    the included points; w[k] = K(u_k) * (t2 - u_k * t1).
    """

    t0: float
    t1: float
    t2: float
    w: np.ndarray
    included: np.ndarray


@dataclass(frozen=True)
class CdfEstimate:
    """A conditional CDF value with degeneracy diagnostics.

    `value` is clamped to [0, 1]; `raw` keeps the unclamped ratio.
    `effective_support` counts included points with nonzero kernel weight.
    """

    value: float
    effective_support: int
    fallback_used: str
    raw: float


def moment_sums(index_values, center: float, h: float, kernel: Kernel = EPANECHNIKOV) -> LocalLinearWeights:
    """Normalized kernel moment sums t_k and local-linear weights at `center`.

    u_k = (center - z_k) / h; t_k = (1/(m h)) sum K(u_k) u_k^k with m the
    number of index values.
    """
    if h <= 0:
        raise ValidationError(f"bandwidth must be positive, got {h}")
    z = np.asarray(index_values, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValidationError("index_values must be a nonempty 1-d sequence")
    m = z.size
    u = (center - z) / h
    k = kernel(u)
    norm = 1.0 / (m * h)
    t0 = float(np.sum(k) * norm)
    t1 = float(np.sum(k * u) * norm)
    t2 = float(np.sum(k * u * u) * norm)
    w = k * (t2 - u * t1)
    return LocalLinearWeights(t0=t0, t1=t1, t2=t2, w=w, included=np.arange(m))


def _ratio_from_window(k, u, indic, m_total: int) -> CdfEstimate:
    """CDF ratio from kernel values, scaled offsets and response indicators.

    Works on unnormalized sums; applies the documented fallback ladder.
    """
    s0 = float(np.sum(k))
    s1 = float(np.sum(k * u))
    ku2 = k * u * u
    s2 = float(np.sum(ku2))
    denom = s0 * s2 - s1 * s1
    support = int(np.count_nonzero(k))
    if denom > DEGENERATE_TOL:
        a0 = float(np.sum(k * indic))
        a1 = float(np.sum(k * u * indic))
        raw = (s2 * a0 - s1 * a1) / denom
        return CdfEstimate(
            value=min(1.0, max(0.0, raw)),
            effective_support=support,
            fallback_used=FALLBACK_NONE,
            raw=raw,
        )
    if s0 > DEGENERATE_TOL:
        raw = float(np.sum(k * indic)) / s0
        return CdfEstimate(
            value=min(1.0, max(0.0, raw)),
            effective_support=support,
            fallback_used=FALLBACK_NW,
            raw=raw,
        )
    raw = float(np.mean(indic)) if m_total > 0 else 0.0
    return CdfEstimate(
        value=min(1.0, max(0.0, raw)),
        effective_support=support,
        fallback_used=FALLBACK_ECDF,
        raw=raw,
    )


def loo2_cdf(
    data: Dataset,
    theta,
    h: float,
    i: int,
    j: int,
    y: float,
    kernel: Kernel = EPANECHNIKOV,
) -> CdfEstimate:
    """Leave-two-out local linear estimate of P(Y <= y | index = theta'X_i).

    Points i and j are both excluded from the smoothing sums.
    """
    if h <= 0:
        raise ValidationError(f"bandwidth must be positive, got {h}")
    n = data.n
    if not (0 <= i < n and 0 <= j < n):
        raise ValidationError(f"indices ({i}, {j}) out of range for n={n}")
    if i == j:
        raise ValidationError("leave-two-out requires i != j")
    if n < 3:
        raise ValidationError("leave-two-out needs n >= 3")
    v = as_unit_vector(theta)
    z = data.X @ v
    keep = np.ones(n, dtype=bool)
    keep[i] = False
    keep[j] = False
    u = (z[i] - z[keep]) / h
    k = kernel(u)
    indic = (data.Y[keep] <= y).astype(float)
    return _ratio_from_window(k, u, indic, m_total=n - 2)


def local_linear_cdf_at(
    data: Dataset,
    theta,
    h: float,
    z: float,
    y: float,
    kernel: Kernel = EPANECHNIKOV,
) -> CdfEstimate:
    """Full-sample local linear estimate of P(Y <= y | index = z)."""
    if h <= 0:
        raise ValidationError(f"bandwidth must be positive, got {h}")
    v = as_unit_vector(theta)
    zi = data.X @ v
    u = (z - zi) / h
    k = kernel(u)
    indic = (data.Y <= y).astype(float)
    return _ratio_from_window(k, u, indic, m_total=data.n)


def local_linear_cdf(
    data: Dataset,
    theta,
    h: float,
    x,
    y: float,
    kernel: Kernel = EPANECHNIKOV,
) -> CdfEstimate:
    """Full-sample local linear estimate of P(Y <= y | index = theta'x)."""
    v = as_unit_vector(theta)
    x = np.asarray(x, dtype=float)
    if x.shape != (data.d,):
        raise ValidationError(f"x must have shape ({data.d},), got {x.shape}")
    return local_linear_cdf_at(data, theta, h, float(x @ v), y, kernel=kernel)


def local_linear_cdf_curve(
    data: Dataset,
    theta,
    h: float,
    z: float,
    y_values,
    kernel: Kernel = EPANECHNIKOV,
):
    """Full-sample estimate at one index value for a whole grid of y values.

    Returns an array of clamped CDF values, same length as `y_values`.
    """
    if h <= 0:
        raise ValidationError(f"bandwidth must be positive, got {h}")
    v = as_unit_vector(theta)
    zi = data.X @ v
    u = (z - zi) / h
    k = kernel(u)
    y_values = np.asarray(y_values, dtype=float)
    indic = data.Y[:, None] <= y_values[None, :]
    s0 = float(np.sum(k))
    s1 = float(np.sum(k * u))
    s2 = float(np.sum(k * u * u))
    denom = s0 * s2 - s1 * s1
    if denom > DEGENERATE_TOL:
        w = k * (s2 - u * s1)
        raw = (w @ indic) / denom
    elif s0 > DEGENERATE_TOL:
        raw = (k @ indic) / s0
    else:
        raw = indic.mean(axis=0)
    return np.clip(raw, 0.0, 1.0)


class Loo2Aux:
    """theta-independent precomputations shared across evaluations."""

    def __init__(self, Y: np.ndarray):
        self.Y = Y
        self.order = np.argsort(Y, kind="stable")
        # rlast[j]: last sorted position with value <= Y_j (handles ties).
        self.rlast = np.searchsorted(Y[self.order], Y, side="right") - 1
        self._ind_f = None

    @property
    def ind_f(self) -> np.ndarray:
        if self._ind_f is None:
            self._ind_f = (self.Y[:, None] <= self.Y[None, :]).astype(float)
        return self._ind_f


if HAVE_NUMBA:

    @njit(cache=True)
    def _loo2_rows_epanechnikov(z, Y, h, order, rlast, tol):
        """Leave-two-out CDF matrix for the Epanechnikov kernel.

        Single-threaded on purpose: callers parallelize at a coarser level
        (bootstrap replicates, study replications) and mixing an inner thread
        pool with BLAS costs more in contention than it saves.  Per row: one
        pass builds the kernel row and its moment sums, one pass accumulates
        kernel mass in response order, and one pass assembles every pair
        (i, j) by subtracting the single l = j term.
        """
        n = z.shape[0]
        C = np.empty((n, n))
        fallback = 0
        for i in range(n):
            krow = np.empty(n)
            urow = np.empty(n)
            S0 = 0.0
            S1 = 0.0
            S2 = 0.0
            for l in range(n):
                u = (z[i] - z[l]) / h
                a = 1.0 - u * u
                k = 0.75 * a if (a > 0.0 and l != i) else 0.0
                krow[l] = k
                urow[l] = u
                S0 += k
                ku = k * u
                S1 += ku
                S2 += ku * u
            cum0 = np.empty(n)
            cum1 = np.empty(n)
            c0 = 0.0
            c1 = 0.0
            for r in range(n):
                l = order[r]
                c0 += krow[l]
                c1 += krow[l] * urow[l]
                cum0[r] = c0
                cum1[r] = c1
            for j in range(n):
                if j == i:
                    C[i, j] = 0.0
                    continue
                kij = krow[j]
                uij = urow[j]
                s0 = S0 - kij
                s1 = S1 - kij * uij
                s2 = S2 - kij * uij * uij
                a0 = cum0[rlast[j]] - kij
                a1 = cum1[rlast[j]] - kij * uij
                denom = s0 * s2 - s1 * s1
                if denom > tol:
                    val = (s2 * a0 - s1 * a1) / denom
                elif s0 > tol:
                    val = a0 / s0
                    fallback += 1
                else:
                    cnt = rlast[j]  # all Y_l <= Y_j except l = j itself
                    if Y[i] <= Y[j]:
                        cnt -= 1
                    val = cnt / (n - 2)
                    fallback += 1
                C[i, j] = min(1.0, max(0.0, val))
        return C, fallback


def _loo2_matrix_numpy(z, Y, h: float, kernel: Kernel, aux: Loo2Aux):
    """Matrix-algebra path for arbitrary kernels (and the numba-free case).

    Per-centre full-sample kernel sums are computed once and each pair (i, j)
    subtracts its single l = j term; the rare degenerate pairs are fixed up
    sparsely afterwards.
    """
    n = z.shape[0]
    ind_f = aux.ind_f
    D = z[:, None] - z[None, :]
    D *= 1.0 / h
    if kernel is EPANECHNIKOV:
        K = D * D
        np.subtract(1.0, K, out=K)
        np.maximum(K, 0.0, out=K)
        K *= 0.75
    else:
        K = kernel(D)
    np.fill_diagonal(K, 0.0)
    KD = K * D
    KD2 = KD * D
    # Pair sums: full row sum minus the l = j term.
    s0 = K.sum(axis=1)[:, None] - K
    s1 = KD.sum(axis=1)[:, None] - KD
    s2 = KD2.sum(axis=1)[:, None] - KD2
    a0 = K @ ind_f
    a0 -= K  # I(Y_j <= Y_j) = 1
    a1 = KD @ ind_f
    a1 -= KD
    denom = s0 * s2
    denom -= s1 * s1
    C = s2 * a0
    C -= s1 * a1
    ll_ok = denom > DEGENERATE_TOL
    np.divide(C, denom, out=C, where=ll_ok)
    fallback = 0
    if int(np.count_nonzero(ll_ok)) < n * n:
        rows, cols = np.nonzero(~ll_ok)
        fallback = rows.size - int(np.count_nonzero(rows == cols))
        s0_bad = s0[rows, cols]
        nw = s0_bad > DEGENERATE_TOL
        vals = np.empty(rows.size)
        vals[nw] = a0[rows[nw], cols[nw]] / s0_bad[nw]
        if not nw.all():
            # Empirical CDF of the n-2 included responses.
            col_tot = ind_f.sum(axis=0)
            ec = ~nw
            vals[ec] = (col_tot[cols[ec]] - ind_f[rows[ec], cols[ec]] - 1.0) / (n - 2)
        C[rows, cols] = vals
    np.clip(C, 0.0, 1.0, out=C)
    np.fill_diagonal(C, 0.0)
    return C, fallback


def _loo2_matrix(z, Y, h: float, kernel: Kernel, aux: Loo2Aux):
    if HAVE_NUMBA and kernel is EPANECHNIKOV:
        C, fallback = _loo2_rows_epanechnikov(
            z, Y, h, aux.order, aux.rlast, DEGENERATE_TOL
        )
        return C, int(fallback)
    return _loo2_matrix_numpy(z, Y, h, kernel, aux)


def loo2_cdf_matrix(data: Dataset, theta, h: float, kernel: Kernel = EPANECHNIKOV):
    """All leave-two-out CDF values C[i, j] = F_{-i,-j}(Y_j | theta'X_i) at once.

    The diagonal is set to zero (pairs with i == j are never used).  Returns
    (C, fallback_count) where C holds clamped values and fallback_count is the
    number of off-diagonal pairs that hit the Nadaraya-Watson or empirical-CDF
    fallback.  Memory O(n^2).
    """
    if h <= 0:
        raise ValidationError(f"bandwidth must be positive, got {h}")
    if data.n < 3:
        raise ValidationError("leave-two-out needs n >= 3")
    z = data.X @ as_unit_vector(theta)
    return _loo2_matrix(z, data.Y, h, kernel, Loo2Aux(data.Y))
