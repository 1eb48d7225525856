"""Sphere geometry and the sphere-averaged leave-two-out criterion.

For a candidate direction theta, each sphere A contributes

    sum_j { P_hat_{-j}(A, Y_j) - (1/(n-1)) sum_{i != j, X_i in A} C[i, j] }^2

where P_hat_{-j}(A, y) is the leave-one-out proportion of points falling in
A x (-inf, y] and C[i, j] is the leave-two-out conditional CDF estimate
F_{-i,-j}(Y_j | theta'X_i).  The objective is the mean of the per-sphere
contributions.

The C matrix does not depend on the spheres, and the sphere memberships and
joint counts do not depend on theta, so a CriterionEvaluator precomputes the
theta-independent parts once and each objective evaluation reduces to kernel
sums plus a handful of matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .data import Dataset
from .errors import ValidationError
from .kernels import EPANECHNIKOV, Kernel
from .directions import as_unit_vector
from .local_linear import Loo2Aux, _loo2_matrix

# Guard against accidentally enormous Cartesian sphere grids.
MAX_GRID_SPHERES = 1_000_000


@dataclass(frozen=True)
class Sphere:
    """Closed Euclidean ball."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.ndim != 1:
            raise ValidationError("sphere center must be a 1-d vector")
        if not self.radius > 0:
            raise ValidationError(f"sphere radius must be positive, got {self.radius}")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)


@dataclass(frozen=True)
class SphereSet:
    spheres: tuple

    def __post_init__(self):
        sph = tuple(self.spheres)
        if len(sph) == 0:
            raise ValidationError("sphere set must contain at least one sphere")
        object.__setattr__(self, "spheres", sph)

    def __len__(self) -> int:
        return len(self.spheres)

    def __iter__(self):
        return iter(self.spheres)

    def concat(self, other: "SphereSet") -> "SphereSet":
        """Union as concatenation; supports mixed-radius collections."""
        return SphereSet(self.spheres + other.spheres)


@dataclass(frozen=True)
class CriterionValue:
    total: float
    per_sphere: np.ndarray
    degenerate_terms: int


def sphere_contains(s: Sphere, x) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != s.center.shape:
        raise ValidationError(
            f"dimension mismatch: sphere has d={s.center.shape[0]}, point has {x.shape}"
        )
    return float(np.linalg.norm(x - s.center)) <= s.radius


def membership_matrix(data: Dataset, spheres: SphereSet) -> np.ndarray:
    """B x n boolean matrix: row b marks the rows of X inside sphere b."""
    centers = np.stack([s.center for s in spheres])
    if centers.shape[1] != data.d:
        raise ValidationError(
            f"sphere dimension {centers.shape[1]} != data dimension {data.d}"
        )
    radii = np.array([s.radius for s in spheres])
    # Pairwise squared distances via the expansion trick.
    sq = (
        np.sum(centers**2, axis=1)[:, None]
        - 2.0 * centers @ data.X.T
        + np.sum(data.X**2, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return np.sqrt(sq) <= radii[:, None]


def empirical_joint(data: Dataset, s: Sphere, y: float, excluded_j: int) -> float:
    """Leave-one-out proportion of points with X in the sphere and Y <= y."""
    n = data.n
    if not 0 <= excluded_j < n:
        raise ValidationError(f"index {excluded_j} out of range for n={n}")
    if n < 2:
        raise ValidationError("empirical_joint needs n >= 2")
    inside = membership_matrix(data, SphereSet((s,)))[0]
    hits = inside & (data.Y <= y)
    hits[excluded_j] = False
    return float(np.count_nonzero(hits)) / (n - 1)


class CriterionEvaluator:
    """Precomputed state for repeated criterion evaluations at varying theta."""

    def __init__(self, data: Dataset, spheres: SphereSet, h: float, kernel: Kernel = EPANECHNIKOV):
        if h <= 0:
            raise ValidationError(f"bandwidth must be positive, got {h}")
        if data.n < 3:
            raise ValidationError("criterion needs n >= 3")
        self.data = data
        self.spheres = spheres
        self.h = h
        self.kernel = kernel
        self.n = data.n
        self._aux = Loo2Aux(data.Y)
        member = membership_matrix(data, spheres).astype(float)
        # counts[b, j] = #{i != j: X_i in sphere b, Y_i <= Y_j}; the i = j term
        # of the product is IND[j, j] = 1, removed where j is a member.
        self._counts = member @ self._aux.ind_f - member
        self._member = member

    def evaluate(self, theta) -> CriterionValue:
        z = self.data.X @ as_unit_vector(theta)
        C, fallback = _loo2_matrix(z, self.data.Y, self.h, self.kernel, self._aux)
        inner = self._member @ C
        resid = (self._counts - inner) / (self.n - 1)
        per_sphere = np.einsum("bj,bj->b", resid, resid)
        return CriterionValue(
            total=float(np.mean(per_sphere)),
            per_sphere=per_sphere,
            degenerate_terms=fallback,
        )


def criterion_sphere(data: Dataset, theta, h: float, s: Sphere, kernel: Kernel = EPANECHNIKOV) -> float:
    """Single-sphere accumulated squared discrepancy."""
    ev = CriterionEvaluator(data, SphereSet((s,)), h, kernel=kernel)
    return float(ev.evaluate(theta).per_sphere[0])


def criterion_total(data: Dataset, theta, h: float, spheres: SphereSet, kernel: Kernel = EPANECHNIKOV) -> CriterionValue:
    """Mean of per-sphere discrepancies over the sphere set."""
    return CriterionEvaluator(data, spheres, h, kernel=kernel).evaluate(theta)


def make_sphere_grid(low: float, high: float, points_per_axis: int, d: int, r: float) -> SphereSet:
    """Cartesian grid of sphere centers, all with radius r.

    A single point per axis places the centre at the interval midpoint.
    """
    if points_per_axis < 1:
        raise ValidationError("points_per_axis must be >= 1")
    if not low < high:
        raise ValidationError(f"need low < high, got [{low}, {high}]")
    if r <= 0:
        raise ValidationError("radius must be positive")
    total = points_per_axis**d
    if total > MAX_GRID_SPHERES:
        raise ValidationError(
            f"grid would contain {total} spheres (cap {MAX_GRID_SPHERES})"
        )
    if points_per_axis == 1:
        axis = np.array([(low + high) / 2.0])
    else:
        axis = np.linspace(low, high, points_per_axis)
    centers = [np.array(c, dtype=float) for c in product(axis, repeat=d)]
    return SphereSet(tuple(Sphere(center=c, radius=r) for c in centers))


def make_data_spheres(data: Dataset, r: float) -> SphereSet:
    """One sphere per data row, centred at X_i (no dedup)."""
    if r <= 0:
        raise ValidationError("radius must be positive")
    return SphereSet(tuple(Sphere(center=x.copy(), radius=r) for x in data.X))
