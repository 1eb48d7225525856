"""Canonical unit directions: norm one, first nonzero component positive."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Components with |v_j| <= this are treated as zero when locating the first
# nonzero entry, and vectors with norm <= this are rejected as degenerate.
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Direction:
    """A unit vector in canonical form (sign fixed by first nonzero entry)."""

    components: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.components, dtype=float)
        if v.ndim != 1:
            raise ValidationError("direction must be a 1-d vector")
        if abs(float(np.linalg.norm(v)) - 1.0) > 1e-9:
            raise ValidationError("direction components must have unit norm")
        v.setflags(write=False)
        object.__setattr__(self, "components", v)

    @property
    def d(self) -> int:
        return self.components.shape[0]


def canonicalize(v) -> Direction:
    """Normalize v and flip its sign so the first nonzero component is positive."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if not np.isfinite(norm) or norm <= ZERO_TOL:
        raise ValidationError("cannot canonicalize a (near-)zero vector")
    # Skip the division for already-unit input so the map is exactly
    # idempotent (renormalizing would shift the last ulp).
    unit = v.copy() if abs(norm - 1.0) <= ZERO_TOL else v / norm
    for comp in unit:
        if abs(comp) > ZERO_TOL:
            if comp < 0:
                unit = -unit
            break
    return Direction(unit)


def as_unit_vector(theta) -> np.ndarray:
    """Accept a Direction or a raw unit vector and return the ndarray."""
    if isinstance(theta, Direction):
        return theta.components
    return np.asarray(theta, dtype=float)
