"""Smoothing kernels: nonnegative, symmetric, compactly supported."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Kernel:
    """A kernel function together with the radius of its support."""

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    support_radius: float

    def __call__(self, u):
        return self.evaluate(u)


def epanechnikov(u):
    """K(u) = 0.75 (1 - u^2) on [-1, 1], zero outside.

    Accepts scalars or arrays; returns the same shape.
    """
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)
    return float(out) if out.ndim == 0 else out


EPANECHNIKOV = Kernel(name="epanechnikov", evaluate=epanechnikov, support_radius=1.0)

_KERNELS = {"epanechnikov": EPANECHNIKOV}


def get_kernel(name: str) -> Kernel:
    try:
        return _KERNELS[name]
    except KeyError:
        raise ValidationError(
            f"unknown kernel {name!r}; available: {sorted(_KERNELS)}"
        ) from None
