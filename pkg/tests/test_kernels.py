import numpy as np
import pytest

from indexcdf.errors import ValidationError
from indexcdf.kernels import EPANECHNIKOV, epanechnikov, get_kernel


def test_standard_values():
    assert epanechnikov(0.0) == 0.75
    assert epanechnikov(1.0) == 0.0
    assert epanechnikov(-1.0) == 0.0
    assert epanechnikov(0.5) == 0.5625


def test_symmetry_exact():
    rng = np.random.default_rng(0)
    u = rng.uniform(-2, 2, size=1000)
    assert np.array_equal(epanechnikov(u), epanechnikov(-u))


def test_unit_mass_trapezoid():
    u = np.linspace(-1, 1, 200001)
    mass = np.trapezoid(epanechnikov(u), u)
    assert abs(mass - 1.0) < 1e-6


def test_monotone_decreasing_on_unit_interval():
    u = np.linspace(0, 1, 500)
    vals = epanechnikov(u)
    assert np.all(np.diff(vals) <= 0)


def test_compact_support():
    assert epanechnikov(1.0001) == 0.0
    assert epanechnikov(-3.0) == 0.0


def test_registry():
    assert get_kernel("epanechnikov") is EPANECHNIKOV
    with pytest.raises(ValidationError):
        get_kernel("gaussian")
