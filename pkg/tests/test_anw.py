import numpy as np
import pytest

from oracles import anw_weights_from_lambda, epan, grid_scan_lambda

from indexcdf.anw import (
    anw_cdf,
    anw_cdf_curve,
    anw_cdf_curve_multi,
    anw_weights,
    anw_weights_multi,
    prediction_interval,
    quantile,
    quantile_multi,
)
from indexcdf.data import Dataset
from indexcdf.directions import canonicalize
from indexcdf.errors import BracketFailure, ExtrapolationError, ValidationError


def index_dataset(seed=0, n=40):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 2))
    Y = X @ np.array([0.8, 0.6]) + 0.5 * rng.standard_normal(n)
    return Dataset(X, Y), canonicalize([0.8, 0.6])


class TestWeights:
    def test_symmetric_window_uniform(self):
        w = anw_weights([1.0, 3.0], z=2.0, H=2.0)
        assert w.lam == 0.0
        assert np.allclose(w.p, [0.5, 0.5])

    def test_single_point_at_center(self):
        w = anw_weights([0.0, 10.0], z=0.0, H=1.0)
        assert np.array_equal(w.p, [1.0, 0.0])

    def test_single_offcenter_point_brackets_fail(self):
        with pytest.raises(BracketFailure):
            anw_weights([0.5, 10.0], z=0.0, H=1.0)

    def test_empty_window(self):
        with pytest.raises(ExtrapolationError):
            anw_weights([5.0, 6.0], z=0.0, H=1.0)

    def test_asymmetric_case_matches_grid_scan(self):
        zi = np.array([0.1, 0.5, 1.1, 1.7, 2.4])
        z, H = 1.0, 1.5
        w = anw_weights(zi, z, H)
        kv = np.array([epan(u) for u in (zi - z) / H])
        t = (zi - z) * kv
        lam_oracle = grid_scan_lambda(t[kv > 0])
        assert w.lam == pytest.approx(-0.2993052544518946, abs=5e-5)
        assert w.lam == pytest.approx(lam_oracle, abs=5e-5)
        p_oracle = anw_weights_from_lambda(t[kv > 0], w.lam)
        assert np.allclose(w.p[kv > 0], p_oracle, atol=1e-10)
        assert w.constraint_residual <= 1e-8

    def test_random_configurations_invariants(self):
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 60:
            n = int(rng.integers(4, 40))
            zi = rng.normal(size=n) * rng.uniform(0.5, 2.0)
            z = float(rng.normal() * 0.5)
            H = float(rng.uniform(0.3, 2.0))
            try:
                w = anw_weights(zi, z, H)
            except (BracketFailure, ExtrapolationError):
                continue
            checked += 1
            assert np.all(w.p >= 0.0)
            assert abs(w.p.sum() - 1.0) <= 1e-10
            assert w.constraint_residual <= 1e-8

    def test_bandwidth_validation(self):
        with pytest.raises(ValidationError):
            anw_weights([0.0], 0.0, H=0.0)


class TestCdf:
    def test_range_endpoints(self):
        data, theta = index_dataset()
        z = float(np.median(data.X @ theta.components))
        assert anw_cdf(data, theta, 0.8, z, float(data.Y.max()) + 1) == 1.0
        assert anw_cdf(data, theta, 0.8, z, float(data.Y.min()) - 1) == 0.0

    def test_hand_case_matches_oracle_weights(self):
        zi = np.array([-0.8, -0.3, 0.15, 0.4, 0.9, 1.6])
        Y = np.array([2.0, -1.0, 0.5, 1.2, -0.4, 0.8])
        data = Dataset(zi[:, None], Y)
        theta = canonicalize([1.0])
        got = [anw_cdf(data, theta, 1.0, 0.2, y) for y in (-0.5, 0.5, 1.0)]
        assert got[0] == pytest.approx(0.27204882956305954, abs=1e-6)
        assert got[1] == pytest.approx(0.7244061111963301, abs=1e-6)
        assert got[2] == pytest.approx(0.7244061111963301, abs=1e-6)

    def test_monotone_and_in_unit_interval(self):
        data, theta = index_dataset(seed=2)
        z = 0.3
        ys = np.linspace(data.Y.min() - 1, data.Y.max() + 1, 60)
        vals = anw_cdf_curve(data, theta, 0.7, z, ys)
        assert np.all(np.diff(vals) >= 0.0)
        assert np.all((vals >= 0.0) & (vals <= 1.0))

    def test_out_of_window_points_have_no_influence(self):
        zi = np.array([-0.2, 0.1, 0.3, 4.0])
        Y = np.array([1.0, 2.0, 3.0, 4.0])
        theta = canonicalize([1.0])
        a = anw_cdf(Dataset(zi[:, None], Y), theta, 1.0, 0.0, 2.5)
        Y2 = Y.copy()
        Y2[3] = -50.0
        b = anw_cdf(Dataset(zi[:, None], Y2), theta, 1.0, 0.0, 2.5)
        assert a == b


class TestQuantile:
    def test_small_p_gives_first_step(self):
        data, theta = index_dataset(seed=3)
        z = 0.0
        q = quantile(data, theta, 0.8, z, 1e-6)
        zi = data.X @ theta.components
        window = np.abs(zi - z) < 0.8
        assert q == float(data.Y[window].min())

    def test_exact_jump_tie(self):
        data, theta = index_dataset(seed=4)
        z = 0.1
        zi = data.X @ theta.components
        window_ys = np.sort(data.Y[np.abs(zi - z) < 0.9])
        for y in window_ys[1:-1]:
            p = anw_cdf(data, theta, 0.9, z, float(y))
            if 0.0 < p < 1.0:
                assert quantile(data, theta, 0.9, z, p) == float(y)
                break
        else:
            pytest.fail("no interior jump found")

    def test_roundtrip(self):
        data, theta = index_dataset(seed=5)
        rng = np.random.default_rng(6)
        z = -0.2
        for p in rng.uniform(0.01, 0.99, size=100):
            q = quantile(data, theta, 0.8, z, float(p))
            assert anw_cdf(data, theta, 0.8, z, q) >= p

    def test_level_validated(self):
        data, theta = index_dataset(seed=7)
        with pytest.raises(ValidationError):
            quantile(data, theta, 0.8, 0.0, 0.0)


class TestPredictionInterval:
    def test_ordering_and_level(self):
        data, theta = index_dataset(seed=8)
        pi = prediction_interval(data, theta, 0.8, data.X[0], alpha=0.1)
        assert pi.lower <= pi.upper
        assert pi.level == pytest.approx(0.9)
        assert pi.index_value == pytest.approx(float(data.X[0] @ theta.components))

    def test_high_alpha_degenerate(self):
        data, theta = index_dataset(seed=9)
        pi = prediction_interval(data, theta, 0.8, data.X[1], alpha=0.995)
        assert pi.lower <= pi.upper

    def test_nested_levels(self):
        data, theta = index_dataset(seed=10)
        # evaluate at interior design points so the kernel window is populated
        zi = data.X @ theta.components
        rows = np.argsort(np.abs(zi - np.median(zi)))[:5]
        for row in rows:
            wide = prediction_interval(data, theta, 0.8, data.X[row], alpha=0.1)
            narrow = prediction_interval(data, theta, 0.8, data.X[row], alpha=0.5)
            assert narrow.lower >= wide.lower
            assert narrow.upper <= wide.upper
            assert (narrow.upper - narrow.lower) <= (wide.upper - wide.lower)

    def test_alpha_validated(self):
        data, theta = index_dataset(seed=11)
        with pytest.raises(ValidationError):
            prediction_interval(data, theta, 0.8, data.X[0], alpha=1.5)


class TestMultivariate:
    def test_symmetric_grid_gives_zero_lambda(self):
        X = np.array([[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5], [0.0, -0.5]])
        w = anw_weights_multi(X, np.zeros(2), H=1.0)
        assert np.allclose(w.p, 0.25, atol=1e-9)
        assert w.constraint_residual <= 1e-8

    def test_random_cases_constraint_holds(self):
        rng = np.random.default_rng(12)
        checked = 0
        while checked < 30:
            n = int(rng.integers(8, 40))
            X = rng.normal(size=(n, 2))
            x = rng.normal(size=2) * 0.3
            try:
                w = anw_weights_multi(X, x, H=float(rng.uniform(0.8, 2.0)))
            except Exception:
                continue
            checked += 1
            assert np.all(w.p >= 0.0)
            assert abs(w.p.sum() - 1.0) <= 1e-10
            assert w.constraint_residual <= 1e-8

    def test_curve_monotone(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(30, 2))
        Y = X.sum(axis=1) + 0.3 * rng.normal(size=30)
        data = Dataset(X, Y)
        ys = np.linspace(Y.min(), Y.max(), 25)
        vals = anw_cdf_curve_multi(data, np.zeros(2), 1.5, ys)
        assert np.all(np.diff(vals) >= 0)
        assert np.all((vals >= 0) & (vals <= 1))

    def test_quantile_multi_roundtrip(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(40, 2))
        Y = X.sum(axis=1) + 0.3 * rng.normal(size=40)
        data = Dataset(X, Y)
        q = quantile_multi(data, np.zeros(2), 1.5, 0.5)
        vals = anw_cdf_curve_multi(data, np.zeros(2), 1.5, [q])
        assert vals[0] >= 0.5
