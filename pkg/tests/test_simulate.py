import numpy as np
import pytest

from indexcdf.data import Dataset
from indexcdf.directions import canonicalize
from indexcdf.errors import ValidationError
from indexcdf.optimize import SimplexOptions
from indexcdf.simulate import (
    StudyConfig,
    avg_abs_error,
    default_error_grid,
    gen_example1,
    gen_example2,
    run_study,
    std_normal_cdf,
    true_cdf_example1,
    true_cdf_example2,
    true_cdf_example2_curve,
)

FAST_BOOT = SimplexOptions(max_iterations=40, rel_tolerance=1e-3, restarts=0)


class TestGenerators:
    def test_example1_direction(self):
        _, theta = gen_example1(5, np.random.default_rng(0))
        assert np.linalg.norm(theta.components) == pytest.approx(1.0)
        assert theta.components[2] == 0.0
        assert np.allclose(theta.components, np.array([1, 2, 0, 3]) / np.sqrt(14))

    def test_example1_noiseless(self):
        data, theta = gen_example1(50, np.random.default_rng(1), noise_sd=0.0)
        assert np.allclose(data.Y, data.X @ theta.components, atol=1e-12)

    def test_example1_variance(self):
        data, _ = gen_example1(100_000, np.random.default_rng(2))
        # Var(theta'X) + Var(eps) = 1 + 1
        assert float(np.var(data.Y)) == pytest.approx(2.0, abs=0.05)

    def test_example2_direction(self):
        _, theta = gen_example2(5, np.random.default_rng(3))
        assert np.allclose(theta.components, 0.5)

    def test_example2_bounded_mean_part(self):
        data, _ = gen_example2(500, np.random.default_rng(4), noise_sd=0.0)
        assert np.max(np.abs(data.Y)) <= 2.0

    def test_example2_centered(self):
        data, _ = gen_example2(100_000, np.random.default_rng(5))
        assert float(np.mean(data.Y)) == pytest.approx(0.0, abs=0.02)


class TestTrueCdfs:
    def test_example1_center(self):
        _, theta = gen_example1(5, np.random.default_rng(0))
        assert true_cdf_example1(theta, 0.0, 0.0) == pytest.approx(0.5)

    def test_example1_known_quantile(self):
        _, theta = gen_example1(5, np.random.default_rng(0))
        assert true_cdf_example1(theta, 0.0, 1.959964) == pytest.approx(0.975, abs=1e-6)

    def test_example1_limits(self):
        _, theta = gen_example1(5, np.random.default_rng(0))
        assert true_cdf_example1(theta, 0.3, 1e9) == pytest.approx(1.0)
        assert true_cdf_example1(theta, 0.3, -1e9) == pytest.approx(0.0)

    def test_example2_limit(self):
        _, theta = gen_example2(5, np.random.default_rng(0))
        val, _ = true_cdf_example2(theta, 0.5, 1e9, 10_000, np.random.default_rng(1))
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_example2_symmetry_at_origin(self):
        _, theta = gen_example2(5, np.random.default_rng(0))
        val, se = true_cdf_example2(theta, 0.0, 0.0, 100_000, np.random.default_rng(2))
        assert val == pytest.approx(0.5, abs=max(4 * se, 1e-3))

    def test_example2_self_consistency(self):
        _, theta = gen_example2(5, np.random.default_rng(0))
        a, sa = true_cdf_example2(theta, 0.7, 0.3, 100_000, np.random.default_rng(3))
        b, sb = true_cdf_example2(theta, 0.7, 0.3, 100_000, np.random.default_rng(4))
        assert abs(a - b) <= 3.0 * np.hypot(sa, sb)

    def test_example2_mc_size_validated(self):
        _, theta = gen_example2(5, np.random.default_rng(0))
        with pytest.raises(ValidationError):
            true_cdf_example2(theta, 0.0, 0.0, 100, np.random.default_rng(5))

    def test_conditioning_decomposition(self):
        # every draw in the curve version satisfies theta'X = z exactly
        _, theta = gen_example2(5, np.random.default_rng(0))
        v = theta.components
        rng = np.random.default_rng(6)
        xi = rng.standard_normal((100, 4))
        X = 1.3 * v[None, :] + xi - np.outer(xi @ v, v)
        assert np.allclose(X @ v, 1.3, atol=1e-12)


class TestAvgAbsError:
    def test_self_comparison_zero(self):
        data, theta = gen_example1(60, np.random.default_rng(7))
        from indexcdf.local_linear import local_linear_cdf_curve

        truth = lambda z, ys: local_linear_cdf_curve(data, theta, 0.5, z, ys)
        err = avg_abs_error(data, theta, 0.5, truth, (-1.0, 1.0), (-1.0, 1.0))
        assert err == 0.0

    def test_single_point_grid(self):
        data, theta = gen_example1(60, np.random.default_rng(8))
        truth = lambda z, ys: np.zeros(np.asarray(ys).size)
        from indexcdf.local_linear import local_linear_cdf_curve

        expected = float(local_linear_cdf_curve(data, theta, 0.5, 0.0, [0.0])[0])
        err = avg_abs_error(data, theta, 0.5, truth, (0.0, 0.01), (0.0, 0.01))
        assert err == pytest.approx(expected)

    def test_true_direction_beats_orthogonal(self):
        data, theta = gen_example1(400, np.random.default_rng(9))
        wrong = canonicalize([2.0, -1.0, 0.0, 0.0])  # orthogonal to (1,2,0,3)
        truth = lambda z, ys: true_cdf_example1(theta, z, np.asarray(ys))
        z_range, y_range = default_error_grid(data, theta)
        H = 0.4
        err_true = avg_abs_error(data, theta, H, truth, z_range, y_range)
        err_wrong = avg_abs_error(data, wrong, H, truth, z_range, y_range)
        assert err_true < err_wrong

    def test_empty_range_rejected(self):
        data, theta = gen_example1(30, np.random.default_rng(10))
        truth = lambda z, ys: np.zeros(np.asarray(ys).size)
        with pytest.raises(ValidationError):
            avg_abs_error(data, theta, 0.5, truth, (1.0, 0.5), (0.0, 1.0))


class TestStudy:
    def small_config(self, **kw):
        base = dict(
            model="example1",
            n=60,
            replications=2,
            seed=11,
            sphere_points=3,
            grid_size=3,
            boot_replicates=2,
            boot_simplex=FAST_BOOT,
            simplex=SimplexOptions(max_iterations=80, rel_tolerance=1e-4, restarts=1),
        )
        base.update(kw)
        return StudyConfig(**base)

    def test_reproducible_bitwise(self):
        a = run_study(self.small_config(replications=1))
        b = run_study(self.small_config(replications=1))
        assert a.to_dict() == b.to_dict()

    def test_parallel_matches_serial(self):
        serial = run_study(self.small_config())
        parallel = run_study(self.small_config(n_jobs=2))
        assert serial.to_dict()["records"] == parallel.to_dict()["records"]

    def test_record_count_and_fields(self):
        rep = run_study(self.small_config())
        assert len(rep.records) == 2
        for rec in rep.records:
            assert -1.0 <= rec.inner_product <= 1.0
            assert rec.h > 0 and rec.H > 0
            assert rec.err_fitted is not None and rec.err_true is not None
        assert set(rep.summary) >= {"inner_product", "h", "H"}

    def test_fixed_policy(self):
        rep = run_study(
            self.small_config(bandwidth_policy="fixed", fixed_h=0.4, fixed_H=0.5)
        )
        assert all(rec.h == 0.4 and rec.H == 0.5 for rec in rep.records)

    def test_example2_study_runs(self):
        rep = run_study(self.small_config(model="example2", compute_errors=False))
        assert len(rep.records) == 2

    def test_multiplier_validated(self):
        with pytest.raises(ValidationError):
            self.small_config(h_multiplier=2.0)

    def test_quantile_summary_shape(self):
        rep = run_study(self.small_config())
        five = rep.summary["inner_product"]
        assert list(five) == ["min", "q1", "median", "q3", "max"]
        assert five["min"] <= five["median"] <= five["max"]


def test_std_normal_cdf_scalar_and_vector():
    assert std_normal_cdf(0.0) == pytest.approx(0.5)
    vals = std_normal_cdf(np.array([-1.0, 0.0, 1.0]))
    assert vals[0] + vals[2] == pytest.approx(1.0)


def test_true_cdf_example2_curve_shares_draws():
    _, theta = gen_example2(5, np.random.default_rng(0))
    ys = np.array([-0.5, 0.0, 0.5])
    vals, ses = true_cdf_example2_curve(theta, 0.2, ys, 20_000, np.random.default_rng(7))
    assert vals.shape == (3,) and ses.shape == (3,)
    assert np.all(np.diff(vals) > 0)  # monotone in y
