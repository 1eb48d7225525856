import numpy as np
import pytest

from indexcdf.data import (
    Dataset,
    ScalingParams,
    embed_time_series,
    load_csv,
    load_series,
    standardize,
)
from indexcdf.errors import ValidationError


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        p = write(tmp_path, "x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n")
        data = load_csv(p, ["x1", "x2"], "y")
        assert data.n == 3 and data.d == 2
        assert np.array_equal(data.Y, [3.0, 6.0, 9.0])

    def test_blank_cell_names_row(self, tmp_path):
        p = write(tmp_path, "x1,y\n1,2\n3,\n")
        with pytest.raises(ValidationError, match="row 2"):
            load_csv(p, ["x1"], "y")

    def test_column_order_follows_request_not_file(self, tmp_path):
        p = write(tmp_path, "b,a,y\n1,2,0\n3,4,0\n")
        data = load_csv(p, ["a", "b"], "y")
        assert np.array_equal(data.X[:, 0], [2.0, 4.0])
        assert np.array_equal(data.X[:, 1], [1.0, 3.0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="no such file"):
            load_csv(tmp_path / "nope.csv", ["a"], "y")

    def test_missing_column(self, tmp_path):
        p = write(tmp_path, "a,y\n1,2\n")
        with pytest.raises(ValidationError, match="'b'"):
            load_csv(p, ["a", "b"], "y")

    def test_non_finite_cell(self, tmp_path):
        p = write(tmp_path, "a,y\n1,inf\n")
        with pytest.raises(ValidationError, match="'y'"):
            load_csv(p, ["a"], "y")

    def test_load_series(self, tmp_path):
        p = write(tmp_path, "y\n1\n2\n3\n")
        assert np.array_equal(load_series(p), [1.0, 2.0, 3.0])


class TestEmbed:
    def test_lag_rule(self):
        data = embed_time_series([1.0, 2.0, 3.0, 4.0], lags=2)
        assert data.n == 2
        assert np.array_equal(data.X, [[2.0, 1.0], [3.0, 2.0]])
        assert np.array_equal(data.Y, [3.0, 4.0])

    def test_length_176_two_lags(self):
        series = np.sin(np.arange(176) * 0.3)
        assert embed_time_series(series, lags=2).n == 174

    def test_too_short(self):
        with pytest.raises(ValidationError):
            embed_time_series([5.0, 5.0], lags=2)

    def test_rows_follow_windows(self):
        rng = np.random.default_rng(1)
        series = rng.standard_normal(40)
        data = embed_time_series(series, lags=3)
        for row in range(data.n):
            t = row + 3
            assert data.Y[row] == series[t]
            expected = [series[t - 1], series[t - 2], series[t - 3]]
            assert np.array_equal(data.X[row], expected)


class TestStandardize:
    def test_two_point_column(self):
        data = Dataset(np.array([[-1.0], [1.0]]), np.array([0.0, 0.0]))
        out, params = standardize(data)
        # sample sd with the n-1 denominator is sqrt(2)
        assert np.allclose(out.X[:, 0], [-1 / np.sqrt(2), 1 / np.sqrt(2)])
        assert params.sd[0] == pytest.approx(np.sqrt(2))

    def test_idempotent_on_standardized(self):
        rng = np.random.default_rng(2)
        data = Dataset(rng.standard_normal((40, 3)), rng.standard_normal(40))
        once, _ = standardize(data)
        twice, params = standardize(once)
        assert np.allclose(once.X, twice.X, atol=1e-12)
        assert np.allclose(params.mean, 0.0, atol=1e-12)
        assert np.allclose(params.sd, 1.0, atol=1e-12)

    def test_constant_column_rejected(self):
        data = Dataset(np.array([[2.0], [2.0], [2.0]]), np.zeros(3))
        with pytest.raises(ValidationError, match="constant"):
            standardize(data)

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((30, 4)) * 5 + 2
        data = Dataset(X, rng.standard_normal(30))
        out, params = standardize(data)
        back = params.invert(out.X)
        assert np.max(np.abs(back - X) / np.maximum(1.0, np.abs(X))) < 1e-12

    def test_y_untouched(self):
        rng = np.random.default_rng(4)
        data = Dataset(rng.standard_normal((10, 2)), rng.standard_normal(10))
        out, _ = standardize(data)
        assert np.array_equal(out.Y, data.Y)


class TestDatasetValidation:
    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            Dataset(np.array([[np.nan]]), np.array([1.0]))
        with pytest.raises(ValidationError):
            Dataset(np.array([[1.0]]), np.array([np.inf]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValidationError):
            Dataset(np.ones((3, 2)), np.ones(2))

    def test_immutable(self):
        data = Dataset(np.ones((3, 2)), np.ones(3))
        with pytest.raises(ValueError):
            data.X[0, 0] = 5.0

    def test_scaling_params_need_positive_sd(self):
        with pytest.raises(ValidationError):
            ScalingParams(mean=np.zeros(2), sd=np.array([1.0, 0.0]))
