"""Sample container, CSV ingestion, standardization and lag embedding."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Dataset:
    """Paired observations (X_i, Y_i): X is n-by-d, Y has length n.

    All entries must be finite.  Rows pair positionally: row i of X belongs
    to Y[i].  Instances are immutable and safe to share across workers.
    """

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2:
            raise ValidationError(f"X must be a 2-d array, got ndim={X.ndim}")
        if Y.ndim != 1:
            raise ValidationError(f"Y must be a 1-d array, got ndim={Y.ndim}")
        if X.shape[0] != Y.shape[0]:
            raise ValidationError(
                f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries"
            )
        if X.shape[0] < 1:
            raise ValidationError("dataset needs at least one row")
        if X.shape[1] < 1:
            raise ValidationError("dataset needs at least one covariate column")
        if not np.all(np.isfinite(X)):
            raise ValidationError("X contains non-finite values")
        if not np.all(np.isfinite(Y)):
            raise ValidationError("Y contains non-finite values")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def take(self, indices) -> "Dataset":
        """Row subset (copies)."""
        idx = np.asarray(indices)
        return Dataset(self.X[idx].copy(), self.Y[idx].copy())


@dataclass(frozen=True)
class ScalingParams:
    """Per-column mean and sample standard deviation used to standardize X."""

    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        sd = np.asarray(self.sd, dtype=float)
        if mean.shape != sd.shape or mean.ndim != 1:
            raise ValidationError("mean and sd must be 1-d arrays of equal length")
        if np.any(sd <= 0):
            raise ValidationError("all scaling sds must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.sd

    def invert(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) * self.sd + self.mean


def _parse_cell(raw: str, row: int, column: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ValidationError(
            f"row {row}, column {column!r}: cannot parse {raw!r} as a number"
        ) from None
    if not np.isfinite(value):
        raise ValidationError(f"row {row}, column {column!r}: non-finite value {raw!r}")
    return value


def load_csv(path, x_columns, y_column) -> Dataset:
    """Read a comma-separated file (one header row, '.' decimals, UTF-8).

    X columns follow the order given in `x_columns`, not the file order.
    Row numbers in error messages are 1-based data rows (header excluded).
    """
    x_columns = list(x_columns)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"no such file: {path}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for name in [*x_columns, y_column]:
            if name not in header:
                raise ValidationError(f"missing column {name!r} in {path}")
        xs, ys = [], []
        for i, record in enumerate(reader, start=1):
            xs.append([_parse_cell(record[c], i, c) for c in x_columns])
            ys.append(_parse_cell(record[y_column], i, y_column))
    if not ys:
        raise ValidationError(f"{path} contains no data rows")
    return Dataset(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))


def load_series(path, column: str = "y") -> np.ndarray:
    """Read one numeric column from a CSV file (header row required)."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"no such file: {path}") from None
    with fh:
        reader = csv.DictReader(fh)
        if column not in (reader.fieldnames or []):
            raise ValidationError(f"missing column {column!r} in {path}")
        values = [_parse_cell(rec[column], i, column) for i, rec in enumerate(reader, 1)]
    if not values:
        raise ValidationError(f"{path} contains no data rows")
    return np.asarray(values, dtype=float)


def embed_time_series(series, lags: int) -> Dataset:
    """Lag-embed a scalar series: row for time t has X = (s[t-1], ..., s[t-lags]), Y = s[t].

    Rows stay in temporal order, so prefix/suffix slices are train/validate
    splits in time.
    """
    s = np.asarray(series, dtype=float)
    if s.ndim != 1:
        raise ValidationError("series must be one-dimensional")
    if lags < 1:
        raise ValidationError("lags must be >= 1")
    T = s.shape[0]
    if T <= lags:
        raise ValidationError(f"series length {T} must exceed lags {lags}")
    n = T - lags
    X = np.empty((n, lags), dtype=float)
    for k in range(lags):
        X[:, k] = s[lags - 1 - k : T - 1 - k]
    return Dataset(X, s[lags:].copy())


def standardize(data: Dataset) -> tuple[Dataset, ScalingParams]:
    """Center and scale each X column to sample mean 0, sample sd 1 (ddof=1).

    Y is left unchanged.  Raises on constant columns.
    """
    mean = data.X.mean(axis=0)
    sd = data.X.std(axis=0, ddof=1) if data.n > 1 else np.zeros(data.d)
    bad = np.where(sd <= 0)[0]
    if bad.size:
        raise ValidationError(f"constant X column (zero sd) at index {bad[0]}")
    params = ScalingParams(mean=mean, sd=sd)
    return Dataset(params.apply(data.X), data.Y.copy()), params
