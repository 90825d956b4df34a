"""Effort-estimation datasets: ingestion, description, scaling and resampling.

The canonical schema has two predictors, new-and-changed lines of code
(``nc``) and reused lines of code (``r``), and one target, actual effort in
minutes (``ae``).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    ConstantColumn,
    DegenerateSplit,
    EffortError,
    MissingHeader,
    NonNumericCell,
    TooFewRows,
    TooFewValues,
    ZeroVariance,
)
from .rng import make_rng

SCHEMA = ("nc", "r", "ae")

# Marginal moments of the 163-program reference dataset, used for synthesis.
NC_MEAN, NC_SD = 35.56, 26.60
R_MEAN, R_SD = 41.82, 30.86

# Coefficients of the published fixed linear model (intercept, N&C, R).
LITERATURE_INTERCEPT = 44.713
LITERATURE_COEFS = (1.08, -0.145)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix plus target vector.

    ``normalized`` holds one flag per column, features first and the target
    last, in the order of :attr:`columns`.
    """

    feature_names: tuple
    features: np.ndarray
    target: np.ndarray
    target_name: str = "ae"
    normalized: tuple = field(default=None)

    def __post_init__(self):
        names = tuple(str(s) for s in self.feature_names)
        X = _frozen(self.features)
        y = _frozen(self.target)
        if X.ndim == 1:
            X = _frozen(X.reshape(-1, 1))
        if X.ndim != 2 or y.ndim != 1:
            raise EffortError("features must be 2-D and target 1-D")
        if X.shape[0] != y.shape[0]:
            raise EffortError(
                f"features have {X.shape[0]} rows but target has {y.shape[0]} values"
            )
        if X.shape[1] != len(names):
            raise EffortError(f"{len(names)} feature names for {X.shape[1]} columns")
        if y.shape[0] < 1:
            raise TooFewRows(0, 1)
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise EffortError("dataset contains non-finite values")
        flags = self.normalized
        if flags is None:
            flags = (False,) * (len(names) + 1)
        flags = tuple(bool(f) for f in flags)
        if len(flags) != len(names) + 1:
            raise EffortError("one normalization flag per column is required")
        for j, flag in enumerate(flags):
            col = y if j == len(names) else X[:, j]
            if flag and (col.min() < 0.0 or col.max() > 1.0):
                raise EffortError(f"column {self.columns[j]!r} flagged normalized but leaves [0, 1]")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "normalized", flags)

    @property
    def columns(self) -> tuple:
        return tuple(self.feature_names) + (self.target_name,)

    @property
    def n(self) -> int:
        return self.target.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def column(self, name: str) -> np.ndarray:
        if name == self.target_name:
            return self.target
        return self.features[:, self.feature_names.index(name)]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(
            self.feature_names,
            self.features[rows],
            self.target[rows],
            self.target_name,
            self.normalized,
        )

    def rows(self) -> list:
        """Rows as tuples in column order (handy for multiset comparisons)."""
        return [tuple(r) + (t,) for r, t in zip(self.features.tolist(), self.target.tolist())]

    def to_csv(self, stream: TextIO) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])


# -- ingestion ---------------------------------------------------------------

def load_dataset(source, schema: Sequence[str] = SCHEMA) -> Dataset:
    """Parse CSV text with a header naming at least the ``schema`` columns.

    The last schema entry is the target.  ``source`` is a text stream or a
    string holding the CSV content.  Rows are numbered from 1 (the first data
    row) in error messages.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    header = [h.strip() for h in header] if header else []
    missing = [c for c in schema if c not in header]
    if missing:
        raise MissingHeader(missing, header)
    idx = [header.index(c) for c in schema]

    values = []
    for rownum, rec in enumerate(reader, start=1):
        if not rec or all(not cell.strip() for cell in rec):
            continue
        parsed = []
        for name, j in zip(schema, idx):
            cell = rec[j].strip() if j < len(rec) else ""
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCell(rownum, name, cell) from None
            if not math.isfinite(v):
                raise NonNumericCell(rownum, name, cell)
            parsed.append(v)
        values.append(parsed)
    if len(values) < 3:
        raise TooFewRows(len(values), 3)
    arr = np.array(values, dtype=float)
    return Dataset(tuple(schema[:-1]), arr[:, :-1], arr[:, -1], schema[-1])


def load_csv(path, schema: Sequence[str] = SCHEMA) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        return load_dataset(fh, schema)


# -- description ---------------------------------------------------------------

@dataclass(frozen=True)
class SummaryStats:
    mean: float
    stdev: float
    median: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stdev": self.stdev, "median": self.median}


def summary_stats(column) -> SummaryStats:
    """Sample mean, sample standard deviation (n-1) and median."""
    v = np.asarray(column, dtype=float).ravel()
    if v.size < 2:
        raise TooFewValues(v.size, 2)
    if not np.isfinite(v).all():
        raise EffortError("summary_stats requires finite values")
    return SummaryStats(float(np.mean(v)), float(np.std(v, ddof=1)), float(np.median(v)))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise EffortError(f"pearson needs equal lengths, got {x.size} and {y.size}")
    if x.size < 2:
        raise TooFewValues(x.size, 2)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("pearson correlation is undefined for a constant vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


# -- min-max scaling -------------------------------------------------------------

@dataclass(frozen=True)
class NormParams:
    """Per-column ``(min, max)`` pairs recorded by :func:`minmax_normalize`."""

    ranges: dict

    def __post_init__(self):
        for name, (lo, hi) in self.ranges.items():
            if not hi > lo:
                raise ConstantColumn(name)

    def transform(self, d: Dataset, features) -> np.ndarray:
        """Scale a raw feature matrix laid out like ``d`` with these ranges.

        Values outside the recorded range map outside [0, 1]; this is how
        held-out rows are scaled with training-partition parameters.
        """
        X = np.array(features, dtype=float)
        for j, name in enumerate(d.feature_names):
            if name in self.ranges:
                lo, hi = self.ranges[name]
                X[:, j] = (X[:, j] - lo) / (hi - lo)
        return X

    def to_json(self) -> str:
        return json.dumps(
            {k: {"min": lo, "max": hi} for k, (lo, hi) in self.ranges.items()}
        )

    @classmethod
    def from_json(cls, text: str) -> "NormParams":
        doc = json.loads(text)
        return cls({k: (float(v["min"]), float(v["max"])) for k, v in doc.items()})


def minmax_normalize(d: Dataset, columns: Iterable[str] | None = None):
    """Map each selected column to ``(v - min) / (max - min)``.

    By default only the feature columns are scaled; the target stays in its
    original units.  Returns the scaled dataset and the recorded ranges.
    """
    columns = list(d.feature_names if columns is None else columns)
    for c in columns:
        if c not in d.columns:
            raise EffortError(f"unknown column {c!r}")
    X = np.array(d.features)
    y = np.array(d.target)
    flags = list(d.normalized)
    ranges = {}
    for c in columns:
        col = d.column(c)
        lo = float(col.min())
        hi = float(col.max())
        if not hi > lo:
            raise ConstantColumn(c)
        scaled = (col - lo) / (hi - lo)
        if c == d.target_name:
            y = scaled
        else:
            X[:, d.feature_names.index(c)] = scaled
        flags[d.columns.index(c)] = True
        ranges[c] = (lo, hi)
    return Dataset(d.feature_names, X, y, d.target_name, tuple(flags)), NormParams(ranges)


def denormalize(d: Dataset, params: NormParams) -> Dataset:
    X = np.array(d.features)
    y = np.array(d.target)
    flags = list(d.normalized)
    for c, (lo, hi) in params.ranges.items():
        if c == d.target_name:
            y = y * (hi - lo) + lo
        else:
            j = d.feature_names.index(c)
            X[:, j] = X[:, j] * (hi - lo) + lo
        flags[d.columns.index(c)] = False
    return Dataset(d.feature_names, X, y, d.target_name, tuple(flags))


# -- resampling --------------------------------------------------------------------

def train_size(n: int, train_ratio: float) -> int:
    # guard against products such as 0.7 * 10 = 7.000000000000001 or 6.9999...
    return int(math.floor(train_ratio * n + 1e-9))


def split_indices(n: int, train_ratio: float, seed: int):
    if not 0.0 < train_ratio < 1.0:
        raise DegenerateSplit(f"train_ratio must lie in (0, 1), got {train_ratio}")
    k = train_size(n, train_ratio)
    if k < 2 or k >= n:
        raise DegenerateSplit(f"ratio {train_ratio} on {n} rows gives {k} train / {n - k} test rows")
    perm = make_rng(seed, "shuffle_split").permutation(n)
    return perm[:k], perm[k:]


def shuffle_split(d: Dataset, train_ratio: float, seed: int):
    """Seeded permutation, then the first ``floor(ratio * n)`` rows train."""
    tr, te = split_indices(d.n, train_ratio, seed)
    return d.take(tr), d.take(te)


def bootstrap_indices(n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise TooFewRows(n, 1)
    return make_rng(seed, "bootstrap").integers(0, n, size=n)


def bootstrap_sample(d: Dataset, seed: int) -> Dataset:
    return d.take(bootstrap_indices(d.n, seed))


# -- synthesis ------------------------------------------------------------------

def literature_effort(nc, r):
    return LITERATURE_INTERCEPT + LITERATURE_COEFS[0] * np.asarray(nc) + LITERATURE_COEFS[1] * np.asarray(r)


def generate_synthetic(n: int, noise_sd: float, seed: int) -> Dataset:
    """Draw a dataset whose effort follows the fixed literature equation.

    N&C and R are independent normals with the reference marginal moments,
    censored at zero.  Effort is the literature equation plus Gaussian noise,
    floored at one minute.
    """
    if n < 10:
        raise TooFewRows(n, 10)
    if not noise_sd >= 0:
        raise EffortError(f"noise_sd must be >= 0, got {noise_sd}")
    rng = make_rng(seed, "synthetic")
    nc = np.maximum(rng.normal(NC_MEAN, NC_SD, n), 0.0)
    r = np.maximum(rng.normal(R_MEAN, R_SD, n), 0.0)
    noise = rng.normal(0.0, 1.0, n) * noise_sd
    ae = np.maximum(literature_effort(nc, r) + noise, 1.0)
    return Dataset(("nc", "r"), np.column_stack([nc, r]), ae, "ae")
