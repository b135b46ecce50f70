"""Loading and preprocessing of tabular data.

Everything downstream works on a :class:`DataMatrix`: mean-centred columns,
optionally scaled to unit norm so that ``X'X`` is exactly the correlation
matrix.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import CSVParseError, DegenerateColumnError, EmptyDataError

DEFAULT_NA_TOKENS = frozenset({"", "NA", "?"})

SCALINGS = ("covariance", "correlation")
MISSING_POLICIES = ("drop_columns", "fail")

_SCALING_ALIASES = {"cov": "covariance", "cor": "correlation", "corr": "correlation"}


@dataclass(frozen=True)
class RawTable:
    """Parsed but unprocessed table. Missing cells are NaN."""

    column_names: list
    values: np.ndarray
    row_labels: list | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a 2-D grid")
        if len(self.column_names) != values.shape[1]:
            raise ValueError(
                f"{len(self.column_names)} column names for {values.shape[1]} columns"
            )
        if len(set(self.column_names)) != len(self.column_names):
            raise ValueError("column names must be unique")
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class DataMatrix:
    """Centred (optionally unit-norm scaled) ``n x p`` data matrix.

    Attributes
    ----------
    values : ndarray of shape (n, p)
        Read-only centred data.
    column_names : list of str
    scaling : {"covariance", "correlation"}
    column_means, column_scales : ndarray of shape (p,)
        Statistics removed from the raw columns; ``column_scales`` is all
        ones under covariance scaling.
    total_variance : float
        Squared Frobenius norm of ``values``, i.e. ``trace(X'X)``.
    dropped_columns : list of str
        Names of raw columns removed for missing values.
    """

    values: np.ndarray
    column_names: list
    scaling: str
    column_means: np.ndarray
    column_scales: np.ndarray
    total_variance: float
    dropped_columns: list = field(default_factory=list)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @classmethod
    def from_array(cls, X, column_names=None, scaling="covariance"):
        """Centre (and scale) a plain array."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("expected a 2-D array")
        if column_names is None:
            column_names = [f"x{j + 1}" for j in range(X.shape[1])]
        return preprocess(RawTable(list(column_names), X), scaling=scaling)


def _parse_cell(text, na_tokens, row, col):
    token = text.strip()
    if token in na_tokens:
        return np.nan
    try:
        return float(token)
    except ValueError:
        raise CSVParseError(
            f"non-numeric cell {text!r} at data row {row}, column {col}", row=row, column=col
        ) from None


def load_csv(
    path: str | Path,
    has_header: bool = True,
    delimiter: str = ",",
    na_tokens: Iterable[str] = DEFAULT_NA_TOKENS,
    label_column: int | None = None,
    columns: Sequence[int] | None = None,
) -> RawTable:
    """Read a rectangular numeric CSV file.

    ``label_column`` names a column of free-text row labels that is kept
    aside instead of parsed; ``columns`` restricts parsing to the given
    0-based column positions (applied before the label column is removed).
    """
    na_tokens = frozenset(na_tokens)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    if not rows:
        raise EmptyDataError(f"{path}: no rows")

    if has_header:
        header, body = rows[0], rows[1:]
    else:
        header, body = None, rows
    width = len(header) if header is not None else len(body[0]) if body else 0

    for i, r in enumerate(body):
        if len(r) != width:
            raise CSVParseError(
                f"{path}: data row {i} has {len(r)} cells, expected {width}", row=i
            )

    keep = list(range(width)) if columns is None else list(columns)
    if any(c < 0 or c >= width for c in keep):
        raise ValueError(f"column selection {keep} out of range for width {width}")
    if label_column is not None and label_column not in keep:
        keep = [label_column] + keep
    numeric = [c for c in keep if c != label_column]

    if header is not None:
        names = [header[c].strip() for c in numeric]
    else:
        names = [f"x{k + 1}" for k in range(len(numeric))]

    values = np.empty((len(body), len(numeric)))
    for i, r in enumerate(body):
        for k, c in enumerate(numeric):
            values[i, k] = _parse_cell(r[c], na_tokens, i, c)
    labels = [r[label_column] for r in body] if label_column is not None else None
    return RawTable(names, values, labels)


def _normalize_scaling(scaling):
    scaling = _SCALING_ALIASES.get(scaling, scaling)
    if scaling not in SCALINGS:
        raise ValueError(f"scaling must be one of {SCALINGS}, got {scaling!r}")
    return scaling


def preprocess(
    table: RawTable | DataMatrix,
    scaling: str = "covariance",
    missing_policy: str = "drop_columns",
) -> DataMatrix:
    """Drop (or reject) incomplete columns, centre, and optionally scale.

    Correlation scaling divides each centred column by its Euclidean norm,
    so ``X'X`` is the correlation matrix with no ``1/(n-1)`` factor.
    Passing a DataMatrix back in is a no-op up to rounding.
    """
    scaling = _normalize_scaling(scaling)
    if missing_policy not in MISSING_POLICIES:
        raise ValueError(f"missing_policy must be one of {MISSING_POLICIES}")

    names = list(table.column_names)
    values = np.array(table.values, dtype=float)
    previously_dropped = list(getattr(table, "dropped_columns", []))

    missing = np.isnan(values).any(axis=0)
    if missing.any():
        bad = [nm for nm, m in zip(names, missing) if m]
        if missing_policy == "fail":
            raise ValueError(f"missing values in columns {bad}")
        values = values[:, ~missing]
        names = [nm for nm, m in zip(names, missing) if not m]
        previously_dropped += bad
    if values.shape[1] == 0:
        raise EmptyDataError("no columns left after removing missing values")
    if values.shape[0] < 2:
        raise EmptyDataError("at least two rows are required")
    if not np.isfinite(values).all():
        raise ValueError("data contains infinite values")

    means = values.mean(axis=0)
    centred = values - means
    norms = np.sqrt(np.einsum("ij,ij->j", centred, centred))
    raw_norms = np.sqrt(np.einsum("ij,ij->j", values, values))
    constant = norms <= 1e-12 * np.maximum(raw_norms, 1.0)
    centred[:, constant] = 0.0

    if scaling == "correlation":
        if constant.any():
            bad = [nm for nm, c in zip(names, constant) if c]
            raise DegenerateColumnError(f"constant columns cannot be scaled: {bad}")
        scales = norms
        centred = centred / scales
    else:
        if constant.any():
            bad = [nm for nm, c in zip(names, constant) if c]
            warnings.warn(f"constant columns retained with zero variance: {bad}", stacklevel=2)
        scales = np.ones(values.shape[1])

    centred.setflags(write=False)
    return DataMatrix(
        values=centred,
        column_names=names,
        scaling=scaling,
        column_means=means,
        column_scales=scales,
        total_variance=float(np.einsum("ij,ij->", centred, centred)),
        dropped_columns=previously_dropped,
    )


def as_data_matrix(X, scaling="covariance") -> DataMatrix:
    """Return ``X`` unchanged if it is already a DataMatrix, else preprocess it."""
    if isinstance(X, DataMatrix):
        return X
    return DataMatrix.from_array(X, scaling=scaling)
