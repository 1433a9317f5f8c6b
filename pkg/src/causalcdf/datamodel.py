"""Core data containers, validation, and CSV ingestion for observational datasets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import EmptyDataError, SchemaError, ValidationError

MISSING_POLICIES = ("drop_row", "fail")


@dataclass(frozen=True)
class ColumnSpec:
    """Names of the outcome, treatment, and confounder columns in a CSV file."""

    outcome: str
    treatment: str
    confounders: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "confounders", tuple(self.confounders))
        if not self.confounders:
            raise ValidationError("at least one confounder column is required")
        names = self.all_columns
        if len(set(names)) != len(names):
            raise ValidationError(f"column names must be distinct, got {names}")

    @property
    def all_columns(self) -> tuple[str, ...]:
        return (self.outcome, self.treatment, *self.confounders)


@dataclass(frozen=True)
class Dataset:
    """Validated sample: outcome ``y``, binary treatment ``a``, confounders ``x``.

    Immutable after construction (arrays are locked), so instances can be
    shared freely across parallel workers.
    """

    y: np.ndarray
    a: np.ndarray
    x: np.ndarray
    col_names: tuple[str, ...]

    def __post_init__(self):
        y = np.array(self.y, dtype=np.float64)
        a_raw = np.asarray(self.a, dtype=np.float64)
        x = np.array(self.x, dtype=np.float64)
        if y.ndim != 1:
            raise ValidationError("y must be a 1-d vector")
        if x.ndim != 2:
            raise ValidationError("x must be a 2-d matrix")
        n = y.shape[0]
        if a_raw.shape != (n,) or x.shape[0] != n:
            raise ValidationError("y, a, and x must have the same number of rows")
        if n < 2:
            raise ValidationError(f"need at least 2 rows, got {n}")
        if not np.isin(a_raw, (0.0, 1.0)).all():
            bad = np.unique(a_raw[~np.isin(a_raw, (0.0, 1.0))])
            raise ValidationError(f"treatment must be coded 0/1, found {bad[:5]}")
        a = a_raw.astype(np.int64)
        if a.sum() < 1 or (1 - a).sum() < 1:
            raise ValidationError("both treatment arms must be non-empty")
        if not np.isfinite(y).all():
            raise ValidationError("outcome contains non-finite values")
        if not np.isfinite(x).all():
            raise ValidationError("confounder matrix contains non-finite values")
        names = tuple(str(c) for c in self.col_names)
        if len(names) != x.shape[1]:
            raise ValidationError(
                f"col_names has {len(names)} entries for {x.shape[1]} columns"
            )
        for arr in (y, a, x):
            arr.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "col_names", names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def take(self, rows: np.ndarray) -> "Dataset":
        """Row-subset copy (used by bootstrap resampling); revalidates invariants."""
        rows = np.asarray(rows)
        return Dataset(self.y[rows], self.a[rows], self.x[rows], self.col_names)

    def to_json_dict(self) -> dict:
        return {
            "col_names": list(self.col_names),
            "y": self.y.tolist(),
            "a": self.a.tolist(),
            "x": self.x.tolist(),
        }


def load_csv(path, spec: ColumnSpec, missing_policy: str = "drop_row") -> tuple[Dataset, int]:
    """Read the named columns from a CSV file into a validated Dataset.

    Returns ``(dataset, n_dropped)`` where ``n_dropped`` counts rows removed
    under the ``drop_row`` policy because a selected cell was missing or not
    numeric.  Comma separator, first-row header, '.' decimal; values are
    parsed as 64-bit floats.
    """
    if missing_policy not in MISSING_POLICIES:
        raise ValidationError(f"missing_policy must be one of {MISSING_POLICIES}")
    frame = pd.read_csv(path)
    missing_cols = [c for c in spec.all_columns if c not in frame.columns]
    if missing_cols:
        raise SchemaError(f"columns not found in {path}: {missing_cols}")
    sub = frame[list(spec.all_columns)].apply(pd.to_numeric, errors="coerce")
    bad_rows = sub.isna().any(axis=1)
    n_dropped = int(bad_rows.sum())
    if n_dropped and missing_policy == "fail":
        raise ValidationError(
            f"{n_dropped} rows contain missing or non-numeric values in selected columns"
        )
    sub = sub.loc[~bad_rows]
    if len(sub) == 0:
        raise EmptyDataError("no rows remain after dropping incomplete ones")
    treatment = sub[spec.treatment].to_numpy()
    if not np.isin(treatment, (0.0, 1.0)).all():
        bad = np.unique(treatment[~np.isin(treatment, (0.0, 1.0))])
        raise ValidationError(
            f"treatment column {spec.treatment!r} must be coded 0/1, found {bad[:5]}"
        )
    dataset = Dataset(
        y=sub[spec.outcome].to_numpy(),
        a=treatment,
        x=sub[list(spec.confounders)].to_numpy(),
        col_names=spec.confounders,
    )
    return dataset, n_dropped


def arm_split(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Indices of treated rows and control rows; together they partition 0..n-1."""
    return np.flatnonzero(d.a == 1), np.flatnonzero(d.a == 0)
