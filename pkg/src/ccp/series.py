"""Multivariate time series container and delimited-file IO.

Time indices are 1-based throughout the package: a series of length T
covers t = 1..T and row t of the underlying array is ``values[t - 1]``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class MultiSeries:
    """A length-T, dimension-d real-valued series.

    values : float64 array of shape (T, d), read-only.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError(f"series must be a (T, d) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("series contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def t_len(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]


def as_values(y):
    """Coerce a MultiSeries or array-like to a (T, d) float64 array."""
    if isinstance(y, MultiSeries):
        return y.values
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"expected a (T, d) array, got shape {arr.shape}")
    return arr


def load_csv(path):
    """Read a comma-delimited series (one row per time point).

    A single non-numeric header row is tolerated and skipped.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise InputError(f"{path} is empty")

    def parse(row):
        return [float(tok) for tok in row.split(",")]

    start = 0
    try:
        parse(lines[0])
    except ValueError:
        start = 1
    rows = []
    for i, ln in enumerate(lines[start:], start=start + 1):
        try:
            rows.append(parse(ln))
        except ValueError as exc:
            raise InputError(f"{path}: line {i} is not numeric") from exc
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InputError(f"{path}: inconsistent column counts {sorted(widths)}")
    return MultiSeries(np.asarray(rows, dtype=np.float64))


def save_csv(series, path, header=None):
    """Write a MultiSeries as comma-delimited text."""
    vals = series.values if isinstance(series, MultiSeries) else np.asarray(series)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in vals:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
