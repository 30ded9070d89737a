"""Monthly time-series container, CSV ingestion and domain transforms.

Everything here is immutable and purely functional: series can be shared
freely across workers and every operation returns a new object.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ContinuityError, DataFormatError
from .validation import check_positive

_DATE_RE = re.compile(r"^(\d{4})-(\d{2})(?:-\d{2})?$")


@dataclass(frozen=True, order=True)
class Month:
    """A calendar month, ordered chronologically."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def parse(cls, text: str) -> "Month":
        """Parse 'YYYY-MM' or 'YYYY-MM-DD' (the day is ignored)."""
        m = _DATE_RE.match(text.strip())
        if m is None:
            raise ValueError(f"cannot parse {text!r} as a YYYY-MM date")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    def __add__(self, months: int) -> "Month":
        idx = self.year * 12 + (self.month - 1) + int(months)
        return Month(idx // 12, idx % 12 + 1)

    def __sub__(self, other: "Month") -> int:
        """Number of months from `other` to `self`."""
        return (self.year - other.year) * 12 + (self.month - other.month)


@dataclass(frozen=True)
class TimeSeries:
    """A dense monthly sequence of real values starting at `start`.

    `values` is stored read-only; consecutive entries are exactly one month
    apart by construction.
    """

    start: Month
    values: np.ndarray
    name: str = "y"

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a non-empty one-dimensional sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must all be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> Month:
        return self.start + (len(self) - 1)

    def months(self) -> list[Month]:
        return [self.start + i for i in range(len(self))]

    def index_of(self, month: Month) -> int:
        offset = month - self.start
        if not 0 <= offset < len(self):
            raise ValueError(f"{month} is outside the series range {self.start}..{self.end}")
        return offset

    def window(self, first: int, length: int, name: str | None = None) -> "TimeSeries":
        """Positional slice of `length` observations starting at index `first`."""
        if first < 0 or length < 1 or first + length > len(self):
            raise ValueError(
                f"window [{first}, {first + length}) out of bounds for length {len(self)}"
            )
        return TimeSeries(self.start + first, self.values[first : first + length], self.name if name is None else name)


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split: training ends at `train_end`, test covers the next `horizon` months."""

    train_end: Month
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")


@dataclass(frozen=True)
class FoldSet:
    """Expanding-window cross-validation folds as (train, validation) index arrays."""

    folds: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.folds) < 1:
            raise ValueError("a FoldSet needs at least one fold")
        for train_idx, val_idx in self.folds:
            if len(val_idx) == 0 or len(train_idx) == 0:
                raise ValueError("folds must have non-empty train and validation slices")
            if train_idx.max() >= val_idx.min():
                raise ValueError("validation indices must follow the train indices")

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def load_csv(path, date_column: str = "date", value_column: str = "value") -> TimeSeries:
    """Read a dense monthly series from a CSV file.

    The file needs a header row naming `date_column` and `value_column`;
    dates must parse as YYYY-MM or YYYY-MM-DD and rows may appear in any
    order. A missing month in the covered range is an error, not a value
    to impute.
    """
    rows: list[tuple[Month, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataFormatError(f"{path}: empty file, expected a header row")
        missing = {date_column, value_column} - set(reader.fieldnames)
        if missing:
            raise DataFormatError(f"{path}: missing column(s) {sorted(missing)}")
        for i, row in enumerate(reader, start=2):  # row 1 is the header
            try:
                month = Month.parse(row[date_column])
            except ValueError as exc:
                raise DataFormatError(f"{path}, row {i}: {exc}") from exc
            try:
                value = float(row[value_column])
            except (TypeError, ValueError) as exc:
                raise DataFormatError(
                    f"{path}, row {i}: cannot parse {row[value_column]!r} as a number"
                ) from exc
            rows.append((month, value))
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    months = [m for m, _ in rows]
    for prev, cur in zip(months, months[1:]):
        if cur - prev == 0:
            raise ContinuityError(f"{path}: duplicate month {cur}")
        if cur - prev > 1:
            raise ContinuityError(f"{path}: missing month {prev + 1}")
    return TimeSeries(months[0], np.array([v for _, v in rows]), name=value_column)


def yoy_inflation(cpi_index: TimeSeries) -> TimeSeries:
    """Year-on-year percentage change of a price-index series.

    The value for month t is 100 * (I_t - I_{t-12}) / I_{t-12}, so the
    output starts twelve months after the input and is twelve observations
    shorter.
    """
    if len(cpi_index) < 13:
        raise ValueError(f"need at least 13 observations for a YoY change, got {len(cpi_index)}")
    check_positive(cpi_index.values, "CPI index")
    v = cpi_index.values
    out = 100.0 * (v[12:] - v[:-12]) / v[:-12]
    return TimeSeries(cpi_index.start + 12, out, name=f"{cpi_index.name}_yoy")


def log_transform(series: TimeSeries) -> TimeSeries:
    """Element-wise base-10 logarithm (variance stabilisation for index data)."""
    check_positive(series.values, series.name)
    return TimeSeries(series.start, np.log10(series.values), name=f"{series.name}_log10")


def split(series: TimeSeries, spec: SplitSpec) -> tuple[TimeSeries, TimeSeries]:
    """Split into a training series ending at `spec.train_end` and the next `spec.horizon` months."""
    cut = series.index_of(spec.train_end) + 1
    if cut + spec.horizon > len(series):
        raise ValueError(
            f"test window {spec.train_end + 1}..{spec.train_end + spec.horizon} "
            f"exceeds the series end {series.end}"
        )
    return series.window(0, cut), series.window(cut, spec.horizon)


def rolling_origin_folds(train, n_folds: int, horizon: int) -> FoldSet:
    """Expanding-window (rolling-origin) cross-validation folds.

    The minimum train slice is len(train) - n_folds * horizon; each fold's
    validation window is the `horizon` observations immediately after its
    train window, and the last validation window ends at the series end.
    `train` may be a TimeSeries, an array, or anything with a length.
    """
    n = len(train)
    if n_folds < 1:
        raise ValueError(f"n_folds must be >= 1, got {n_folds}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    min_train = n - n_folds * horizon
    if min_train < 1:
        raise ValueError(
            f"{n} observations cannot support {n_folds} folds of horizon {horizon} "
            f"(needs at least {n_folds * horizon + 1})"
        )
    folds = []
    for k in range(n_folds):
        cut = min_train + k * horizon
        folds.append((np.arange(cut), np.arange(cut, cut + horizon)))
    return FoldSet(tuple(folds))
