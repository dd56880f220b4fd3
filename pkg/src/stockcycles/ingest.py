"""Monthly series ingestion: CSV parsing, CPI deflation and shock excision."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    CoverageError,
    DegenerateBaseError,
    DegenerateError,
    EmptySeriesError,
    FormatError,
    GapError,
    InputIOError,
    UnknownCountryError,
)

_DATE_RE = re.compile(r"^\s*(\d{4})[-:](\d{1,2})\s*$")


@dataclass(frozen=True, order=True)
class YearMonth:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise FormatError(f"month {self.month} outside 1..12")

    @classmethod
    def parse(cls, text: str) -> "YearMonth":
        """Parse ``YYYY-MM`` or ``YYYY:MM``."""
        m = _DATE_RE.match(str(text))
        if m is None:
            raise FormatError(f"cannot parse date {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def from_ordinal(cls, ordinal: int) -> "YearMonth":
        year, month0 = divmod(int(ordinal), 12)
        return cls(year, month0 + 1)

    @property
    def ordinal(self) -> int:
        return self.year * 12 + self.month - 1

    def shift(self, months: int) -> "YearMonth":
        return YearMonth.from_ordinal(self.ordinal + months)

    def __sub__(self, other: "YearMonth") -> int:
        return self.ordinal - other.ordinal

    def __str__(self):
        return f"{self.year:04d}-{self.month:02d}"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MonthlySeries:
    """Gap-free monthly observations beginning at ``start``."""

    start: YearMonth
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 1 or values.size == 0:
            raise EmptySeriesError("a monthly series needs at least one value")
        if not np.all(np.isfinite(values)):
            raise FormatError("series contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def end(self) -> YearMonth:
        return self.start.shift(len(self) - 1)

    @property
    def dates(self) -> list[YearMonth]:
        return [self.start.shift(i) for i in range(len(self))]

    def index_of(self, month: YearMonth) -> int:
        return month - self.start

    def contains(self, month: YearMonth) -> bool:
        return 0 <= self.index_of(month) < len(self)

    def slice(self, first: YearMonth, last: YearMonth) -> "MonthlySeries":
        """Inclusive sub-range; both ends must lie inside the series."""
        if not (self.contains(first) and self.contains(last)) or last < first:
            raise CoverageError(f"range {first}..{last} not inside {self.start}..{self.end}")
        i, j = self.index_of(first), self.index_of(last)
        return MonthlySeries(first, self.values[i : j + 1], self.label)

    def to_sampled(self) -> "SampledSeries":
        return SampledSeries(np.arange(len(self), dtype=float), self.values, origin=self.start)


@dataclass(frozen=True)
class SampledSeries:
    """Observations at (possibly irregular) times, in months since ``origin``."""

    times: np.ndarray
    values: np.ndarray
    origin: Optional[YearMonth] = None

    def __post_init__(self):
        times = _frozen_array(self.times)
        values = _frozen_array(self.values)
        if times.shape != values.shape or times.ndim != 1:
            raise FormatError("times and values must be 1-d and of equal length")
        if times.size and np.any(np.diff(times) <= 0):
            raise FormatError("times must be strictly increasing")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(times))):
            raise FormatError("non-finite times or values")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def is_regular(self) -> bool:
        if self.times.size < 3:
            return True
        steps = np.diff(self.times)
        return bool(np.all(steps == steps[0]))

    def with_values(self, values) -> "SampledSeries":
        return SampledSeries(self.times, values, self.origin)


@dataclass(frozen=True)
class ShockWindow:
    start: YearMonth
    end: Optional[YearMonth]  # None: open-ended, runs through the end of any series
    reason: str = ""

    def __post_init__(self):
        if self.end is not None and self.end < self.start:
            raise FormatError(f"shock window ends ({self.end}) before it starts ({self.start})")

    def covers(self, month: YearMonth) -> bool:
        return self.start <= month and (self.end is None or month <= self.end)


@dataclass(frozen=True)
class ShockCalendar:
    windows: tuple[ShockWindow, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))

    @property
    def open_ended(self) -> bool:
        return any(w.end is None for w in self.windows)

    def covers(self, month: YearMonth) -> bool:
        return any(w.covers(month) for w in self.windows)

    def to_json(self) -> str:
        rows = [
            {"start": str(w.start), "end": None if w.end is None else str(w.end), "reason": w.reason}
            for w in self.windows
        ]
        return json.dumps(rows, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ShockCalendar":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"calendar is not valid JSON: {exc}") from None
        if not isinstance(rows, list):
            raise FormatError("calendar must be a JSON array")
        windows = []
        for i, row in enumerate(rows, start=1):
            try:
                start = YearMonth.parse(row["start"])
                end = None if row.get("end") is None else YearMonth.parse(row["end"])
            except (KeyError, TypeError):
                raise FormatError("calendar entry needs a 'start' field", row=i) from None
            except FormatError as exc:
                raise FormatError(str(exc), row=i) from None
            windows.append(ShockWindow(start, end, str(row.get("reason", ""))))
        return cls(tuple(windows))


# --------------------------------------------------------------------------
# CSV


def parse_csv(text, value_column: Optional[str] = None, date_column: Optional[str] = None,
              label: Optional[str] = None) -> MonthlySeries:
    """Read a monthly series from CSV text (or a text stream).

    The date column defaults to a column named ``date`` (case-insensitive),
    otherwise the first column. The value column defaults to the first
    non-date column. Rows may come in any order; they are sorted by date and
    must then form an unbroken run of months.
    """
    if not isinstance(text, str):
        text = text.read()
    reader = csv.reader(io.StringIO(text.lstrip("﻿")))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise FormatError("empty CSV input") from None
    if not any(header):
        raise FormatError("missing header row")

    if date_column is None:
        lowered = [h.lower() for h in header]
        date_idx = lowered.index("date") if "date" in lowered else 0
    elif date_column in header:
        date_idx = header.index(date_column)
    else:
        raise FormatError(f"no column named {date_column!r}")
    if value_column is None:
        others = [i for i in range(len(header)) if i != date_idx]
        if not others:
            raise FormatError("CSV has no value column")
        value_idx = others[0]
    elif value_column in header:
        value_idx = header.index(value_column)
    else:
        raise FormatError(f"no column named {value_column!r}")

    rows = []
    for rowno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) <= max(date_idx, value_idx):
            raise FormatError("too few fields", row=rowno)
        try:
            month = YearMonth.parse(row[date_idx])
        except FormatError:
            raise FormatError(f"bad date {row[date_idx]!r}", row=rowno) from None
        try:
            value = float(row[value_idx])
        except ValueError:
            raise FormatError(f"bad value {row[value_idx]!r}", row=rowno) from None
        if not math.isfinite(value):
            raise FormatError(f"non-finite value {row[value_idx]!r}", row=rowno)
        rows.append((month, value, rowno))

    if not rows:
        raise FormatError("CSV has a header but no data rows")
    rows.sort(key=lambda r: r[0])
    for (prev, _, _), (cur, _, rowno) in zip(rows, rows[1:]):
        if cur == prev:
            raise FormatError(f"duplicate month {cur}", row=rowno)
        if cur - prev != 1:
            raise GapError(f"missing month(s) between {prev} and {cur}")
    name = label if label is not None else header[value_idx]
    return MonthlySeries(rows[0][0], [r[1] for r in rows], name)


def serialize_csv(series: MonthlySeries, value_column: Optional[str] = None) -> str:
    col = value_column or series.label or "value"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", col])
    for month, v in zip(series.dates, series.values):
        writer.writerow([str(month), repr(float(v))])
    return out.getvalue()


def read_csv(path, value_column=None, date_column=None) -> MonthlySeries:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_csv(text, value_column=value_column, date_column=date_column)


# --------------------------------------------------------------------------
# Transformations


def deflate(index: MonthlySeries, cpi: MonthlySeries, base: YearMonth) -> MonthlySeries:
    """Express ``index`` in constant prices of the ``base`` month.

    value_t = index_t * cpi[base] / cpi_t
    """
    if not (cpi.contains(index.start) and cpi.contains(index.end)):
        raise CoverageError(
            f"CPI covers {cpi.start}..{cpi.end}, index needs {index.start}..{index.end}"
        )
    if not cpi.contains(base):
        raise CoverageError(f"CPI has no value at base month {base}")
    cpi_base = cpi.values[cpi.index_of(base)]
    if cpi_base == 0.0:
        raise DegenerateBaseError(f"CPI is zero at base month {base}")
    i0 = cpi.index_of(index.start)
    cpi_t = cpi.values[i0 : i0 + len(index)]
    if np.any(cpi_t == 0.0):
        raise DegenerateError("CPI contains zero values inside the index range")
    # ratio first: a constant CPI then leaves values bit-identical
    return MonthlySeries(index.start, index.values * (cpi_base / cpi_t), index.label)


def excise(series: MonthlySeries, calendar: ShockCalendar) -> SampledSeries:
    """Drop months covered by any calendar window.

    Survivors keep their month offset from ``series.start`` as the time
    coordinate, so the output is irregularly sampled whenever anything was
    removed.
    """
    keep = np.array([not calendar.covers(m) for m in series.dates], dtype=bool)
    if not keep.any():
        raise EmptySeriesError("every observation falls inside a shock window")
    times = np.arange(len(series), dtype=float)[keep]
    return SampledSeries(times, series.values[keep], origin=series.start)


# --------------------------------------------------------------------------
# Built-in shock calendars

_COMMON = [
    ("1962-10", "1962-10", "Cuban missile crisis"),
    ("1974-01", "1974-12", "oil price increase"),
    ("1979-11", "1980-06", "oil price increase"),
    ("1999-12", "2003-03", "oil price increase"),
]
_TAIL = [
    ("2003-02", "2003-04", "Iraq war"),
    ("2020-02", None, "Covid pandemic"),
]

_CALENDARS = {
    "US": _COMMON + [("2001-09", "2002-01", "terrorist attacks")] + _TAIL,
    "JAPAN": _COMMON
    + [("2001-09", "2001-11", "terrorist attacks")]
    + _TAIL
    + [("2011-03", "2011-04", "Fukushima nuclear accident")],
    "GERMANY": _COMMON
    + [("1990-03", "1990-12", "reunification"), ("2001-09", "2001-11", "terrorist attacks")]
    + _TAIL,
}
_ALIASES = {"USA": "US", "UNITED STATES": "US", "JP": "JAPAN", "JPN": "JAPAN", "DE": "GERMANY", "DEU": "GERMANY"}

COUNTRIES = ("US", "Japan", "Germany")


def canonical_country(country: str) -> str:
    key = str(country).strip().upper()
    key = _ALIASES.get(key, key)
    if key not in _CALENDARS:
        raise UnknownCountryError(f"unknown country {country!r}; expected one of {', '.join(COUNTRIES)}")
    return {"US": "US", "JAPAN": "Japan", "GERMANY": "Germany"}[key]


def builtin_calendar(country: str) -> ShockCalendar:
    """Exogenous-shock windows for US, Japan or Germany."""
    key = canonical_country(country).upper()
    windows = [
        ShockWindow(YearMonth.parse(s), None if e is None else YearMonth.parse(e), why)
        for s, e, why in _CALENDARS[key]
    ]
    return ShockCalendar(tuple(windows))
