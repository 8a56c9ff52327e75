"""Contiguous per-day value series with explicit missing days."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass

import numpy as np

DAY = dt.timedelta(days=1)


class SeriesError(ValueError):
    """Malformed or degenerate series input."""


def parse_date(s: str) -> dt.date:
    return dt.date.fromisoformat(s)


@dataclass
class DailySeries:
    """Values for a contiguous run of calendar days starting at ``start``.

    One entry per day; ``None`` marks a day with no data (distinct from 0.0).
    Dates are implicit: day ``i`` is ``start + i`` days.
    """

    start: dt.date
    values: list

    def __post_init__(self):
        if len(self.values) < 1:
            raise SeriesError("series must cover at least one day")
        self.values = [None if v is None else float(v) for v in self.values]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> dt.date:
        """Last covered day, inclusive."""
        return self.start + DAY * (len(self.values) - 1)

    def dates(self) -> list[dt.date]:
        return [self.start + DAY * i for i in range(len(self.values))]

    def index(self, day: dt.date) -> int:
        i = (day - self.start).days
        if not 0 <= i < len(self.values):
            raise SeriesError(f"{day} outside series range {self.start}..{self.end}")
        return i

    def get(self, day: dt.date):
        return self.values[self.index(day)]

    def with_values(self, values) -> "DailySeries":
        """New series over the same date range."""
        out = DailySeries(self.start, list(values))
        if len(out) != len(self):
            raise SeriesError("replacement values must cover the same days")
        return out

    def slice(self, first: dt.date, last: dt.date) -> "DailySeries":
        """Sub-series for the inclusive day interval [first, last]."""
        if last < first:
            raise SeriesError(f"empty interval {first}..{last}")
        i, j = self.index(first), self.index(last)
        return DailySeries(first, self.values[i : j + 1])

    def same_range(self, other: "DailySeries") -> bool:
        return self.start == other.start and len(self) == len(other)

    def to_array(self) -> np.ndarray:
        """Float array with NaN for missing days."""
        return np.array([np.nan if v is None else v for v in self.values], dtype=float)

    @classmethod
    def from_array(cls, start: dt.date, arr) -> "DailySeries":
        return cls(start, [None if not np.isfinite(v) else float(v) for v in arr])

    def missing_count(self) -> int:
        return sum(1 for v in self.values if v is None)

    # --- CSV round-trip: header `date,value`, empty value field for missing ---

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "value"])
            for day, v in zip(self.dates(), self.values):
                w.writerow([day.isoformat(), "" if v is None else repr(v)])

    @classmethod
    def read_csv(cls, path) -> "DailySeries":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header != ["date", "value"]:
                raise SeriesError(f"{path}: expected header date,value")
            for row in r:
                if len(row) != 2:
                    raise SeriesError(f"{path}: malformed row {row!r}")
                rows.append((parse_date(row[0]), None if row[1] == "" else float(row[1])))
        if not rows:
            raise SeriesError(f"{path}: no data rows")
        start = rows[0][0]
        for i, (day, _) in enumerate(rows):
            if day != start + DAY * i:
                raise SeriesError(f"{path}: days not contiguous at {day}")
        return cls(start, [v for _, v in rows])


def check_aligned(series: dict) -> None:
    """Raise unless all series in a mapping share one date range."""
    items = list(series.items())
    if not items:
        raise SeriesError("no series given")
    _, first = items[0]
    for name, s in items[1:]:
        if not first.same_range(s):
            raise SeriesError(
                f"series {name!r} covers {s.start}..{s.end}, "
                f"expected {first.start}..{first.end}"
            )
