"""Series normalization, smoothing, differentiation, and phase segmentation.

The change-point statistic is the per-day average of smoothed squared
gradients of the smoothed standardized category fractions: where many
categories swing at once, the curve peaks. Peaks above one standard
deviation over the curve's mean mark collective change.

Smoothing is a trailing ("boxcar") moving average so every value depends
only on past days; this keeps downstream detection causal. Two trailing
passes delay a step change's gradient peak by about ``k - 1`` days, so
reported change-point dates compensate for that group delay (see
``change_points_from_peaks``).
"""

from __future__ import annotations

import datetime as dt
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .series import DAY, DailySeries, check_aligned, parse_date

DEFAULT_SMOOTHING_DAYS = 7  # one week


class SignalError(ValueError):
    """Degenerate or mis-shaped signal input."""


def z_standardize(series: DailySeries) -> DailySeries:
    """Standard scores against the whole-period mean and population std.

    Missing days are skipped and stay missing. Raises on fewer than two
    observed values or a constant series.
    """
    arr = series.to_array()
    obs = arr[np.isfinite(arr)]
    if obs.size < 2:
        raise SignalError("need at least two observed values to standardize")
    mu = float(obs.mean())
    sigma = float(obs.std())
    if sigma == 0.0:
        raise SignalError("constant series has no spread to standardize")
    return series.with_values(
        [None if v is None else (v - mu) / sigma for v in series.values]
    )


def minmax_normalize(series: DailySeries) -> DailySeries:
    """Rescale observed values to [0, 1] over the whole period.

    A constant series maps to all zeros with a warning.
    """
    arr = series.to_array()
    obs = arr[np.isfinite(arr)]
    if obs.size < 1:
        raise SignalError("no observed values to normalize")
    lo, hi = float(obs.min()), float(obs.max())
    if hi == lo:
        warnings.warn("constant series min-max normalized to all zeros", stacklevel=2)
        return series.with_values([None if v is None else 0.0 for v in series.values])
    rng = hi - lo
    return series.with_values(
        [None if v is None else (v - lo) / rng for v in series.values]
    )


def smooth_boxcar(series: DailySeries, k: int = DEFAULT_SMOOTHING_DAYS) -> DailySeries:
    """Trailing moving average: the mean of the most recent ``k`` daily values.

    Before day ``k - 1`` the mean runs over whatever prefix exists, so the
    output covers the same days as the input. Missing values are excluded
    from each window; an all-missing window stays missing.
    """
    if k < 1:
        raise SignalError(f"smoothing window must be >= 1, got {k}")
    vals = series.values
    out = []
    for t in range(len(vals)):
        window = [v for v in vals[max(0, t - k + 1) : t + 1] if v is not None]
        out.append(sum(window) / len(window) if window else None)
    return series.with_values(out)


def gradient(series: DailySeries) -> DailySeries:
    """Daily rate of change: central differences inside, one-sided at the ends.

    Interior days use (x[t+1] - x[t-1]) / 2; exact on affine series.
    Requires a complete series of length >= 2.
    """
    if len(series) < 2:
        raise SignalError("gradient needs at least two days")
    if series.missing_count():
        raise SignalError("gradient requires a complete series")
    return series.with_values(np.gradient(series.to_array()))


def aggregate_gradient(
    z_by_category: dict,
    k: int = DEFAULT_SMOOTHING_DAYS,
    squared: bool = True,
) -> DailySeries:
    """Average change intensity across categories.

    Per category: smooth, differentiate, square (or take absolute value),
    smooth again; then the unweighted mean across all categories. All
    series must share one date range and be complete.
    """
    check_aligned(z_by_category)
    curves = []
    for name in sorted(z_by_category):
        z = z_by_category[name]
        g = gradient(smooth_boxcar(z, k)).to_array()
        g = g * g if squared else np.abs(g)
        curves.append(smooth_boxcar(z.with_values(g), k).to_array())
    template = next(iter(z_by_category.values()))
    return template.with_values(np.mean(curves, axis=0))


def find_peaks(series: DailySeries, threshold_multiplier: float = 1.0) -> list:
    """Dates of strict local maxima above mean + multiplier * population std.

    Endpoints are never peaks. Requires a complete series of length >= 3.
    """
    if len(series) < 3:
        raise SignalError("peak finding needs at least three days")
    if series.missing_count():
        raise SignalError("peak finding requires a complete series")
    arr = series.to_array()
    threshold = float(arr.mean()) + threshold_multiplier * float(arr.std())
    dates = series.dates()
    return [
        dates[t]
        for t in range(1, len(arr) - 1)
        if arr[t] > arr[t - 1] and arr[t] > arr[t + 1] and arr[t] > threshold
    ]


def smoothing_warmup_days(k: int) -> int:
    """Days at the series head where double-smoothed gradients still mix
    partial windows: ``2 * (k - 1) + 1``."""
    return 2 * (k - 1) + 1


def change_points_from_peaks(
    peaks: list,
    series_start: dt.date,
    window_end: dt.date,
    k: int = DEFAULT_SMOOTHING_DAYS,
) -> list:
    """Map gradient-peak dates to the days the underlying change began.

    Two corrections, both deterministic and data-independent:

    * peaks inside the smoothing warm-up span are discarded; partial
      windows there inflate gradients regardless of the data;
    * each remaining peak is shifted back by the two-pass trailing-boxcar
      group delay of ``k - 1`` days, which is where a step change's
      gradient response actually starts.

    Results are deduplicated, sorted, and kept strictly inside the window.
    """
    warmup = smoothing_warmup_days(k)
    out = []
    for peak in peaks:
        if (peak - series_start).days < warmup:
            continue
        cp = peak - DAY * (k - 1)
        if series_start < cp < window_end and cp not in out:
            out.append(cp)
    return sorted(out)


@dataclass(frozen=True)
class Phase:
    """A named contiguous run of days; both endpoints inclusive."""

    name: str
    start: dt.date
    end: dt.date


def segment_phases(change_points: list, window, names: list) -> list:
    """Partition the window into phases; each change-point day begins the
    next phase. Needs exactly one more name than change-points."""
    start, end = window
    if end < start:
        raise SignalError(f"empty window {start}..{end}")
    cps = list(change_points)
    if cps != sorted(set(cps)):
        raise SignalError("change-points must be strictly increasing")
    for cp in cps:
        if not start < cp <= end - DAY * 0:
            if not start < cp:
                raise SignalError(f"change-point {cp} not inside ({start}, {end})")
        if cp >= end:
            raise SignalError(f"change-point {cp} not inside ({start}, {end})")
    if len(names) != len(cps) + 1:
        raise SignalError(f"{len(cps)} change-points need {len(cps) + 1} phase names")
    bounds = [start] + cps + [end + DAY]
    return [
        Phase(names[i], bounds[i], bounds[i + 1] - DAY)
        for i in range(len(names))
    ]


@dataclass
class ChangePointReport:
    """Detected collective change-points with the gradient curve behind them."""

    gradient: DailySeries
    change_points: list
    phases: list
    k: int = DEFAULT_SMOOTHING_DAYS
    threshold_multiplier: float = 1.0
    squared: bool = True

    def to_json(self) -> str:
        payload = {
            "k": self.k,
            "threshold_multiplier": self.threshold_multiplier,
            "squared": self.squared,
            "change_points": [d.isoformat() for d in self.change_points],
            "phases": [
                {"name": p.name, "start": p.start.isoformat(), "end": p.end.isoformat()}
                for p in self.phases
            ],
            "gradient": {
                "start": self.gradient.start.isoformat(),
                "values": self.gradient.values,
            },
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ChangePointReport":
        payload = json.loads(text)
        return cls(
            gradient=DailySeries(
                parse_date(payload["gradient"]["start"]), payload["gradient"]["values"]
            ),
            change_points=[parse_date(d) for d in payload["change_points"]],
            phases=[
                Phase(p["name"], parse_date(p["start"]), parse_date(p["end"]))
                for p in payload["phases"]
            ],
            k=payload["k"],
            threshold_multiplier=payload["threshold_multiplier"],
            squared=payload["squared"],
        )


def detect_change_points(
    z_by_category: dict,
    window,
    phase_names: list = None,
    k: int = DEFAULT_SMOOTHING_DAYS,
    threshold_multiplier: float = 1.0,
    squared: bool = True,
) -> ChangePointReport:
    """Full detection pass: gradient curve, peaks, corrected change-points,
    and the resulting phase segmentation.

    ``phase_names`` applies only when it matches the number of detected
    phases; otherwise phases get generated names.
    """
    nabla = aggregate_gradient(z_by_category, k=k, squared=squared)
    peaks = find_peaks(nabla, threshold_multiplier)
    cps = change_points_from_peaks(peaks, nabla.start, window[1], k=k)
    if phase_names is None or len(phase_names) != len(cps) + 1:
        names = [f"phase {i + 1}" for i in range(len(cps) + 1)]
    else:
        names = list(phase_names)
    return ChangePointReport(
        gradient=nabla,
        change_points=cps,
        phases=segment_phases(cps, window, names),
        k=k,
        threshold_multiplier=threshold_multiplier,
        squared=squared,
    )


def peak_increase(series: DailySeries, interval) -> tuple:
    """Day of the interval's maximum and its relative increase over the
    whole-period mean (0.5 means +50%)."""
    first, last = interval
    if last < first:
        raise SignalError(f"empty interval {first}..{last}")
    arr = series.to_array()
    obs = arr[np.isfinite(arr)]
    if obs.size == 0:
        raise SignalError("series has no observed values")
    mu = float(obs.mean())
    if mu == 0.0:
        raise SignalError("whole-period mean is zero; relative increase undefined")
    sub = series.slice(first, last)
    sub_arr = sub.to_array()
    if not np.isfinite(sub_arr).any():
        raise SignalError(f"interval {first}..{last} has no observed values")
    idx = int(np.nanargmax(sub_arr))
    return sub.start + DAY * idx, (float(sub_arr[idx]) - mu) / mu


def percent_change(series: DailySeries, reference_days: int = 1) -> DailySeries:
    """Relative deviation from the mean over the first ``reference_days``.

    Computable in real time: day t needs only the reference window and
    f(t). Raises when the category is absent (mean zero) in the reference
    window.
    """
    if not 1 <= reference_days <= len(series):
        raise SignalError(f"reference window of {reference_days} days out of range")
    ref = [v for v in series.values[:reference_days] if v is not None]
    if not ref:
        raise SignalError("reference window has no observed values")
    mu = sum(ref) / len(ref)
    if mu == 0.0:
        raise SignalError("category absent in reference window")
    return series.with_values(
        [None if v is None else (v - mu) / mu for v in series.values]
    )


def reference_mean(series: DailySeries, reference_days: int = 1) -> float:
    """Mean of the first ``reference_days`` observed values (the Δ% baseline)."""
    if not 1 <= reference_days <= len(series):
        raise SignalError(f"reference window of {reference_days} days out of range")
    ref = [v for v in series.values[:reference_days] if v is not None]
    if not ref:
        raise SignalError("reference window has no observed values")
    return sum(ref) / len(ref)
