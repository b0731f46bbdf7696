"""Malthusian growth-rate estimation from total-population time series."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class GrowthSeries:
    """Cell counts N(t) at strictly increasing times (hours)."""

    times: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "counts", counts)
        if times.ndim != 1 or times.shape != counts.shape:
            raise ValidationError("times and counts must be 1-d arrays of equal length")
        if times.size < 3:
            raise ValidationError(f"need at least 3 points, got {times.size}")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(counts))):
            raise ValidationError("times and counts must be finite")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("times must be strictly increasing")
        if np.any(counts <= 0):
            raise ValidationError("counts must be positive")


@dataclass(frozen=True)
class GrowthFit:
    """Log-linear fit of N(t): slope lam, intercept, R^2, doubling time ln2/lam."""

    lam: float
    intercept: float
    r_squared: float
    doubling_time: float | None


def fit_growth(series: GrowthSeries) -> GrowthFit:
    """Ordinary least squares of ln(N(t)/N(0)) against t.

    The slope is the Malthusian parameter; the doubling time ln2/lam is
    reported when the slope is positive.
    """
    t = series.times
    y = np.log(series.counts / series.counts[0])
    t_mean = t.mean()
    y_mean = y.mean()
    dt = t - t_mean
    lam = float(np.dot(dt, y - y_mean) / np.dot(dt, dt))
    intercept = float(y_mean - lam * t_mean)
    residuals = y - (intercept + lam * t)
    ss_res = float(np.dot(residuals, residuals))
    ss_tot = float(np.dot(y - y_mean, y - y_mean))
    r_squared = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot
    doubling = math.log(2.0) / lam if lam > 0 else None
    return GrowthFit(lam=lam, intercept=intercept, r_squared=r_squared, doubling_time=doubling)


def load_growth_csv(path) -> GrowthSeries:
    """Read a two-column CSV `t,N`; an optional header row is skipped."""
    times, counts = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ParseError(f"expected two comma-separated columns, got {line!r}", lineno)
            try:
                t, n = float(parts[0]), float(parts[1])
            except ValueError:
                if not times:
                    continue  # header row
                raise ParseError(f"could not parse {line!r}", lineno) from None
            times.append(t)
            counts.append(n)
    if not times:
        raise ValidationError(f"no data rows in {path}")
    return GrowthSeries(times=np.array(times), counts=np.array(counts))
