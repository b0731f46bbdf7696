"""Numeric recovery of the division rate from a tabulated IMT density.

With no death the density and the rate are linked by

    rate(a) = density(a) / integral_a^inf density,

so a sampled density can be inverted pointwise.  The denominator decays to
zero in the tail, so the quotient is only reported on the range where it
stays above a floor relative to the total mass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import TruncationWarning, ValidationError
from .imt_models import Model, TabulatedRate

DENOMINATOR_FLOOR = 1e-10  # times total mass; below this the quotient is 0/0 noise
TAIL_BIAS_GUARD = 1e3  # denominator must exceed this multiple of the estimated missing tail


def _missing_tail_estimate(ages: np.ndarray, values: np.ndarray) -> float:
    """Mass beyond the table, from the terminal log-slope and its drift.

    With local decay rate r(a) = -d(log I)/da, the missing mass is
    I_end/r * (1 - r'/r^2 + ...); the quadratic log fit supplies both terms.
    """
    last = values[-1]
    if last <= 0:
        return 0.0
    window = max(5, ages.size // 50)
    tail_ages = ages[-window:]
    tail_vals = values[-window:]
    positive = tail_vals > 0
    if positive.sum() < 3 or tail_vals[positive][0] <= last:
        return last * (ages[-1] - ages[0])  # non-decaying tail: be pessimistic
    x = tail_ages[positive] - ages[-1]
    y = np.log(tail_vals[positive])
    deg = 2 if x.size >= 4 else 1
    coeffs = np.polyfit(x, y, deg)
    if deg == 2:
        rate = -coeffs[1]
        rate_slope = -2.0 * coeffs[0]
    else:
        rate = -coeffs[0]
        rate_slope = 0.0
    if rate <= 0:
        return last * (ages[-1] - ages[0])
    correction = 1.0 - rate_slope / (rate * rate)
    if not (0.0 < correction < 10.0):
        correction = 1.0
    return last / rate * correction


def invert_imt(ages, values, tail_tol: float = 1e-6) -> TabulatedRate:
    """Invert a tabulated IMT density into a tabulated division rate.

    The tail integral uses the composite trapezoid over the table plus the
    estimated mass beyond the last age (terminal decay rate continued), which
    requires the input to have decayed: values[-1] must be below
    tail_tol * peak.  The returned table is truncated to ages where the
    within-table integral both exceeds DENOMINATOR_FLOOR times the total mass
    and dominates the estimated missing tail by TAIL_BIAS_GUARD, so that
    uncertainty in the tail estimate cannot bias the quotient; a
    TruncationWarning reports the last reliable age if that happens before
    the end of the table.
    """
    ages = np.asarray(ages, dtype=float)
    values = np.asarray(values, dtype=float)
    if ages.ndim != 1 or ages.shape != values.shape or ages.size < 3:
        raise ValidationError("need matching 1-d arrays with at least 3 samples")
    if np.any(np.diff(ages) <= 0):
        raise ValidationError("ages must be strictly increasing")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValidationError("density values must be finite and nonnegative")
    peak = values.max()
    if peak <= 0:
        raise ValidationError("density is identically zero")
    if values[-1] > tail_tol * peak:
        raise ValidationError(
            f"density has not decayed at the last age ({values[-1]:.3g} > "
            f"{tail_tol:g} * peak); extend the table"
        )

    segments = 0.5 * (values[1:] + values[:-1]) * np.diff(ages)
    total = segments.sum()
    inside = np.concatenate((np.cumsum(segments[::-1])[::-1], [0.0]))
    missing = _missing_tail_estimate(ages, values)
    floor = max(DENOMINATOR_FLOOR * total, TAIL_BIAS_GUARD * missing)

    reliable = inside >= floor
    cut = int(np.argmin(reliable)) if not reliable.all() else ages.size
    if cut < 2:
        raise ValidationError("tail integral underflows immediately; density too degenerate")
    if cut < ages.size - 1:
        warnings.warn(
            f"division rate truncated to ages <= {ages[cut - 1]:g} "
            f"(tail integral below floor beyond that)",
            TruncationWarning,
            stacklevel=2,
        )
    return TabulatedRate(ages[:cut], values[:cut] / (inside[:cut] + missing))


@dataclass(frozen=True)
class ErfcComparison:
    """Agreement between a tabulated rate and an erfc-shaped candidate."""

    r_squared: float
    max_abs_err: float


def erfc_distance(rate: TabulatedRate, beta0: float, m: float, sigma: float) -> ErfcComparison:
    """Compare a tabulated rate against beta0*erfc((m - a)/sigma) on its grid."""
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    if rate.ages.size == 0:
        raise ValidationError("empty rate table")
    candidate = beta0 * special.erfc((m - rate.ages) / sigma)
    resid = rate.values - candidate
    ss_res = float(np.dot(resid, resid))
    centered = rate.values - rate.values.mean()
    ss_tot = float(np.dot(centered, centered))
    r_squared = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot
    return ErfcComparison(r_squared=r_squared, max_abs_err=float(np.abs(resid).max()))


def best_erfc_fit(rate: TabulatedRate) -> tuple[Model, ErfcComparison]:
    """Least-squares erfc-shaped rate closest to a tabulated one."""
    ages, values = rate.ages, rate.values
    top = values.max()
    if top <= 0:
        raise ValidationError("rate table is identically zero")
    # plateau level ~ 2*beta0; half-rise locates m; rise width scales sigma
    beta0_init = max(0.5 * values[-1], 0.25 * top, 1e-6)
    above = ages[values > 0.5 * top]
    m_init = float(above[0]) if above.size else float(ages[ages.size // 2])
    sigma_init = max(0.05 * (ages[-1] - ages[0]), 1e-3)

    def residuals(theta):
        b0, m, s = theta
        return b0 * special.erfc((m - ages) / s) - values

    sol = optimize.least_squares(
        residuals,
        x0=[beta0_init, m_init, sigma_init],
        bounds=([1e-9, 0.0, 1e-6], [np.inf, np.inf, np.inf]),
    )
    b0, m, s = (float(v) for v in sol.x)
    model = Model(family="erfc", beta0=b0, m=m, sigma=s)
    return model, erfc_distance(rate, b0, m, s)


def write_rate_csv(rate: TabulatedRate, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("age,beta\n")
        for a, b in zip(rate.ages, rate.values):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def read_rate_csv(path) -> TabulatedRate:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return TabulatedRate(data[:, 0], data[:, 1])
