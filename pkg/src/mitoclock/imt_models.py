"""Closed-form intermitotic-time (IMT) density families and their division rates.

Five families are supported, keyed by the names used on the command line:

    gamma1    shifted gamma, linear prefactor          params (m, sigma)
    gamma2    shifted gamma, quadratic prefactor       params (m, sigma)
    emg       exponentially modified Gaussian          params (beta0, m, sigma)
    erfc      division rate is an error function       params (beta0, m, sigma)
    erfc-mu   erfc rate plus a constant death rate     params (beta0, m, sigma, mu)

Every family provides the IMT density `imt_density` and its growth-rate
reweighted form `reweighted_density`.  All except `emg` also provide the
division rate in closed form (`division_rate`) together with its integral
(`cumulative_hazard`); the emg rate must be recovered numerically through
the `inversion` module.

Throughout, ages and times are in hours, rates in 1/hour.  The hazard
interpretation ties the pieces together: the probability that a cell has
not divided by age a is exp(-cumulative_hazard(a)), and the density of
ages at division is rate(a) * exp(-hazard(a) - mu*a), normalized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy import special

from .errors import UnsupportedVariantError, ValidationError

FAMILIES = ("gamma1", "gamma2", "emg", "erfc", "erfc-mu")

_SQRT_PI = math.sqrt(math.pi)


def erfc(z):
    """Complementary error function, 1 - (2/sqrt(pi)) * integral_0^z exp(-t^2) dt.

    Accepts scalars or arrays; absolute error is at machine level, far below
    the 1e-12 the fitting pipeline relies on.
    """
    return special.erfc(z)


def erfc_integral(m: float, sigma: float, a):
    """Integral of erfc((m - a')/sigma) for a' from 0 to a, in closed form."""
    z0 = m / sigma
    z = (m - np.asarray(a, dtype=float)) / sigma
    const = m * special.erfc(z0) - (sigma / _SQRT_PI) * np.exp(-z0 * z0)
    return const - sigma * z * special.erfc(z) + (sigma / _SQRT_PI) * np.exp(-z * z)


@dataclass(frozen=True)
class Model:
    """One member of an IMT model family (tagged union over FAMILIES)."""

    family: str
    m: float
    sigma: float
    beta0: float | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if not (np.isfinite(self.m) and self.m >= 0):
            raise ValidationError(f"m must be nonnegative, got {self.m}")
        if self.family in ("emg", "erfc", "erfc-mu"):
            if self.beta0 is None or not (np.isfinite(self.beta0) and self.beta0 > 0):
                raise ValidationError(f"{self.family} needs beta0 > 0, got {self.beta0}")
        elif self.beta0 is not None:
            raise ValidationError(f"{self.family} takes no beta0")
        if self.family == "erfc-mu":
            if self.mu is None or not (np.isfinite(self.mu) and self.mu >= 0):
                raise ValidationError(f"erfc-mu needs mu >= 0, got {self.mu}")
        elif self.mu is not None:
            raise ValidationError(f"{self.family} takes no mu")

    @property
    def death_rate(self) -> float:
        return self.mu if self.mu is not None else 0.0

    def param_dict(self) -> dict:
        out = {"family": self.family, "m": self.m, "sigma": self.sigma}
        if self.beta0 is not None:
            out["beta0"] = self.beta0
        if self.mu is not None:
            out["mu"] = self.mu
        return out

    def to_json(self) -> str:
        return json.dumps(self.param_dict(), sort_keys=True)


def model_from_dict(d: dict) -> Model:
    try:
        family = d["family"]
        m = float(d["m"])
        sigma = float(d["sigma"])
    except KeyError as exc:
        raise ValidationError(f"model JSON missing key {exc}") from None
    beta0 = d.get("beta0")
    mu = d.get("mu")
    return Model(
        family=family,
        m=m,
        sigma=sigma,
        beta0=None if beta0 is None else float(beta0),
        mu=None if mu is None else float(mu),
    )


def model_from_json(text: str) -> Model:
    return model_from_dict(json.loads(text))


def division_rate(model: Model, a):
    """Age-dependent division rate beta(a), in closed form.

    Not available for the emg family, whose rate has no closed form;
    recover it numerically with inversion.invert_imt instead.
    """
    a = np.asarray(a, dtype=float)
    if model.family == "gamma1":
        x = np.maximum(a - model.m, 0.0)
        s = model.sigma
        return x / (s * (s + x))
    if model.family == "gamma2":
        x = np.maximum(a - model.m, 0.0)
        s = model.sigma
        return np.where(x > 0, x * x / (s * (2 * s * s + 2 * s * x + x * x)), 0.0)
    if model.family in ("erfc", "erfc-mu"):
        return model.beta0 * special.erfc((model.m - a) / model.sigma)
    raise UnsupportedVariantError(
        "the emg family has no closed-form division rate; "
        "sample its density and use inversion.invert_imt"
    )


def cumulative_hazard(model: Model, a):
    """Integral of the division rate from 0 to a, in closed form."""
    a = np.asarray(a, dtype=float)
    if model.family == "gamma1":
        x = np.maximum(a - model.m, 0.0) / model.sigma
        return x - np.log1p(x)
    if model.family == "gamma2":
        x = np.maximum(a - model.m, 0.0) / model.sigma
        return x - np.log1p(x * (2.0 + x) / 2.0)
    if model.family in ("erfc", "erfc-mu"):
        return model.beta0 * erfc_integral(model.m, model.sigma, a)
    raise UnsupportedVariantError(
        "the emg family has no closed-form hazard; "
        "sample its density and use inversion.invert_imt"
    )


def _emg_density(beta0: float, m: float, sigma: float, a: np.ndarray) -> np.ndarray:
    # Stable split: for z > 0 use the scaled erfcx form, whose exponent
    # -(z - beta0*sigma)^2 never overflows; for z <= 0 the direct exponent
    # is already <= -(beta0*sigma)^2.
    scalar = a.ndim == 0
    z = (m - np.atleast_1d(a)) / sigma
    bs = beta0 * sigma
    pos = z > 0
    out = np.empty_like(z)
    zp = z[pos]
    out[pos] = special.erfcx(zp) * np.exp(-((zp - bs) ** 2))
    zn = z[~pos]
    out[~pos] = special.erfc(zn) * np.exp(-bs * bs + 2.0 * bs * zn)
    out *= beta0
    return out[0] if scalar else out


@lru_cache(maxsize=256)
def _erfc_mu_norm(beta0: float, m: float, sigma: float, mu: float) -> float:
    """Normalizing mass of the erfc-mu density, by adaptive quadrature."""
    a_max = m + 40.0 * sigma

    def integrand(a):
        return (
            beta0
            * special.erfc((m - a) / sigma)
            * math.exp(-beta0 * erfc_integral(m, sigma, a) - mu * a)
        )

    points = [m] if 0.0 < m < a_max else None
    value, _ = integrate.quad(integrand, 0.0, a_max, points=points, limit=200)
    return value


def imt_density(model: Model, a):
    """IMT density I(a): normalized density of ages at division.

    Families without death integrate to exactly 1; the erfc-mu family is
    normalized by quadrature.
    """
    a = np.asarray(a, dtype=float)
    if model.family == "gamma1":
        x = np.maximum(a - model.m, 0.0)
        s = model.sigma
        return np.where(a > model.m, x / (s * s) * np.exp(-x / s), 0.0)
    if model.family == "gamma2":
        x = np.maximum(a - model.m, 0.0)
        s = model.sigma
        return np.where(a > model.m, x * x / (2 * s**3) * np.exp(-x / s), 0.0)
    if model.family == "emg":
        return _emg_density(model.beta0, model.m, model.sigma, a)
    if model.family == "erfc":
        return division_rate(model, a) * np.exp(-cumulative_hazard(model, a))
    # erfc-mu
    c = _erfc_mu_norm(model.beta0, model.m, model.sigma, model.mu)
    return division_rate(model, a) * np.exp(-cumulative_hazard(model, a) - model.mu * a) / c


def reweighted_density(model: Model, lam: float, a):
    """Growth-rate reweighted density: the fitting target for reweighted histograms.

    For families without death this is 2*I(a)*exp(-lam*a).  For erfc-mu it is
    the normalization-free form 2*rate(a)*exp(-hazard(a) - (mu+lam)*a), which
    integrates to 1 exactly when (rate, mu, lam) solve the growth eigenproblem.
    """
    a = np.asarray(a, dtype=float)
    if model.family == "erfc-mu":
        return (
            2.0
            * division_rate(model, a)
            * np.exp(-cumulative_hazard(model, a) - (model.mu + lam) * a)
        )
    return 2.0 * imt_density(model, a) * np.exp(-lam * a)


class ClosedFormRate:
    """Division rate defined by a closed-form model (any family except emg)."""

    def __init__(self, model: Model):
        if model.family == "emg":
            raise UnsupportedVariantError(
                "emg has no closed-form rate; invert its density to a TabulatedRate"
            )
        self.model = model

    def __call__(self, a):
        return division_rate(self.model, a)

    def hazard(self, a):
        return cumulative_hazard(self.model, a)

    def __repr__(self):
        return f"ClosedFormRate({self.model!r})"


class TabulatedRate:
    """Division rate given by linear interpolation of a table.

    Outside the table the rate is held at the nearest endpoint value; the
    hazard integrates the interpolant exactly.
    """

    def __init__(self, ages, values):
        ages = np.asarray(ages, dtype=float)
        values = np.asarray(values, dtype=float)
        if ages.ndim != 1 or ages.shape != values.shape or ages.size < 2:
            raise ValidationError("rate table needs matching 1-d arrays with >= 2 rows")
        if np.any(np.diff(ages) <= 0):
            raise ValidationError("rate table ages must be strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValidationError("rate table values must be finite and nonnegative")
        self.ages = ages
        self.values = values
        inner = np.concatenate(
            ([0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(ages)))
        )
        # hazard accumulated from age 0, treating the rate as values[0] below the table
        self._node_hazard = inner + values[0] * ages[0]

    def __call__(self, a):
        return np.interp(np.asarray(a, dtype=float), self.ages, self.values)

    def hazard(self, a):
        a = np.asarray(a, dtype=float)
        idx = np.clip(np.searchsorted(self.ages, a, side="right") - 1, 0, self.ages.size - 1)
        base = self._node_hazard[idx]
        da = a - self.ages[idx]
        frag = 0.5 * (self.values[idx] + self(a)) * da
        below = a < self.ages[0]
        out = np.where(below, self.values[0] * a, base + frag)
        return out if out.ndim else float(out)

    def __repr__(self):
        return f"TabulatedRate({self.ages.size} points on [{self.ages[0]}, {self.ages[-1]}])"
