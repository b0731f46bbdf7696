"""Nonlinear least-squares fitting of reweighted IMT histograms.

The objective is the unweighted sum of squared differences between the model
curve `reweighted_density(model, lam, a_i)` and the bin heights at the bin
midpoints.  The landscape is mildly nonconvex (the minimum age and width
trade off against the rate plateau), so the optimizer runs a seeded
multi-start simplex search followed by a single bounded least-squares
polish of the best start.  Runs are deterministic given the seed, which
defaults to the MITOCLOCK_SEED environment variable, then 0.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import BoundaryWarning, FitConvergenceError, StateError, ValidationError
from .histogram import Histogram, Kind
from .imt_models import FAMILIES, Model, reweighted_density

SEED_ENV_VAR = "MITOCLOCK_SEED"
DEFAULT_N_STARTS = 8

# parameter order per family; bounds keep every candidate evaluable
_PARAM_NAMES = {
    "gamma1": ("m", "sigma"),
    "gamma2": ("m", "sigma"),
    "emg": ("beta0", "m", "sigma"),
    "erfc": ("beta0", "m", "sigma"),
    "erfc-mu": ("beta0", "m", "sigma", "mu"),
}
_LOWER = {"beta0": 1e-6, "m": 0.0, "sigma": 1e-3, "mu": 0.0}


@dataclass(frozen=True)
class FitResult:
    """Fitted model with goodness-of-fit and the unit-mass diagnostic."""

    model: Model
    r_squared: float
    integral_i_tilde: float
    lambda_used: float
    residuals: np.ndarray
    n_evaluations: int

    def summary_line(self) -> str:
        p = self.model
        beta0 = "-" if p.beta0 is None else f"{p.beta0:.5g}"
        mu = "-" if p.mu is None else f"{p.mu:.5g}"
        return (
            f"{p.family} beta0={beta0} m={p.m:.5g} sigma={p.sigma:.5g} mu={mu} "
            f"R2={self.r_squared:.5f} integral={self.integral_i_tilde:.4f}"
        )

    def to_json(self) -> str:
        payload = {
            "model": self.model.param_dict(),
            "r_squared": self.r_squared,
            "integral_i_tilde": self.integral_i_tilde,
            "lambda_used": self.lambda_used,
            "residuals": [float(r) for r in self.residuals],
            "n_evaluations": self.n_evaluations,
        }
        return json.dumps(payload, sort_keys=True, indent=2)


@dataclass(frozen=True)
class MassCheck:
    """Outcome of the a-posteriori unit-mass diagnostic."""

    ok: bool
    deviation: float


def mass_check(result: FitResult, tolerance: float = 0.12) -> MassCheck:
    """Pass iff the fitted curve's total mass is within tolerance of 1."""
    deviation = abs(result.integral_i_tilde - 1.0)
    return MassCheck(ok=deviation <= tolerance, deviation=deviation)


def _model_from_theta(family: str, theta) -> Model:
    kwargs = dict(zip(_PARAM_NAMES[family], (float(v) for v in theta)))
    return Model(family=family, **kwargs)


def _default_init(family: str, h: Histogram) -> np.ndarray:
    mids = h.midpoints
    heights = h.heights
    peak = heights.max()
    above = mids[heights > 0.05 * peak]
    m0 = float(above[0]) if above.size else float(mids[0])
    mean = float((mids * heights).sum() * h.bin_width)
    var = float((((mids - mean) ** 2) * heights).sum() * h.bin_width)
    sigma0 = max(0.5 * math.sqrt(max(var, 0.0)), 2.0 * _LOWER["sigma"])
    beta0 = max(0.5 * peak, 1e-3)
    init = {"m": m0, "sigma": sigma0, "beta0": beta0, "mu": 1e-3}
    return np.array([init[name] for name in _PARAM_NAMES[family]])


def _spread_starts(x0: np.ndarray, names, n_starts: int, rng) -> list[np.ndarray]:
    starts = [x0]
    for _ in range(n_starts - 1):
        jitter = np.exp(rng.uniform(-0.7, 0.7, size=x0.size))
        theta = np.maximum(x0 * jitter, [_LOWER[n] for n in names])
        starts.append(theta)
    return starts


def fit_imt(
    h: Histogram,
    family: str,
    init=None,
    n_starts: int = DEFAULT_N_STARTS,
    seed: int | None = None,
    max_iter: int = 4000,
) -> FitResult:
    """Fit a reweighted histogram with the chosen family's reweighted density.

    Returns the best of `n_starts` seeded simplex descents, polished by a
    bounded least-squares step.  Raises FitConvergenceError (carrying the
    best result found) if no start converges, and emits a BoundaryWarning
    when a fitted parameter is pinned at a bound.
    """
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}, expected one of {FAMILIES}")
    if h.kind is not Kind.REWEIGHTED:
        raise StateError("fit_imt expects a reweighted histogram; call reweight() first")
    if seed is None:
        seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    lam = h.lambda_used
    names = _PARAM_NAMES[family]
    mids = h.midpoints
    heights = h.heights
    n_eval = 0

    def curve(theta):
        return reweighted_density(_model_from_theta(family, theta), lam, mids)

    def objective(theta):
        nonlocal n_eval
        n_eval += 1
        r = curve(theta) - heights
        return float(np.dot(r, r))

    x0 = np.asarray(init, dtype=float) if init is not None else _default_init(family, h)
    if x0.size != len(names):
        raise ValidationError(f"{family} takes {len(names)} parameters {names}, got {x0.size}")
    lower = np.array([_LOWER[n] for n in names])
    x0 = np.maximum(x0, lower)
    bounds = [(lo, None) for lo in lower]

    rng = np.random.default_rng(seed)
    starts = _spread_starts(x0, names, n_starts, rng)

    best = None
    any_converged = False
    for theta0 in starts:
        res = optimize.minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxiter": max_iter, "xatol": 1e-9, "fatol": 1e-14},
        )
        any_converged = any_converged or bool(res.success)
        if best is None or res.fun < best.fun:
            best = res

    def residual_vec(theta):
        nonlocal n_eval
        n_eval += 1
        return curve(theta) - heights

    polish = optimize.least_squares(
        residual_vec,
        np.maximum(best.x, lower + 1e-12),
        bounds=(lower, np.inf),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    theta_best = polish.x if 2.0 * polish.cost <= best.fun else best.x

    model = _model_from_theta(family, theta_best)
    fitted = curve(theta_best)
    residuals = heights - fitted
    ss_res = float(np.dot(residuals, residuals))
    centered = heights - heights.mean()
    ss_tot = float(np.dot(centered, centered))
    r_squared = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot

    result = FitResult(
        model=model,
        r_squared=r_squared,
        integral_i_tilde=_integral_i_tilde(model, lam),
        lambda_used=lam,
        residuals=residuals,
        n_evaluations=n_eval,
    )
    if not any_converged:
        raise FitConvergenceError(
            f"no simplex start converged within {max_iter} iterations", best=result
        )
    pinned = [
        name
        for name, value, lo in zip(names, theta_best, lower)
        if value <= lo + 1e-8 * (1.0 + lo)
    ]
    if pinned:
        warnings.warn(
            f"fitted parameters pinned at their lower bound: {', '.join(pinned)}",
            BoundaryWarning,
            stacklevel=2,
        )
    return result


def _integral_i_tilde(model: Model, lam: float) -> float:
    """Total mass of the fitted reweighted curve, by adaptive quadrature."""
    a_max = model.m + 40.0 * model.sigma

    def f(a):
        return float(reweighted_density(model, lam, a))

    interior = [model.m] if 0.0 < model.m < a_max else None
    value, _ = integrate.quad(f, 0.0, a_max, points=interior, limit=200)
    return value
