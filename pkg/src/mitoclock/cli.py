"""Command-line pipeline: growth fit, histogram reweighting, model fits,
rate inversion, quiescence simulations and verification suites.

Pipeline state passes through files (JSON for parameters, CSV for tables,
SVG for plots); every command is deterministic given its flags and the
multi-start seed (--seed or the MITOCLOCK_SEED environment variable).

Exit codes: 0 success, 1 numerical failure (diagnostic JSON on stdout),
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import simulator, spectral, svg
from .errors import MitoclockError, ValidationError
from .fitter import fit_imt, mass_check
from .growth import GrowthSeries, fit_growth, load_growth_csv
from .histogram import load_histogram, normalize, reweight
from .imt_models import ClosedFormRate, Model, model_from_dict, reweighted_density
from .inversion import best_erfc_fit, invert_imt, write_rate_csv


def _load_xy_csv(path):
    """Two-column numeric CSV with optional header and '#' comments."""
    xs, ys = [], []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValidationError(f"expected two columns in {path}: {line!r}")
            try:
                xs.append(float(parts[0]))
                ys.append(float(parts[1]))
            except ValueError:
                if xs:
                    raise ValidationError(f"bad row in {path}: {line!r}") from None
                continue  # header
    if not xs:
        raise ValidationError(f"no data rows in {path}")
    return np.array(xs), np.array(ys)


def _read_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ValidationError(f"{path} does not contain a model object")
    # accept both a bare model object and a full fit-result file
    return model_from_dict(payload.get("model", payload))


def _prefix(args, default_source) -> Path:
    if args.out_prefix is not None:
        prefix = Path(args.out_prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        return prefix
    return Path(default_source).with_suffix("")


def cmd_fit_growth(args) -> int:
    series = load_growth_csv(args.counts_csv)
    if args.window is not None:
        lo, hi = args.window
        keep = (series.times >= lo) & (series.times <= hi)
        series = GrowthSeries(series.times[keep], series.counts[keep])
    fit = fit_growth(series)
    prefix = _prefix(args, args.counts_csv)
    payload = {
        "lambda": fit.lam,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "doubling_time": fit.doubling_time,
    }
    prefix.with_suffix(".json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    log_ratio = np.log(series.counts / series.counts[0])
    with open(f"{prefix}_line.csv", "w", encoding="utf-8") as fh:
        fh.write("t,log_ratio,fit\n")
        for t, y in zip(series.times, log_ratio):
            fh.write(f"{float(t)!r},{float(y)!r},{float(fit.intercept + fit.lam * t)!r}\n")
    print(
        f"lambda={fit.lam:.6g} 1/h  R2={fit.r_squared:.5f}  "
        f"doubling={'-' if fit.doubling_time is None else f'{fit.doubling_time:.4g} h'}"
    )
    return 0


def cmd_fit_imt(args) -> int:
    hist = normalize(load_histogram(args.hist_csv, bin_width=args.dt))
    reweighted = reweight(hist, args.lam)
    result = fit_imt(reweighted, args.family, seed=args.seed)
    check = mass_check(result)
    prefix = _prefix(args, args.hist_csv)
    prefix.with_suffix(".json").write_text(result.to_json() + "\n")
    Path(f"{prefix}_model.json").write_text(result.model.to_json() + "\n")
    fitted = reweighted_density(result.model, args.lam, reweighted.midpoints)
    with open(f"{prefix}_curve.csv", "w", encoding="utf-8") as fh:
        fh.write("age,height,fit\n")
        for a, hgt, f in zip(reweighted.midpoints, reweighted.heights, fitted):
            fh.write(f"{float(a)!r},{float(hgt)!r},{float(f)!r}\n")
    status = "mass-ok" if check.ok else f"mass-warn(dev={check.deviation:.3f})"
    print(result.summary_line() + f"  {status}")
    return 0


def cmd_invert(args) -> int:
    ages, values = _load_xy_csv(args.imt_csv)
    rate = invert_imt(ages, values)
    prefix = _prefix(args, args.imt_csv)
    write_rate_csv(rate, f"{prefix}_beta.csv")
    model, comparison = best_erfc_fit(rate)
    payload = {
        "best_erfc": model.param_dict(),
        "r_squared": comparison.r_squared,
        "max_abs_err": comparison.max_abs_err,
        "ages": [float(rate.ages[0]), float(rate.ages[-1])],
    }
    Path(f"{prefix}_erfc.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(
        f"beta table on [{rate.ages[0]:g}, {rate.ages[-1]:g}] h; best erfc: "
        f"beta0={model.beta0:.5g} m={model.m:.5g} sigma={model.sigma:.5g} "
        f"R2={comparison.r_squared:.6f}"
    )
    return 0


def cmd_simulate(args) -> int:
    model = _read_model(args.model_json)
    rate = ClosedFormRate(model)
    prefix = _prefix(args, args.model_json)
    curves = []
    for f in args.f:
        config = simulator.SimConfig(
            rate=rate,
            mu=model.death_rate,
            f=f,
            t_end=args.t_end,
            dt=args.dt,
            mu_q=args.mu_q,
        )
        out = simulator.simulate(config)
        tag = f"{prefix}_f{f:g}"
        out.to_csv(f"{tag}.csv")
        out.profile_to_csv(f"{tag}_profile.csv")
        curves.append((f"f={f:g}", out.times, np.log(out.N / out.N[0])))
        print(f"f={f:g}: N({args.t_end:g} h)/N(0) = {out.N[-1] / out.N[0]:.4f}")
    svg.line_plot(
        curves,
        f"{prefix}_dose_sweep.svg",
        title="Growth under division-triggered quiescence",
        x_label="t (h)",
        y_label="ln N(t)/N(0)",
    )
    return 0


def _verify_eigen(rate, mu):
    pair = spectral.equilibrium(rate, mu)
    grid = pair.grid
    residual = abs(spectral.renewal_residual(rate, mu, pair.lam, grid))
    delta = 0.01
    shifted = spectral.solve_lambda(rate, mu + delta, grid=grid)
    shift_err = abs(shifted - (pair.lam - delta))
    mass_err = abs(float(np.trapezoid(pair.p_hat, grid)) - 1.0)
    adjoint_err = abs(float(np.trapezoid(pair.p_hat * pair.phi, grid)) - 1.0)
    births = 2.0 * float(np.trapezoid(np.asarray(rate(grid)) * pair.p_hat, grid))
    boundary = abs(pair.p_hat[0] - births) / pair.p_hat[0]
    return [
        ("renewal residual < 1e-10", residual < 1e-10, residual),
        ("mu-shift identity < 1e-10", shift_err < 1e-10, shift_err),
        ("p_hat mass within 1e-8", mass_err < 1e-8, mass_err),
        ("adjoint normalization within 1e-6", adjoint_err < 1e-6, adjoint_err),
        ("boundary identity (trapezoid) within 1e-4", boundary < 1e-4, boundary),
    ]


def _verify_gre(rate, mu):
    pair = spectral.equilibrium(rate, mu, step=0.05)
    config = simulator.SimConfig(
        rate=rate, mu=mu, f=0.0, t_end=100.0, dt=0.05, a_max=float(pair.grid[-1])
    )
    times = [0.0, 25.0, 50.0, 75.0, 100.0]
    out = simulator.simulate(config, snapshot_times=times)
    centers = out.final_profile.ages
    adjoint = spectral.AgeProfile(centers, np.interp(centers, pair.grid, pair.phi))
    values = [
        spectral.gre_functional(spectral.AgeProfile(centers, snap), adjoint, pair.lam, t)
        for t, snap in out.snapshots
    ]
    drift = max(abs(v / values[0] - 1.0) for v in values)
    return [("entropy-weighted mass drift < 0.5% over 100 h", drift < 0.005, drift)]


def _verify_imt_convergence(rate, mu, model):
    t0 = max(model.m - 4.0 * model.sigma, 0.0)
    windows = [t0 + model.m + k * model.sigma for k in (5.0, 10.0, 15.0)]
    gaps = [simulator.imt_experiment(rate, mu, t0, w)[1] for w in windows]
    checks = [
        (f"L1 gap at T={windows[-1]:.1f} < 0.02", gaps[-1] < 0.02, gaps[-1]),
        ("L1 gap decreases with T", gaps[0] > gaps[1] > gaps[2], tuple(gaps)),
    ]
    return checks


def _verify_fraction(rate, mu):
    checks = []
    t0 = 20.0
    for f in (0.0, 0.3, 0.6, 0.84):
        config = simulator.SimConfig(rate=rate, mu=0.0, f=f, t_end=t0, dt=0.05)
        frac = simulator.quiescent_fraction(config, t0)
        checks.append((f"|F - f| < 1e-4 at f={f:g}, mu=0", abs(frac - f) < 1e-4, abs(frac - f)))
    if mu > 0:
        for f in (0.3, 0.84):
            config = simulator.SimConfig(rate=rate, mu=mu, f=f, t_end=t0, dt=0.05)
            frac = simulator.quiescent_fraction(config, t0)
            checks.append(
                (f"|F - f| < 0.01 at f={f:g}, mu={mu:g}", abs(frac - f) < 0.01, abs(frac - f))
            )
    return checks


def cmd_verify(args) -> int:
    model = _read_model(args.model_json)
    rate = ClosedFormRate(model)
    mu = model.death_rate
    if args.suite == "eigen":
        checks = _verify_eigen(rate, mu)
    elif args.suite == "gre":
        checks = _verify_gre(rate, mu)
    elif args.suite == "imt-convergence":
        checks = _verify_imt_convergence(rate, mu, model)
    else:
        checks = _verify_fraction(rate, mu)
    all_ok = True
    for name, ok, value in checks:
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({value})")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mitoclock",
        description="Division-rate recovery from IMT histograms and quiescence simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-growth", help="estimate the growth rate from a t,N CSV")
    p.add_argument("counts_csv")
    p.add_argument("--window", nargs=2, type=float, metavar=("T_LO", "T_HI"))
    p.add_argument("--out-prefix")
    p.set_defaults(func=cmd_fit_growth)

    p = sub.add_parser(
        "fit-imt",
        help="fit a reweighted IMT histogram",
        description=(
            "Fits the growth-reweighted model curve to the reweighted histogram. "
            "With --lambda 0 the reweighting is the identity on the density but the "
            "model keeps its factor 2 for the two daughters per division, so the "
            "fitted curve carries twice the histogram mass; parameters absorb the "
            "scale accordingly."
        ),
    )
    p.add_argument("hist_csv")
    p.add_argument("--dt", type=float, required=True, help="bin width in hours")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="growth rate in 1/h")
    p.add_argument("--family", required=True, choices=["gamma1", "gamma2", "emg", "erfc", "erfc-mu"])
    p.add_argument("--seed", type=int, default=None, help="multi-start seed (default: env)")
    p.add_argument("--out-prefix")
    p.set_defaults(func=cmd_fit_imt)

    p = sub.add_parser("invert", help="recover a tabulated division rate from an age,I CSV")
    p.add_argument("imt_csv")
    p.add_argument("--out-prefix")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("simulate", help="run dose-dependent quiescence simulations")
    p.add_argument("model_json")
    p.add_argument("--f", nargs="+", type=float, required=True, help="quiescent fractions")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--mu-q", type=float, default=None, help="quiescent death rate (default: mu)")
    p.add_argument("--out-prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a numerical verification suite")
    p.add_argument("model_json")
    p.add_argument(
        "--suite", required=True, choices=["eigen", "gre", "imt-convergence", "fraction"]
    )
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MitoclockError as exc:
        if isinstance(exc, ValueError):
            print(f"error: {exc}", file=sys.stderr)
            return 2
        # numerical failure: ConfigurationError, FitConvergenceError, ...
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True))
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
