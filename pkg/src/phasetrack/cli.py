"""Command-line front end: bound tables, steady-state covariances, single
simulation records, and flux sweeps with CSV output.

Exit codes: 0 success, 2 invalid parameters or spec, 3 numerical failure
(divergent bound, stalled iteration).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from .bounds import (
    BoundQuery,
    filter_mse_power_law,
    filter_mse_quadrature,
    qcrb_power_law,
    qcrb_quadrature,
    smoother_mse_quadrature,
    tabulated_spectrum,
)
from .errors import NumericalError, ValidationError
from .lg import (
    build_lg_system,
    retro_covariance,
    riccati_residual,
    smoother_covariance,
    smoother_covariance_closed_form,
    solve_filter_covariance,
)
from .phase_process import PhaseModel
from .simulation import default_config, run_abc, simulate_record, smooth_record
from .sweep import parse_sweep_spec, run_sweep

__all__ = ["main"]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def cmd_bounds(args) -> int:
    if args.spectrum_file:
        density = tabulated_spectrum(args.spectrum_file)
        query = BoundQuery(density, args.flux)
    else:
        if args.p is None:
            raise ValidationError("bounds needs either --p or --spectrum-file")
        query = BoundQuery(PhaseModel(args.p, args.kappa), args.flux)
    # quadrature first: divergent inputs surface as a numerical failure
    quad = {
        "qcrb": qcrb_quadrature(query, return_error=True),
        "filter": filter_mse_quadrature(query, return_error=True),
        "smoother": smoother_mse_quadrature(query, return_error=True),
    }
    closed = None
    if not args.spectrum_file:
        closed = {
            "qcrb": qcrb_power_law(args.p, args.kappa, args.flux),
            "filter": filter_mse_power_law(args.p, args.kappa, args.flux),
            "smoother": qcrb_power_law(args.p, args.kappa, args.flux),
        }
    labels = {"qcrb": "QCRB", "filter": "filter MSE", "smoother": "smoother MSE"}
    for key in ("qcrb", "filter", "smoother"):
        val, err = quad[key]
        line = f"{labels[key]:<14}"
        if closed is not None:
            line += f"{_fmt(closed[key]):>14}"
        line += f"   quadrature {_fmt(val)} +- {err:.2g}"
        print(line)
    ratio_base = closed if closed is not None else {k: quad[k][0] for k in quad}
    print(f"{'filter/QCRB':<14}{_fmt(ratio_base['filter'] / ratio_base['qcrb']):>14}")
    return 0


def _print_matrix(name: str, mat: np.ndarray) -> None:
    print(f"{name} =")
    for row in np.atleast_2d(mat):
        print("  [" + ", ".join(f"{v: .9g}" for v in row) + "]")


def cmd_riccati(args) -> int:
    vf = solve_filter_covariance(args.p)
    vr = retro_covariance(vf)
    vs = smoother_covariance(vf, vr)
    vs_closed = smoother_covariance_closed_form(args.p)
    _print_matrix("Vt_F (causal)", vf)
    _print_matrix("Vt_R (anticausal)", vr)
    _print_matrix("Vt_S (two-sided)", vs)
    n = args.p // 2 - 1
    print(f"recurrence residual = {riccati_residual(vf, n):.3e}")
    print(f"closed-form smoother deviation = {np.max(np.abs(vs - vs_closed)):.3e}")
    return 0


def _record_csv_rows(record):
    def col(arr, i):
        if arr is None:
            return float("nan")
        return float(arr[i])

    for i in range(len(record.t)):
        yield [
            repr(float(record.t[i])),
            repr(float(record.phi[i])),
            repr(float(record.theta[i])),
            repr(float(record.y[i])),
            repr(col(record.phi_f, i)),
            repr(col(record.phi_s, i)),
            repr(col(record.phi_abc, i)),
        ]


def cmd_simulate(args) -> int:
    if not args.flux > 0:
        raise ValidationError("simulate needs --flux > 0")
    system = build_lg_system(args.p, args.kappa, args.flux)
    if args.estimator == "abc" and args.cutoff is not None:
        dampings = (args.cutoff,) + (0.0,) * (args.p // 2 - 1)
        model = PhaseModel(args.p, args.kappa, dampings)
    else:
        model = PhaseModel(args.p, args.kappa)
    config = default_config(
        system,
        seed=args.seed,
        duration_factor=args.duration_factor,
        dt_factor=args.dt_factor,
        linearized=args.linearized,
    )
    if args.estimator == "abc":
        if args.chi is not None:
            chi = args.chi
        elif args.p == 2:
            chi = math.sqrt(system.mu)  # known optimum for the random-walk phase
        else:
            raise ValidationError(f"--chi is required for estimator=abc with p={args.p}")
        record = run_abc(model, system, config, chi)
    else:
        record = simulate_record(model, system, config)
        if args.estimator == "smoother":
            record = smooth_record(record, system)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "phi", "theta", "y", "phi_f", "phi_s", "phi_abc"])
        writer.writerows(_record_csv_rows(record))
    print(f"wrote {len(record.t)} steps to {args.output}")
    return 0


def cmd_sweep(args) -> int:
    spec = parse_sweep_spec(args.spec)
    rows = run_sweep(spec, args.output, workers=args.workers)
    print(f"wrote {len(rows)} rows to {args.output}")
    print(f"{'p':>3} {'grid':>10} {'estimator':>14} {'mse/lg_filter':>14}")
    for row in rows:
        grid_val = row["N_over_kappa"] ** ((row["p"] - 1.0) / row["p"])
        print(
            f"{row['p']:>3} {grid_val:>10.4g} {row['estimator']:>14} "
            f"{row['mse'] / row['lg_filter_mse']:>14.4g}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasetrack",
        description="Bounds, steady-state estimators, and adaptive homodyne simulations "
        "for a time-varying optical phase with power-law spectrum.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="print QCRB, filter and smoother MSE for a spectrum")
    b.add_argument("--p", type=float, default=None, help="spectral exponent (> 1)")
    b.add_argument("--kappa", type=float, default=1.0, help="rate constant kappa (1/s)")
    b.add_argument("--flux", type=float, required=True, help="photon flux N (1/s)")
    b.add_argument("--spectrum-file", default=None, help="CSV of omega,density rows instead of --p")
    b.set_defaults(func=cmd_bounds)

    r = sub.add_parser("riccati", help="print the normalized steady-state covariances")
    r.add_argument("--p", type=int, required=True, help="even spectral exponent, 2..20")
    r.set_defaults(func=cmd_riccati)

    s = sub.add_parser("simulate", help="write one simulated record as CSV")
    s.add_argument("--p", type=int, required=True, help="even spectral exponent")
    s.add_argument("--kappa", type=float, default=1.0)
    s.add_argument("--flux", type=float, required=True)
    s.add_argument("--estimator", choices=("filter", "smoother", "abc"), default="filter")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", required=True)
    s.add_argument("--chi", type=float, default=None, help="window rate for estimator=abc")
    s.add_argument("--cutoff", type=float, default=None, help="low-frequency cutoff for estimator=abc")
    s.add_argument("--linearized", action="store_true")
    s.add_argument("--duration-factor", type=float, default=200.0)
    s.add_argument("--dt-factor", type=float, default=0.01)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a flux sweep from an INI spec")
    w.add_argument("spec", help="sweep spec file")
    w.add_argument("--output", "-o", required=True, help="output CSV path")
    w.add_argument("--workers", type=int, default=1, help="process pool size for sweep points")
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
