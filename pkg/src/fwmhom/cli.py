"""Command-line front end.

    fwmhom visibility [--config PATH] [--set K=V ...]
    fwmhom dip        [--config PATH] [--set K=V ...] [--seed N] [--out PATH]
    fwmhom rates      ...
    fwmhom montecarlo ...
    fwmhom fit DATA.csv [--t 0.54 --r 0.46] [--residuals PATH]
    fwmhom energy-check 708 583 900 [--rel-tol 1e-3]
    fwmhom show-config

Output is CSV with a one-line header. Exit status is 0 on success, 1 when
a check fails (energy-check) and 2 on invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, default_config_text, load_config
from .dipfit import DipData, DipFitResult, FitError, InconsistentInputError, fit_dip
from .experiment import (
    detection_probabilities,
    fourfold_rate,
    multifold_rate,
    run_exact,
    visibility_multipair,
)
from .fock import BeamSplitter, TruncationError
from .montecarlo import CountRecord, TrialPlan, estimate_visibility, simulate
from .spectral import WavelengthTriple, check_energy_conservation, pdc_visibility

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID = 0, 1, 2


def _prob(x: float) -> str:
    return f"{x:.9e}"


def _emit(rows: list[list], out: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _run_config(args) -> RunConfig:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"run.seed={args.seed}")
    return load_config(args.config, overrides)


def _row_seed(seed: int, row: int) -> int:
    return int(np.random.SeedSequence([seed, row]).generate_state(1, np.uint64)[0])


def _plan(rc: RunConfig, config, seed: int) -> TrialPlan:
    return TrialPlan(
        config,
        pulses=rc["run.pulses"],
        seed=seed,
        batches=rc["run.batches"],
        max_photons=rc["run.max_photons"],
    )


def _backend(rc: RunConfig) -> str | None:
    return None if rc["run.backend"] == "auto" else rc["run.backend"]


def cmd_visibility(args) -> int:
    rc = _run_config(args)
    cfg = rc.experiment()
    report = run_exact(cfg)
    gamma = 1.0 - math.sqrt(cfg.det_i1.eta * cfg.det_i2.eta) / 2.0
    gamma_p = 1.0 - math.sqrt(cfg.det_s3.eta * cfg.det_s4.eta) / 2.0
    mp = visibility_multipair(cfg.source_a.n_bar, gamma, gamma_p)
    rows = [
        ["quantity", "value"],
        ["sigma_ratio", f"{cfg.sigma / cfg.sigma_p:.9g}"],
        ["v_max", f"{cfg.v_max:.9g}"],
        ["v_pdc", f"{pdc_visibility(cfg.sigma, cfg.sigma_p):.9g}"],
        ["v_multipair", f"{mp.first_order:.9g}"],
        ["v_multipair_exact_ratio", f"{mp.exact_ratio:.9g}"],
        ["v_raw", f"{report.visibility_raw:.9g}"],
        ["v_net", f"{report.visibility_net:.9g}"],
    ]
    _emit(rows, args.out)
    return EXIT_OK


def cmd_dip(args) -> int:
    rc = _run_config(args)
    cfg = rc.experiment()
    delays = rc.delay_grid()
    rows = [["delay_s", "p_fourfold_exact", "mc_expected", "mc_fourfold", "mc_err"]]
    for i, delay in enumerate(delays):
        here = replace(cfg, delay=float(delay))
        p = detection_probabilities(here, weights="pmf").fourfold
        record = simulate(_plan(rc, here, _row_seed(rc["run.seed"], i)), _backend(rc), rc["run.workers"])
        rows.append(
            [
                f"{delay:.6e}",
                _prob(p),
                f"{p * record.pulses:.6g}",
                record.fourfold,
                f"{math.sqrt(max(record.fourfold, 1)):.6g}",
            ]
        )
    _emit(rows, args.out)
    return EXIT_OK


def cmd_rates(args) -> int:
    rc = _run_config(args)
    cfg = rc.experiment()
    rep = cfg.pump.rep_rate
    n_bar = cfg.source_a.n_bar
    eta_s = math.sqrt(cfg.det_s3.eta * cfg.det_s4.eta)
    eta_i = math.sqrt(cfg.det_i1.eta * cfg.det_i2.eta)
    k = rc["rates.k_pairs"]
    c4 = fourfold_rate(rep, n_bar, eta_s, eta_i)
    ck = multifold_rate(rep, n_bar, eta_s, eta_i, k)
    header = ["scenario", "k_pairs", "rep_rate", "n_bar", "eta_s", "eta_i", "rate_per_s", "counts_per_60s"]
    rows = [header]
    for name, kk, rate in (("fourfold_coupled", 2, c4), ("multifold_raw", k, ck)):
        rows.append([name, kk, f"{rep:.6g}", f"{n_bar:.6g}", f"{eta_s:.6g}", f"{eta_i:.6g}", _prob(rate), _prob(60 * rate)])
    _emit(rows, args.out)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    rc = _run_config(args)
    cfg = rc.experiment()
    rows = [["delay_s"] + CountRecord.csv_header()]
    records = []
    for i, delay in enumerate((cfg.delay, math.inf)):
        here = replace(cfg, delay=delay)
        rec = simulate(_plan(rc, here, _row_seed(rc["run.seed"], i)), _backend(rc), rc["run.workers"])
        records.append(rec)
        rows.append([f"{delay:.6e}"] + rec.csv_row())
    _emit(rows, args.out)
    try:
        est = estimate_visibility(records[0], records[1])
        print(
            f"# visibility raw {est.raw:.4f} +/- {est.raw_err:.4f}, net {est.net:.4f} +/- {est.net_err:.4f}",
            file=sys.stderr,
        )
    except ZeroDivisionError:
        print("# visibility undefined: no far-delay coincidences", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args) -> int:
    data = DipData.from_csv(args.csv)
    bs = BeamSplitter.from_coefficients(args.t, args.r)
    result: DipFitResult = fit_dip(data, bs)
    _emit([list(DipFitResult.CSV_HEADER), result.csv_row()], args.out)
    residual_path = Path(args.residuals) if args.residuals else Path(args.csv).with_suffix(".residuals.csv")
    rows = [["delay_s", "counts", "model", "residual"]]
    for d, c, res in zip(data.delays, data.counts, result.residuals):
        rows.append([f"{d:.9e}", f"{c:.9g}", f"{c - res:.9g}", f"{res:.9g}"])
    _emit(rows, str(residual_path))
    return EXIT_OK


def cmd_energy_check(args) -> int:
    triple = WavelengthTriple(args.lambda_p * 1e-9, args.lambda_s * 1e-9, args.lambda_i * 1e-9)
    check = check_energy_conservation(triple, args.rel_tol)
    status = "pass" if check.passed else "fail"
    _emit([["status", "mismatch", "rel_tol"], [status, f"{check.mismatch:.6e}", f"{args.rel_tol:.3g}"]], args.out)
    return EXIT_OK if check.passed else EXIT_CHECK_FAILED


def cmd_show_config(args) -> int:
    if args.out:
        Path(args.out).write_text(default_config_text())
    else:
        sys.stdout.write(default_config_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fwmhom", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--set", action="append", metavar="K=V", help="override, e.g. source.n_bar=0.01")
    common.add_argument("--seed", type=int, help="root seed for Monte Carlo runs")
    common.add_argument("--out", help="write CSV here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("visibility", parents=[common], help="spectral, multi-pair, raw and net visibilities").set_defaults(func=cmd_visibility)
    sub.add_parser("dip", parents=[common], help="exact and Monte Carlo fourfold counts over the delay scan").set_defaults(func=cmd_dip)
    sub.add_parser("rates", parents=[common], help="fourfold and multifold coincidence rates").set_defaults(func=cmd_rates)
    sub.add_parser("montecarlo", parents=[common], help="count record at the configured and infinite delay").set_defaults(func=cmd_montecarlo)

    fit = sub.add_parser("fit", help="fit a dip scan (delay_s,counts[,error])")
    fit.add_argument("csv")
    fit.add_argument("--t", type=float, default=0.54, help="coupler transmission (split ratio or amplitude)")
    fit.add_argument("--r", type=float, default=0.46, help="coupler reflection (split ratio or amplitude)")
    fit.add_argument("--residuals", help="residuals CSV path (default: DATA.residuals.csv)")
    fit.add_argument("--out")
    fit.set_defaults(func=cmd_fit)

    energy = sub.add_parser("energy-check", help="check 2/lambda_p = 1/lambda_s + 1/lambda_i (nm)")
    energy.add_argument("lambda_p", type=float)
    energy.add_argument("lambda_s", type=float)
    energy.add_argument("lambda_i", type=float)
    energy.add_argument("--rel-tol", type=float, default=1e-3)
    energy.add_argument("--out")
    energy.set_defaults(func=cmd_energy_check)

    show = sub.add_parser("show-config", help="print the default configuration file")
    show.add_argument("--out")
    show.set_defaults(func=cmd_show_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, TruncationError, FitError, InconsistentInputError, ZeroDivisionError, OSError) as exc:
        print(f"fwmhom {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
