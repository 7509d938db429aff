"""Command-line interface.

Subcommands: ``synth`` writes a sheet to a field file, ``estimate`` fits a
field file and writes a JSON report, ``mc`` drives a Monte Carlo experiment
from a JSON config, ``gmatrix`` dumps the covariance model for given
settings.  Exit codes: 0 success, 2 configuration or input error, 3
numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .covmodel import CovModelConfig, config_for_system, model_covariance, two_step_fit
from .errors import ConfigError, FbsheetError, FieldFormatError
from .estimator import build_system, fit_system
from .harness import (
    ExperimentConfig,
    load_field,
    logscale_export,
    run_experiment,
    save_field,
    write_estimates_csv,
    write_summary_csv,
)
from .synthesis import synth_fbs
from .wavelet import auto_octave_box, available_count, daubechies_filter, octave_box

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _octaves_for(dims, filt, j_low, j_high, min_axis_coeffs=2):
    if j_high is None:
        return auto_octave_box(dims, filt, j_low, min_axis_coeffs)
    lows = j_low if isinstance(j_low, tuple) else (j_low,) * len(dims)
    highs = j_high if isinstance(j_high, tuple) else (j_high,) * len(dims)
    if len(lows) == 1:
        lows = lows * len(dims)
    if len(highs) == 1:
        highs = highs * len(dims)
    return octave_box(lows, highs)


def _cmd_synth(args) -> int:
    field = synth_fbs(args.hurst, args.dims, args.seed)
    save_field(field, args.out)
    print(f"wrote {args.out}: dims={field.dims} hurst={field.hurst_truth}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    field = load_field(args.field)
    filt = daubechies_filter(args.n_vanishing)
    octaves = _octaves_for(field.dims, filt, args.j_low, args.j_high)
    system = build_system(field, filt, octaves)
    if args.method == "two_step":
        report = two_step_fit(system, config_for_system(system))
    else:
        report = fit_system(system)
    payload = {
        "method": report.method,
        "hurst": [float(v) for v in report.hurst],
        "intercept": report.intercept,
        "std_errors": [
            float(v) for v in np.sqrt(np.diag(report.covariance)[: len(report.hurst)])
        ],
        "covariance": [[float(v) for v in row] for row in report.covariance],
        "octaves": [list(j) for j in system.octaves],
        "counts": [int(v) for v in system.counts],
        "out_of_range": report.out_of_range,
        "dims": list(field.dims),
        "hurst_truth": list(field.hurst_truth) if field.hurst_truth else None,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    if args.logscale:
        logscale_export(system, report, args.logscale)
    print(
        f"{report.method}: hurst="
        + ",".join(f"{v:.4f}" for v in report.hurst)
        + (f" (report: {args.out})" if args.out else "")
    )
    return EXIT_OK


def _cmd_mc(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        config = ExperimentConfig.from_dict(
            {**_config_as_dict(config), "seed": args.seed}
        )
    result = run_experiment(config, threads=args.threads)
    out_dir = Path(args.out) if args.out else Path(".")
    if args.out:
        out_dir.mkdir(parents=True, exist_ok=True)
    out_summary = args.out_summary or config.out_summary or out_dir / "summary.csv"
    out_estimates = args.out_estimates or config.out_estimates or out_dir / "estimates.csv"
    write_summary_csv(result, out_summary)
    write_estimates_csv(result, out_estimates)
    for row in result.summary.rows:
        print(
            f"{row.estimator} axis {row.axis}: mean={row.mean:.4f} "
            f"std={row.std:.4f} rmse={row.rmse:.4f}"
        )
    print(f"replicates={result.summary.replicates} failures={result.failures}")
    print(f"wrote {out_summary}, {out_estimates}")
    return EXIT_OK


def _config_as_dict(config: ExperimentConfig) -> dict:
    return {
        "hurst": list(config.hurst),
        "dims": list(config.dims),
        "replicates": config.replicates,
        "seed": config.seed,
        "n_vanishing": config.n_vanishing,
        "j_low": config.j_low,
        "j_high": config.j_high,
        "estimators": list(config.estimators),
        "min_axis_coeffs": config.min_axis_coeffs,
        "out_summary": config.out_summary,
        "out_estimates": config.out_estimates,
    }


def _cmd_gmatrix(args) -> int:
    filt = daubechies_filter(args.n_vanishing)
    octaves = _octaves_for(args.dims, filt, args.j_low, args.j_high)
    axis_counts = tuple(
        tuple(available_count(n, j, filt) for j, n in zip(octave, args.dims))
        for octave in octaves
    )
    config = CovModelConfig(
        octaves=tuple(octaves),
        axis_counts=axis_counts,
        cascade_depth=args.depth,
        lag_cap=args.lag_cap,
    )
    cov = model_covariance(args.hurst, config, filt)
    header = "octave," + ",".join("|".join(str(v) for v in j) for j in octaves)
    lines = [header]
    for idx, octave in enumerate(octaves):
        label = "|".join(str(v) for v in octave)
        lines.append(label + "," + ",".join(f"{v:.10g}" for v in cov[idx]))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}: {cov.shape[0]}x{cov.shape[1]} covariance model")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbsheet",
        description="Fractional Brownian sheet synthesis and Hurst estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a sheet and write it to a field file")
    p.add_argument("--hurst", type=_floats, required=True, help="comma-separated, e.g. 0.3,0.8")
    p.add_argument("--dims", type=_ints, required=True, help="comma-separated, e.g. 512,512")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("estimate", help="estimate the Hurst vector of a field file")
    p.add_argument("--field", required=True, help="input field file")
    p.add_argument("--method", choices=("ols", "two_step"), default="two_step")
    p.add_argument("--n-vanishing", type=int, default=3)
    p.add_argument("--j-low", type=int, default=3)
    p.add_argument("--j-high", type=int, default=None)
    p.add_argument("--out", default=None, help="JSON report path")
    p.add_argument("--logscale", default=None, help="optional per-octave CSV")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("mc", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="output directory for the CSV files")
    p.add_argument("--out-summary", default=None)
    p.add_argument("--out-estimates", default=None)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("gmatrix", help="write the covariance model for given settings")
    p.add_argument("--hurst", type=_floats, required=True)
    p.add_argument("--dims", type=_ints, required=True)
    p.add_argument("--n-vanishing", type=int, default=3)
    p.add_argument("--j-low", type=int, default=3)
    p.add_argument("--j-high", type=int, default=None)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--lag-cap", type=int, default=128)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gmatrix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FieldFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FbsheetError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
