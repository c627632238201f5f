"""Command line interface: ``arnig <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 I/O failure.  Statistical
non-convergence is reported in the output, never through the exit code.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .ar import ArNigModel, TimeSeries, simulate
from .diagnostics import detrend_polynomial, pacf, quantile_fan, segment_by_variance, select_order
from .distributions import NigParams
from .estimators import EmConfig, EstimationError, cls_fit, em_fit, yw_fit
from .experiment import PRESETS, ExperimentConfig, run_experiment, write_records
from .io import InputError, dump_json, read_series_csv, to_log_returns, write_series_csv
from .pipeline import PipelineConfig, run_pipeline
from .special import DomainError

EXIT_OK, EXIT_INPUT, EXIT_IO = 0, 2, 3

log = logging.getLogger("arnig")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--case", choices=sorted(PRESETS), help="start from a preset model")
    p.add_argument("--rho", type=_floats, help="AR coefficients, comma separated")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--delta", type=float)


def _model_from_args(args) -> ArNigModel:
    base = PRESETS.get(args.case) if args.case else None
    rho = args.rho if args.rho is not None else (list(base["rho"]) if base else None)
    inn = base["innovation"] if base else None
    pick = lambda val, attr, default: val if val is not None else (getattr(inn, attr) if inn else default)  # noqa: E731
    alpha, delta = pick(args.alpha, "alpha", None), pick(args.delta, "delta", None)
    if rho is None or alpha is None or delta is None:
        raise InputError("model needs --case or all of --rho, --alpha, --delta")
    return ArNigModel(rho, NigParams(alpha, pick(args.beta, "beta", 0.0), pick(args.mu, "mu", 0.0), delta))


def _em_config(args) -> EmConfig:
    return EmConfig(tolerance=args.tolerance, max_iterations=args.max_iter, symmetric=args.symmetric)


def _add_em_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--symmetric", action=argparse.BooleanOptionalAction, default=True, help="fix mu = beta = 0")


def _load(args) -> TimeSeries:
    series = read_series_csv(args.input, args.column)
    if args.input_kind == "price" and args.command == "segment":
        return to_log_returns(series)
    return series


# ------------------------------------------------------------------ commands


def cmd_simulate(args) -> int:
    model = _model_from_args(args)
    series, eps = simulate(model, args.n, args.burn_in, args.seed, return_innovations=True)
    cols = {"y": series.values}
    if args.innovations:
        cols["innovation"] = eps
    write_series_csv(args.out, cols)
    return EXIT_OK


def cmd_fit(args) -> int:
    series = _load(args)
    if args.detrend is not None:
        series = detrend_polynomial(series, args.detrend).residual
    if len(series) < args.order + 10:
        raise InputError(f"need at least {args.order + 10} observations, got {len(series)}")
    fit = {"em": em_fit, "yw": yw_fit, "cls": cls_fit}[args.method]
    report = fit(series, args.order, _em_config(args))
    _emit(report.to_dict(), args.out)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    if args.input_kind == "return":
        raise InputError("the pipeline needs prices or levels, not returns")
    prices = read_series_csv(args.input, args.column)
    cfg = PipelineConfig(
        degree=args.degree,
        max_lag=args.max_lag,
        em=_em_config(args),
        n_paths=args.n_paths,
        seed=args.seed,
        breakpoints=args.breakpoints,
    )
    result = run_pipeline(prices, cfg)
    result.write(args.out)
    if result.aborted:
        log.error("pipeline aborted at %s: %s", result.aborted, result.stages[result.aborted].get("error"))
        return EXIT_INPUT
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_text(Path(args.config).read_text())
    else:
        cfg = ExperimentConfig.preset(args.case or "ar2_case1")
    overrides = {
        "n_trajectories": args.trajectories,
        "series_length": args.length,
        "seed": args.seed,
        "workers": args.workers,
        "estimators": tuple(e.upper() for e in args.estimators.split(",")) if args.estimators else None,
        "em": EmConfig(args.tolerance, args.max_iter, args.symmetric) if args.tolerance or args.max_iter else None,
    }
    kwargs = {k: getattr(cfg, k) for k in ("n_trajectories", "series_length", "estimators", "seed", "burn_in", "em", "workers")}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(case=cfg.case, model=cfg.model, output_path=args.out or cfg.output_path, **kwargs)
    summary = run_experiment(cfg, progress=True)
    stem = cfg.output_path or "experiment"
    summary.write(stem)
    write_records(summary, Path(stem).with_name(Path(stem).name + "_records.csv"))
    return EXIT_OK


def cmd_pacf(args) -> int:
    series = _load(args)
    if args.detrend is not None:
        series = detrend_polynomial(series, args.detrend).residual
    sel = select_order(series, args.max_lag)
    _emit({"pacf": pacf(series, args.max_lag), "selected_order": sel.order, "significant": sel.significant, "band": sel.band}, args.out)
    return EXIT_OK


def cmd_segment(args) -> int:
    seg = segment_by_variance(_load(args), threshold=args.threshold)
    _emit({"breakpoints": seg.breakpoints, "segments": seg.segments, "gain": seg.gain}, args.out)
    return EXIT_OK


def cmd_quantiles(args) -> int:
    model = _model_from_args(args)
    trend = None
    if args.trend:
        trend = read_series_csv(args.trend).values
    fan = quantile_fan(model, trend, args.steps, args.paths, args.levels, seed=args.seed)
    cols = {"t": np.arange(args.steps)}
    cols.update({f"q{lv:g}": path for lv, path in zip(fan.levels, fan.paths)})
    write_series_csv(args.out, cols)
    return EXIT_OK


def _emit(obj: dict, out: str | None) -> None:
    text = dump_json(obj, out)
    if out is None:
        sys.stdout.write(text)


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arnig", description="AR(p) models with NIG innovations")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_input(p: argparse.ArgumentParser, kind: str = "level") -> None:
        p.add_argument("input", help="CSV file, one value per row (optional header and date column)")
        p.add_argument("--column", default=None, help="column name to read (default: last column)")
        p.add_argument("--input-kind", choices=["price", "level", "return"], default=kind)

    p = sub.add_parser("simulate", help="simulate an AR(p)-NIG series to CSV")
    _add_model_args(p)
    p.add_argument("-n", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--innovations", action="store_true", help="also write the innovations")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a model and print a JSON report")
    with_input(p)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--method", choices=["em", "yw", "cls"], default="em")
    p.add_argument("--detrend", type=int, default=None, metavar="DEGREE", help="remove a polynomial trend first")
    _add_em_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("pipeline", help="segmentation, detrending, fit and diagnostics of a price series")
    with_input(p, kind="price")
    p.add_argument("--degree", type=int, default=6)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--n-paths", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--breakpoints", type=lambda s: [int(v) for v in _floats(s)], default=None,
                   help="use these price-index breakpoints instead of segmenting")
    _add_em_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("experiment", help="Monte Carlo comparison of EM, YW and CLS")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--case", choices=sorted(PRESETS))
    p.add_argument("--trajectories", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--estimators", help="comma separated subset of em,yw,cls")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--symmetric", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", help="output path stem (writes .json, .csv, _records.csv)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("pacf", help="partial autocorrelations and selected order")
    with_input(p)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--detrend", type=int, default=None, metavar="DEGREE")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pacf)

    p = sub.add_parser("segment", help="variance segmentation (prices are turned into log-returns)")
    with_input(p, kind="price")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("quantiles", help="simulated quantile lines of a model")
    _add_model_args(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--levels", type=_floats, default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    p.add_argument("--trend", help="CSV with the trend to add back")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quantiles)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, DomainError, EstimationError, ValueError) as exc:
        print(f"arnig {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"arnig {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
