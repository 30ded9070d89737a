"""Command-line experiment runner.

Verbs:
  run <config.json>        execute a configured experiment and write reports
  validate <config.json>   check a configuration, printing every problem
  decompose <series.csv>   dump the wavelet decomposition (t, d1..dK, smooth)
  metrics <actual.csv> <forecast.csv>   score externally produced forecasts

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
error, 5 evaluation error, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .baselines import read_forecast_csv
from .errors import ConfigError, ContinuityError, DataFormatError, ExperimentError, TrainingDivergenceError
from .experiment import load_config, run_experiment
from .metrics import MetricReport, compute_metrics
from .series import load_csv
from .wavelets import default_level, filter_coefficients, modwt, mra

_STAGE_EXIT_CODES = {"config": 2, "data": 3, "training": 4, "evaluation": 5}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fewnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a configuration file")
    run.add_argument("config", help="path to the JSON configuration")
    run.add_argument("--output-dir", default=None, help="directory for report files")
    run.add_argument("--seed", type=int, default=None, help="override the configured seed")
    run.add_argument("--threads", type=int, default=1, help="parallel component trainings")

    val = sub.add_parser("validate", help="validate a configuration file")
    val.add_argument("config", help="path to the JSON configuration")

    dec = sub.add_parser("decompose", help="write the wavelet decomposition of a series")
    dec.add_argument("series", help="CSV with date and value columns")
    dec.add_argument("--filter", default="haar", dest="filter_name")
    dec.add_argument("--levels", type=int, default=None)
    dec.add_argument("--date-column", default="date")
    dec.add_argument("--value-column", default="value")
    dec.add_argument("--output", default=None, help="output CSV path (default: <series>_mra.csv)")

    met = sub.add_parser("metrics", help="score forecasts from a (model_name, step, value) CSV")
    met.add_argument("actual", help="CSV with the test-window actuals")
    met.add_argument("forecast", help="CSV with columns model_name, step, value")
    met.add_argument("--train", default=None, help="training-series CSV (enables MASE and MDRAE)")
    met.add_argument("--seasonal-lag", type=int, default=1)
    met.add_argument("--date-column", default="date")
    met.add_argument("--value-column", default="value")
    met.add_argument("--output", default=None, help="write metrics.csv here instead of stdout")
    return parser


def _cmd_run(args) -> int:
    if args.seed is not None:
        # apply the override before validation so the resolved config reflects it
        from .experiment import validate_config

        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError([f"cannot read {args.config}: {exc}"]) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{args.config} is not valid JSON: {exc}"]) from exc
        if isinstance(raw, dict):
            raw["seed"] = args.seed
        config = validate_config(raw)
    else:
        config = load_config(args.config)
    output_dir = args.output_dir if args.output_dir is not None else "."
    report = run_experiment(config, output_dir=output_dir, threads=args.threads)
    for name, scores in report.metrics.items():
        parts = ", ".join(
            f"{k}={scores[k]:.4f}" if scores[k] is not None else f"{k}=undefined"
            for k in MetricReport.FIELDS
        )
        print(f"{name}: {parts}")
    print(f"report written to {Path(output_dir) / 'report.json'}")
    return 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(f"configuration OK: {len(config.models)} model(s), "
          f"train end {config.split_spec.train_end}, horizon {config.split_spec.horizon}")
    return 0


def _cmd_decompose(args) -> int:
    series = load_csv(args.series, args.date_column, args.value_column)
    levels = args.levels if args.levels is not None else default_level(len(series))
    filt = filter_coefficients(args.filter_name)
    analysis = mra(modwt(series.values, filt, levels))
    out_path = args.output or str(Path(args.series).with_suffix("")) + "_mra.csv"
    months = series.months()
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"d{k}" for k in range(1, levels + 1)] + ["smooth"])
        for i, month in enumerate(months):
            row = [str(month)]
            row += [repr(float(analysis.details[k, i])) for k in range(levels)]
            row.append(repr(float(analysis.smooth[i])))
            writer.writerow(row)
    print(f"decomposition ({levels} levels, {filt.name}) written to {out_path}")
    return 0


def _cmd_metrics(args) -> int:
    actual = load_csv(args.actual, args.date_column, args.value_column)
    forecasts = read_forecast_csv(args.forecast)
    train = load_csv(args.train, args.date_column, args.value_column) if args.train else None
    rows = []
    for name in sorted(forecasts):
        forecast = forecasts[name]
        if len(forecast) != len(actual):
            raise ValueError(
                f"model {name!r} has {len(forecast)} steps but the actuals have {len(actual)}"
            )
        if train is not None:
            report = compute_metrics(actual.values, forecast, train.values, args.seasonal_lag)
        else:
            from .metrics import rmse, smape_percent, theils_u1, mdape

            report = MetricReport(
                rmse=rmse(actual.values, forecast),
                smape_percent=smape_percent(actual.values, forecast),
                theils_u1=theils_u1(actual.values, forecast),
            )
            report.undefined["mase"] = "no training series provided"
            report.undefined["mdrae"] = "no training series provided"
            try:
                report.mdape = mdape(actual.values, forecast)
            except ZeroDivisionError as exc:
                report.undefined["mdape"] = str(exc)
        rows.append((name, report.as_dict()))
    lines = [["model_name", *MetricReport.FIELDS]]
    for name, scores in rows:
        lines.append([name] + ["" if scores[f] is None else repr(scores[f]) for f in MetricReport.FIELDS])
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(lines)
        print(f"metrics written to {args.output}")
    else:
        for line in lines:
            print(",".join(str(cell) for cell in line))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "decompose": _cmd_decompose,
        "metrics": _cmd_metrics,
    }[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, ContinuityError, FileNotFoundError) as exc:
        print(f"error: [data] {exc}", file=sys.stderr)
        return 3
    except TrainingDivergenceError as exc:
        print(f"error: [training] {exc}", file=sys.stderr)
        return 4
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _STAGE_EXIT_CODES.get(exc.stage, 1)
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
