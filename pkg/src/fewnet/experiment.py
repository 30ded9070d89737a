"""Experiment configuration, validation, and the end-to-end pipeline.

A run ingests the configured CSV series, applies the domain transforms,
splits train/test, fits every configured model, forecasts the test horizon,
scores the forecasts, optionally runs the comparison tests and conformal
intervals, and emits a deterministic report: the same configuration and seed
always produce byte-identical JSON. Runtime-only knobs (output directory,
thread count) are deliberately kept out of the report so they cannot break
that determinism.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .arnn import ArnnForecaster
from .baselines import AutoregressiveForecaster, RandomWalkDriftForecaster, RandomWalkForecaster
from .comparisons import ErrorMatrix, gr_fluctuation_test, mcb_test
from .conformal import SCALE_MODELS, ConformalConfig, conformalize
from .ensemble import FewnetForecaster
from .errors import ConfigError, ExperimentError
from .metrics import MetricReport, compute_metrics
from .series import Month, SplitSpec, TimeSeries, load_csv, log_transform, split, yoy_inflation
from .validation import derive_seed

CONFIG_VERSION = 1

_MODEL_TYPES = ("fewnet", "arnnx", "rw", "rwd", "ar")

_FEWNET_PARAM_KEYS = {
    "wavelet", "levels", "p_grid", "use_econ_filters", "hp_smoothing", "cf_lower",
    "cf_upper", "epochs", "learning_rate", "restarts", "cv_folds", "cv_horizon",
    "zero_detail_levels",
}
_ARNNX_PARAM_KEYS = {"lags", "hidden", "epochs", "learning_rate", "restarts", "use_exog"}


@dataclass
class ModelSpec:
    type: str
    name: str
    params: dict = field(default_factory=dict)

    def needs_exog(self) -> bool:
        if self.type == "fewnet":
            return self.params.get("use_econ_filters", True)
        if self.type == "arnnx":
            return self.params.get("use_exog", True)
        return False


@dataclass
class ExperimentConfig:
    seed: int
    data: dict
    split_spec: SplitSpec
    models: list
    seasonal_lag: int = 1
    mcb: dict | None = None
    fluctuation: dict | None = None
    conformal: dict | None = None
    resolved: dict = field(default_factory=dict)  # defaults-filled copy for the report


def _expect(problems, mapping, key, kinds, path, required=True, default=None):
    if key not in mapping or mapping[key] is None:
        if required:
            problems.append(f"{path}{key}: required field is missing")
        return default
    value = mapping[key]
    if kinds is not None and not isinstance(value, kinds):
        names = kinds.__name__ if isinstance(kinds, type) else "/".join(k.__name__ for k in kinds)
        problems.append(f"{path}{key}: expected {names}, got {type(value).__name__}")
        return default
    return value


def validate_config(raw: dict) -> ExperimentConfig:
    """Check every cross-field invariant and raise ConfigError listing all violations."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["configuration root must be a JSON object"])

    version = _expect(problems, raw, "config_version", int, "")
    if version is not None and version != CONFIG_VERSION:
        problems.append(f"config_version: expected {CONFIG_VERSION}, got {version}")
    seed = _expect(problems, raw, "seed", int, "")

    data = _expect(problems, raw, "data", dict, "", default={}) or {}
    has_index = bool(data.get("cpi_index"))
    has_inflation = bool(data.get("cpi_inflation"))
    if has_index == has_inflation:
        problems.append("data: provide exactly one of cpi_index or cpi_inflation")
    resolved_data = {
        "cpi_index": data.get("cpi_index"),
        "cpi_inflation": data.get("cpi_inflation"),
        "epu": data.get("epu"),
        "gprc": data.get("gprc"),
        "date_column": data.get("date_column", "date"),
        "value_column": data.get("value_column", "value"),
        "log_epu": data.get("log_epu", True),
    }

    split_section = _expect(problems, raw, "split", dict, "", default={}) or {}
    split_spec = None
    train_end_text = _expect(problems, split_section, "train_end", str, "split.")
    horizon = _expect(problems, split_section, "horizon", int, "split.")
    if train_end_text is not None and horizon is not None:
        try:
            split_spec = SplitSpec(Month.parse(train_end_text), horizon)
        except ValueError as exc:
            problems.append(f"split: {exc}")

    model_section = _expect(problems, raw, "models", list, "", default=[]) or []
    models: list[ModelSpec] = []
    if not model_section:
        problems.append("models: at least one model is required")
    seen_names = set()
    for i, entry in enumerate(model_section):
        path = f"models[{i}]."
        if not isinstance(entry, dict):
            problems.append(f"models[{i}]: expected an object")
            continue
        mtype = _expect(problems, entry, "type", str, path)
        if mtype is not None and mtype not in _MODEL_TYPES:
            problems.append(f"{path}type: unknown model type {mtype!r}; choose from {_MODEL_TYPES}")
            continue
        name = entry.get("name", mtype)
        if name in seen_names:
            problems.append(f"{path}name: duplicate model name {name!r}")
        seen_names.add(name)
        params = entry.get("params", {}) or {}
        if not isinstance(params, dict):
            problems.append(f"{path}params: expected an object")
            params = {}
        if mtype == "fewnet":
            unknown = set(params) - _FEWNET_PARAM_KEYS
            if unknown:
                problems.append(f"{path}params: unknown keys {sorted(unknown)}")
            try:
                FewnetForecaster(**{k: v for k, v in params.items() if k in _FEWNET_PARAM_KEYS})._resolve_grid()
            except (TypeError, ValueError) as exc:
                problems.append(f"{path}params: {exc}")
        elif mtype == "arnnx":
            unknown = set(params) - _ARNNX_PARAM_KEYS
            if unknown:
                problems.append(f"{path}params: unknown keys {sorted(unknown)}")
            try:
                kwargs = {k: v for k, v in params.items() if k in _ARNNX_PARAM_KEYS - {"use_exog"}}
                ArnnForecaster(**kwargs)._check_params()
            except (TypeError, ValueError) as exc:
                problems.append(f"{path}params: {exc}")
        if mtype is not None:
            models.append(ModelSpec(type=mtype, name=name, params=params))

    needs_exog = any(m.needs_exog() for m in models)
    if needs_exog:
        for key in ("epu", "gprc"):
            if not resolved_data.get(key):
                problems.append(f"data.{key}: required because a configured model uses exogenous inputs")

    evaluation = raw.get("evaluation", {}) or {}
    if not isinstance(evaluation, dict):
        problems.append("evaluation: expected an object")
        evaluation = {}
    seasonal_lag = evaluation.get("seasonal_lag", 1)
    if not isinstance(seasonal_lag, int) or seasonal_lag < 1:
        problems.append("evaluation.seasonal_lag: must be a positive integer")
        seasonal_lag = 1

    mcb_cfg = evaluation.get("mcb")
    if mcb_cfg is not None:
        if not isinstance(mcb_cfg, dict):
            problems.append("evaluation.mcb: expected an object")
            mcb_cfg = None
        else:
            mcb_cfg = {"alpha": mcb_cfg.get("alpha", 0.05)}
            if mcb_cfg["alpha"] not in (0.01, 0.05, 0.10):
                problems.append("evaluation.mcb.alpha: must be one of 0.01, 0.05, 0.1")
            if len(models) < 2:
                problems.append("evaluation.mcb: needs at least two models")
            if split_spec is not None and split_spec.horizon < 2:
                problems.append("evaluation.mcb: needs a horizon of at least 2 steps")

    fluct_cfg = evaluation.get("fluctuation")
    if fluct_cfg is not None:
        if not isinstance(fluct_cfg, dict):
            problems.append("evaluation.fluctuation: expected an object")
            fluct_cfg = None
        else:
            fluct_cfg = {
                "pairs": fluct_cfg.get("pairs", []),
                "mu": fluct_cfg.get("mu", 0.3),
                "alpha": fluct_cfg.get("alpha", 0.05),
            }
            if not (0.0 < float(fluct_cfg["mu"]) < 1.0):
                problems.append("evaluation.fluctuation.mu: must lie in (0, 1)")
            elif split_spec is not None and round(float(fluct_cfg["mu"]) * split_spec.horizon) < 2:
                problems.append(
                    "evaluation.fluctuation: round(mu * horizon) must be at least 2"
                )
            if fluct_cfg["alpha"] not in (0.05, 0.10):
                problems.append("evaluation.fluctuation.alpha: must be 0.05 or 0.1")
            if not fluct_cfg["pairs"]:
                problems.append("evaluation.fluctuation.pairs: at least one [a, b] pair is required")
            for pair in fluct_cfg["pairs"]:
                if not (isinstance(pair, list) and len(pair) == 2):
                    problems.append("evaluation.fluctuation.pairs: entries must be [name_a, name_b]")
                    continue
                for name in pair:
                    if name not in seen_names:
                        problems.append(f"evaluation.fluctuation.pairs: unknown model {name!r}")

    conf_cfg = evaluation.get("conformal")
    if conf_cfg is not None:
        if not isinstance(conf_cfg, dict):
            problems.append("evaluation.conformal: expected an object")
            conf_cfg = None
        else:
            conf_cfg = {
                "model": conf_cfg.get("model", models[0].name if models else None),
                "alpha": conf_cfg.get("alpha", 0.1),
                "kappa": conf_cfg.get("kappa", 12),
                "calibration": conf_cfg.get("calibration"),
                "scale_model": conf_cfg.get("scale_model", "unit"),
                "online": conf_cfg.get("online", False),
            }
            if conf_cfg["model"] not in seen_names:
                problems.append(f"evaluation.conformal.model: unknown model {conf_cfg['model']!r}")
            if not isinstance(conf_cfg["kappa"], int) or conf_cfg["kappa"] < 1:
                problems.append("evaluation.conformal.kappa: must be a positive integer")
            if not (0.0 < float(conf_cfg["alpha"]) < 1.0):
                problems.append("evaluation.conformal.alpha: must lie in (0, 1)")
            if conf_cfg["calibration"] is not None and (
                not isinstance(conf_cfg["calibration"], int) or conf_cfg["calibration"] < 2
            ):
                problems.append("evaluation.conformal.calibration: must be an integer >= 2")
            if conf_cfg["scale_model"] not in SCALE_MODELS:
                problems.append(f"evaluation.conformal.scale_model: must be one of {SCALE_MODELS}")

    if problems:
        raise ConfigError(problems)

    resolved = {
        "config_version": CONFIG_VERSION,
        "seed": seed,
        "data": resolved_data,
        "split": {"train_end": str(split_spec.train_end), "horizon": split_spec.horizon},
        "models": [
            {"type": m.type, "name": m.name, "params": m.params} for m in models
        ],
        "evaluation": {
            "seasonal_lag": seasonal_lag,
            "mcb": mcb_cfg,
            "fluctuation": fluct_cfg,
            "conformal": conf_cfg,
        },
    }
    return ExperimentConfig(
        seed=seed,
        data=resolved_data,
        split_spec=split_spec,
        models=models,
        seasonal_lag=seasonal_lag,
        mcb=mcb_cfg,
        fluctuation=fluct_cfg,
        conformal=conf_cfg,
        resolved=resolved,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path} is not valid JSON: {exc}"]) from exc
    return validate_config(raw)


def _build_estimator(spec: ModelSpec, seed: int, threads: int):
    model_seed = derive_seed(seed, "model", spec.name)
    if spec.type == "fewnet":
        return FewnetForecaster(**spec.params, seed=model_seed, n_jobs=threads)
    if spec.type == "arnnx":
        params = {k: v for k, v in spec.params.items() if k != "use_exog"}
        return ArnnForecaster(**params, seed=model_seed)
    if spec.type == "rw":
        return RandomWalkForecaster()
    if spec.type == "rwd":
        return RandomWalkDriftForecaster()
    if spec.type == "ar":
        return AutoregressiveForecaster(**spec.params)
    raise ValueError(f"unknown model type {spec.type!r}")


def _describe_fit(spec: ModelSpec, estimator) -> dict:
    """Resolved structure of a fitted model, for the report's audit block."""
    if spec.type == "fewnet":
        return {"p": estimator.p_, "q": estimator.q_, "levels": estimator.level_}
    if spec.type == "arnnx":
        return {"lags": estimator.lags, "hidden": estimator.hidden_, "n_exog": estimator.n_exog_}
    if spec.type == "ar":
        return {"order": estimator.order_}
    if spec.type == "rwd":
        return {"drift": estimator.drift_}
    return {}


def _load_inputs(config: ExperimentConfig):
    """Read, transform and align the target and exogenous series."""
    data = config.data
    date_col, value_col = data["date_column"], data["value_column"]
    if data["cpi_index"]:
        target = yoy_inflation(load_csv(data["cpi_index"], date_col, value_col))
    else:
        target = load_csv(data["cpi_inflation"], date_col, value_col)
    exog = None
    if any(spec.needs_exog() for spec in config.models):
        epu = load_csv(data["epu"], date_col, value_col)
        if data["log_epu"]:
            epu = log_transform(epu)
        gprc = load_csv(data["gprc"], date_col, value_col)
        first = max(target.start, epu.start, gprc.start)
        last = min(target.end, epu.end, gprc.end)
        length = last - first + 1
        if length < 1:
            raise ValueError("target, epu and gprc series do not overlap")
        target = target.window(target.index_of(first), length)
        exog = np.column_stack(
            [s.values[s.index_of(first) : s.index_of(first) + length] for s in (epu, gprc)]
        )
    return target, exog


@dataclass
class RunReport:
    """Deterministic experiment outcome plus audit provenance."""

    config: dict
    provenance: dict
    train_months: dict
    forecasts: dict
    metrics: dict
    models: dict = field(default_factory=dict)
    mcb: dict | None = None
    fluctuation: dict | None = None
    intervals: dict | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "provenance": self.provenance,
            "train": self.train_months,
            "forecasts": self.forecasts,
            "metrics": self.metrics,
            "models": self.models,
            "mcb": self.mcb,
            "fluctuation": self.fluctuation,
            "intervals": self.intervals,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _stage(name):
    class _StageGuard:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, ExperimentError):
                raise ExperimentError(name, exc) from exc
            return False

    return _StageGuard()


def run_experiment(config: ExperimentConfig, output_dir=None, threads: int = 1) -> RunReport:
    """Execute the configured pipeline and (optionally) write the report files.

    Outputs: report.json plus forecasts.csv, metrics.csv and, when enabled,
    intervals.csv, mcb.json, fluctuation.json. Files are only written once
    the whole run has succeeded; a failure while writing removes anything
    already written.
    """
    with _stage("data"):
        target, exog = _load_inputs(config)
        train, test = split(target, config.split_spec)
        n_train = len(train)
        exog_train = None if exog is None else exog[:n_train]
        horizon = config.split_spec.horizon

    forecasts: dict[str, np.ndarray] = {}
    model_info: dict[str, dict] = {}
    with _stage("training"):
        for spec in config.models:
            estimator = _build_estimator(spec, config.seed, threads)
            needs_x = spec.needs_exog()
            estimator.fit(train.values, exog_train if needs_x else None)
            forecasts[spec.name] = estimator.predict(horizon)
            model_info[spec.name] = _describe_fit(spec, estimator)

    with _stage("evaluation"):
        naive = np.full(horizon, train.values[-1])
        metric_reports: dict[str, MetricReport] = {
            name: compute_metrics(test.values, fc, train.values, config.seasonal_lag, naive)
            for name, fc in forecasts.items()
        }

        mcb_result = None
        if config.mcb is not None:
            abs_errors = np.vstack(
                [np.abs(test.values - forecasts[spec.name]) for spec in config.models]
            )
            matrix = ErrorMatrix(
                losses=abs_errors,
                models=tuple(spec.name for spec in config.models),
                datasets=tuple(f"step_{h + 1}" for h in range(horizon)),
            )
            mcb_result = mcb_test(matrix, config.mcb["alpha"]).to_dict()

        fluct_result = None
        if config.fluctuation is not None:
            fluct_result = {}
            for name_a, name_b in config.fluctuation["pairs"]:
                loss_a = (test.values - forecasts[name_a]) ** 2
                loss_b = (test.values - forecasts[name_b]) ** 2
                outcome = gr_fluctuation_test(
                    loss_a, loss_b, config.fluctuation["mu"], config.fluctuation["alpha"]
                )
                fluct_result[f"{name_a} vs {name_b}"] = outcome.to_dict()

        intervals_result = None
        if config.conformal is not None:
            cfg = config.conformal
            cal_len = cfg["calibration"] if cfg["calibration"] is not None else horizon
            if cal_len >= n_train:
                raise ValueError(
                    f"conformal calibration slice ({cal_len}) must be shorter than the training series"
                )
            spec = next(s for s in config.models if s.name == cfg["model"])
            cal_estimator = _build_estimator(spec, config.seed, threads)
            cal_train = train.values[:-cal_len]
            cal_exog = None if exog_train is None else exog_train[:-cal_len]
            cal_estimator.fit(cal_train, cal_exog if spec.needs_exog() else None)
            cal_pred = cal_estimator.predict(cal_len)
            cal_actual = train.values[-cal_len:]
            conf = ConformalConfig(
                kappa=cfg["kappa"], alpha=cfg["alpha"], scale_model=cfg["scale_model"]
            )
            bands = conformalize(
                forecasts[cfg["model"]],
                cal_actual,
                cal_pred,
                conf,
                test_actual=test.values if cfg["online"] else None,
            )
            intervals_result = {
                "model": cfg["model"],
                "alpha": cfg["alpha"],
                "kappa": cfg["kappa"],
                "scale_model": cfg["scale_model"],
                "online": bool(cfg["online"]),
                "lower": [_jsonable_float(v) for v in bands.lower],
                "center": [float(v) for v in bands.center],
                "upper": [_jsonable_float(v) for v in bands.upper],
            }

    resolved_json = json.dumps(config.resolved, sort_keys=True)
    report = RunReport(
        config=config.resolved,
        provenance={
            "config_sha256": hashlib.sha256(resolved_json.encode("utf-8")).hexdigest(),
            "seed": config.seed,
            "package_version": __version__,
        },
        train_months={"start": str(train.start), "end": str(train.end), "length": n_train},
        forecasts={name: [float(v) for v in fc] for name, fc in forecasts.items()},
        metrics={name: report.as_dict() for name, report in metric_reports.items()},
        models=model_info,
        mcb=mcb_result,
        fluctuation=fluct_result,
        intervals=intervals_result,
    )
    if output_dir is not None:
        with _stage("output"):
            _write_outputs(report, output_dir, test)
    return report


def _jsonable_float(v: float):
    return float(v) if np.isfinite(v) else None


def _write_outputs(report: RunReport, output_dir, test: TimeSeries):
    import csv
    from pathlib import Path

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        path = out / "report.json"
        path.write_text(report.to_json(), encoding="utf-8")
        written.append(path)

        path = out / "forecasts.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model_name", "step", "value"])
            for name in report.forecasts:
                for h, value in enumerate(report.forecasts[name], start=1):
                    writer.writerow([name, h, repr(value)])
        written.append(path)

        path = out / "metrics.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model_name", *MetricReport.FIELDS])
            for name, scores in report.metrics.items():
                writer.writerow(
                    [name]
                    + ["" if scores[f] is None else repr(scores[f]) for f in MetricReport.FIELDS]
                )
        written.append(path)

        if report.intervals is not None:
            path = out / "intervals.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["step", "lower", "center", "upper"])
                rows = zip(report.intervals["lower"], report.intervals["center"], report.intervals["upper"])
                for h, (lo, mid, hi) in enumerate(rows, start=1):
                    writer.writerow([h, _csv_cell(lo), repr(mid), _csv_cell(hi)])
            written.append(path)

        if report.mcb is not None:
            path = out / "mcb.json"
            path.write_text(json.dumps(report.mcb, sort_keys=True, indent=2) + "\n", encoding="utf-8")
            written.append(path)

        if report.fluctuation is not None:
            path = out / "fluctuation.json"
            path.write_text(
                json.dumps(report.fluctuation, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _csv_cell(v):
    return "" if v is None else repr(v)
