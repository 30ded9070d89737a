"""Reference forecasters: random walk, random walk with drift, AR(p) by AIC.

The neural baseline on the undecomposed series is `ArnnForecaster` used
directly; heavier families (ARIMA, GARCH, boosted trees, deep nets) are out
of scope, but externally produced forecasts can be ingested from CSV and
evaluated alongside.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DataFormatError
from .validation import as_vector


class RandomWalkForecaster(BaseEstimator):
    """Point forecast: the last observed value, repeated."""

    def fit(self, y, X=None):
        y = as_vector(y, "y")
        self.last_ = float(y[-1])
        return self

    def predict(self, horizon: int) -> np.ndarray:
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        return np.full(horizon, self.last_)


class RandomWalkDriftForecaster(BaseEstimator):
    """Last value plus h times the mean first difference of the training series."""

    def fit(self, y, X=None):
        y = as_vector(y, "y")
        if len(y) < 2:
            raise ValueError("drift estimation needs at least 2 observations")
        self.last_ = float(y[-1])
        self.drift_ = float((y[-1] - y[0]) / (len(y) - 1))
        return self

    def predict(self, horizon: int) -> np.ndarray:
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        return self.last_ + np.arange(1, horizon + 1) * self.drift_


@dataclass(frozen=True)
class ArModel:
    """Fitted AR(p): intercept plus coefficients on lags 1..p."""

    order: int
    intercept: float
    coefficients: np.ndarray

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        coef = np.asarray(self.coefficients, dtype=float)
        if coef.shape != (self.order,) or not np.all(np.isfinite(coef)):
            raise ValueError("coefficients must be finite and match the order")
        object.__setattr__(self, "coefficients", coef)


def ar_fit(train, max_order: int = 13) -> ArModel:
    """Least-squares AR fit with the order chosen by AIC over 1..max_order.

    All candidate orders are scored on the common effective sample (the rows
    available at max_order) so their likelihoods are comparable; the reported
    coefficients are re-estimated at the chosen order on its full sample.
    """
    y = as_vector(train, "train")
    n = len(y)
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    if n <= max_order + 1:
        raise ValueError(f"series of length {n} is too short for max_order {max_order}")
    rows = n - max_order
    labels = y[max_order:]
    best = None
    for p in range(1, max_order + 1):
        design = np.column_stack(
            [np.ones(rows)] + [y[max_order - k : n - k] for k in range(1, p + 1)]
        )
        beta, _, rank, _ = np.linalg.lstsq(design, labels, rcond=None)
        if rank < design.shape[1]:
            raise np.linalg.LinAlgError(f"singular lag design at order {p}")
        rss = float(((labels - design @ beta) ** 2).sum())
        # Gaussian OLS log-likelihood up to constants; +2 covers intercept + variance
        aic = rows * np.log(max(rss, 1e-300) / rows) + 2.0 * (p + 2)
        if best is None or aic < best[0]:
            best = (aic, p)
    order = best[1]
    design = np.column_stack(
        [np.ones(n - order)] + [y[order - k : n - k] for k in range(1, order + 1)]
    )
    beta, _, rank, _ = np.linalg.lstsq(design, y[order:], rcond=None)
    if rank < design.shape[1]:
        raise np.linalg.LinAlgError(f"singular lag design at order {order}")
    return ArModel(order=order, intercept=float(beta[0]), coefficients=beta[1:])


def ar_forecast(model: ArModel, train, horizon: int) -> np.ndarray:
    """Recursive point forecasts from a fitted AR model."""
    y = as_vector(train, "train")
    if len(y) < model.order:
        raise ValueError(f"need at least {model.order} observations to forecast")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    history = list(y[-model.order :])
    out = np.empty(horizon)
    for h in range(horizon):
        recent = np.array(history[-model.order :][::-1])
        out[h] = model.intercept + float(model.coefficients @ recent)
        history.append(out[h])
    return out


class AutoregressiveForecaster(BaseEstimator):
    """AR(p) forecaster with AIC order selection (estimator wrapper over ar_fit)."""

    def __init__(self, max_order=13):
        self.max_order = max_order

    def fit(self, y, X=None):
        y = as_vector(y, "y")
        self.model_ = ar_fit(y, self.max_order)
        self.order_ = self.model_.order
        self.history_ = y[-self.model_.order :].copy()
        return self

    def predict(self, horizon: int) -> np.ndarray:
        return ar_forecast(self.model_, self.history_, horizon)


def read_forecast_csv(path) -> dict[str, np.ndarray]:
    """Ingest externally produced forecasts: columns (model_name, step, value).

    Steps must form 1..m per model; returns {model_name: forecast vector}.
    """
    collected: dict[str, dict[int, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"model_name", "step", "value"}
        if reader.fieldnames is None or required - set(reader.fieldnames):
            raise DataFormatError(f"{path}: expected columns {sorted(required)}")
        for i, row in enumerate(reader, start=2):
            try:
                step = int(row["step"])
                value = float(row["value"])
            except (TypeError, ValueError) as exc:
                raise DataFormatError(f"{path}, row {i}: {exc}") from exc
            collected.setdefault(row["model_name"], {})[step] = value
    out = {}
    for name, steps in collected.items():
        m = len(steps)
        if sorted(steps) != list(range(1, m + 1)):
            raise DataFormatError(f"{path}: model {name!r} steps must form 1..{m}")
        out[name] = np.array([steps[s] for s in range(1, m + 1)])
    return out
