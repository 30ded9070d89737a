"""Windowed conformal prediction intervals around point forecasts.

Scores are scaled absolute residuals S_t = |y_t - yhat_t| / scale_t; the
quantile at time t is taken over the kappa most recent past scores with the
finite-sample-adjusted denominator min(kappa, t - 1) + 1, and the interval
is the point forecast plus/minus quantile * scale. When the requested
coverage is unattainable within the window the quantile is +inf, i.e. the
interval is reported unbounded rather than silently clipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_vector, check_aligned, check_in_range

_MAD_FLOOR = 1e-8
SCALE_MODELS = ("unit", "rolling_mad")


@dataclass(frozen=True)
class ConformalConfig:
    """Window size, miscoverage level, and the residual-scale model."""

    kappa: int
    alpha: float
    scale_model: str = "unit"

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        check_in_range(self.alpha, 0.0, 1.0, "alpha")
        if self.scale_model not in SCALE_MODELS:
            raise ValueError(f"scale_model must be one of {SCALE_MODELS}, got {self.scale_model!r}")


@dataclass(frozen=True)
class IntervalSeries:
    """Per-step (lower, center, upper) bands with lower <= center <= upper."""

    lower: np.ndarray
    center: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        center = np.asarray(self.center, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if not (lower.shape == center.shape == upper.shape):
            raise ValueError("lower, center and upper must share a shape")
        if np.any(lower > center) or np.any(center > upper):
            raise ValueError("intervals must satisfy lower <= center <= upper")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "upper", upper)

    def __len__(self) -> int:
        return len(self.center)

    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def covers(self, actual) -> np.ndarray:
        a = as_vector(actual, "actual")
        check_aligned(a, self.center, names=("actual", "intervals"))
        return (a >= self.lower) & (a <= self.upper)


def conformal_scores(actual, predicted, scale) -> np.ndarray:
    """S_t = |y_t - yhat_t| / scale_t with a strictly positive scale series."""
    a = as_vector(actual, "actual")
    p = as_vector(predicted, "predicted")
    s = as_vector(scale, "scale")
    check_aligned(a, p, s, names=("actual", "predicted", "scale"))
    if np.any(s <= 0):
        raise ValueError("scale must be strictly positive")
    return np.abs(a - p) / s


def windowed_quantile(scores, t: int, kappa: int, alpha: float) -> float:
    """Conformal quantile at time t from the windowed past scores.

    `t` is the 1-indexed target time within the score sequence; the window
    holds the scores at times max(1, t - kappa) .. t - 1. Returns the
    smallest windowed score q whose empirical fraction
    count(scores <= q) / (min(kappa, t - 1) + 1) reaches 1 - alpha, or +inf
    when no finite score does (the window is too small for the requested
    coverage; widen kappa).
    """
    s = as_vector(scores, "scores")
    if t < 2:
        raise ValueError(f"t must be >= 2 so the window is non-empty, got {t}")
    if t - 1 > len(s):
        raise ValueError(f"t={t} needs {t - 1} past scores but only {len(s)} are available")
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    check_in_range(alpha, 0.0, 1.0, "alpha")
    window = s[max(0, t - 1 - kappa) : t - 1]
    denominator = min(kappa, t - 1) + 1
    ordered = np.sort(window)
    # fraction covered by the i-th order statistic is (i + 1) / denominator
    fractions = np.arange(1, len(ordered) + 1) / denominator
    hit = np.flatnonzero(fractions >= 1.0 - alpha)
    if len(hit) == 0:
        return float("inf")
    return float(ordered[hit[0]])


def prediction_intervals(point_forecast, quantiles, scale) -> IntervalSeries:
    """Symmetric bands: point forecast +/- quantile * scale at each step."""
    c = as_vector(point_forecast, "point_forecast")
    q = np.asarray(quantiles, dtype=float)
    s = as_vector(scale, "scale")
    if q.shape != c.shape or s.shape != c.shape:
        raise ValueError("point_forecast, quantiles and scale must be aligned")
    if np.any(q < 0):
        raise ValueError("quantiles must be non-negative")
    margin = q * s
    return IntervalSeries(lower=c - margin, center=c, upper=c + margin)


def _scale_at(residuals: list, kappa: int, scale_model: str) -> float:
    """Scale for the next time step from the residuals observed so far."""
    if scale_model == "unit":
        return 1.0
    window = residuals[-kappa:]
    if not window:
        return 1.0
    w = np.asarray(window)
    mad = float(np.median(np.abs(w - np.median(w))))
    return max(mad, _MAD_FLOOR)


def conformalize(
    point_forecast,
    cal_actual,
    cal_pred,
    config: ConformalConfig,
    test_actual=None,
) -> IntervalSeries:
    """Intervals for a forecast path, calibrated on held-out residuals.

    The calibration slice supplies the initial score history. Without
    `test_actual` the quantile and scale are frozen at their values right
    after calibration (nothing new is observed while forecasting). With
    `test_actual` the score history grows as each test observation arrives,
    so the band at step h only ever uses information from steps before h.
    """
    forecast = as_vector(point_forecast, "point_forecast")
    cal_a = as_vector(cal_actual, "cal_actual")
    cal_p = as_vector(cal_pred, "cal_pred")
    check_aligned(cal_a, cal_p, names=("cal_actual", "cal_pred"))
    if test_actual is not None:
        test_actual = as_vector(test_actual, "test_actual")
        check_aligned(test_actual, forecast, names=("test_actual", "point_forecast"))

    residuals: list = []
    scores: list = []
    for a, p in zip(cal_a, cal_p):
        scale = _scale_at(residuals, config.kappa, config.scale_model)
        scores.append(abs(a - p) / scale)
        residuals.append(a - p)

    m = len(forecast)
    quantiles = np.empty(m)
    scales = np.empty(m)
    for h in range(m):
        scales[h] = _scale_at(residuals, config.kappa, config.scale_model)
        quantiles[h] = windowed_quantile(scores, len(scores) + 1, config.kappa, config.alpha)
        if test_actual is not None:
            scores.append(abs(test_actual[h] - forecast[h]) / scales[h])
            residuals.append(test_actual[h] - forecast[h])
    return prediction_intervals(forecast, quantiles, scales)
