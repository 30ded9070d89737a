"""Forecast-accuracy metrics and the empirical-risk summary.

Six metrics are reported: RMSE, MASE (in-sample seasonal-naive scaling),
SMAPE in percent with the half-sum denominator, Theil's U1 with the
product-of-norms denominator, and the medians MDRAE and MDAPE. A metric
whose denominator degenerates (constant training series for MASE, a zero
actual for MDAPE, a naive forecast hitting the actual for MDRAE) is reported
as undefined with a reason while the remaining metrics stay available.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import as_vector, check_aligned


@dataclass
class MetricReport:
    """Six accuracy scores; None marks a metric that is undefined for this input."""

    rmse: float | None = None
    mase: float | None = None
    smape_percent: float | None = None
    theils_u1: float | None = None
    mdrae: float | None = None
    mdape: float | None = None
    undefined: dict = field(default_factory=dict)

    FIELDS = ("rmse", "mase", "smape_percent", "theils_u1", "mdrae", "mdape")

    def as_dict(self) -> dict:
        out = {name: getattr(self, name) for name in self.FIELDS}
        if self.undefined:
            out["undefined"] = dict(self.undefined)
        return out


def rmse(actual, forecast) -> float:
    a, f = _pair(actual, forecast)
    return float(np.sqrt(np.mean((a - f) ** 2)))


def smape_percent(actual, forecast) -> float:
    """Symmetric MAPE in percent: mean of |f - a| / ((|f| + |a|) / 2) * 100."""
    a, f = _pair(actual, forecast)
    denom = (np.abs(f) + np.abs(a)) / 2.0
    terms = np.where(denom == 0, 0.0, np.abs(f - a) / np.where(denom == 0, 1.0, denom))
    return float(np.mean(terms) * 100.0)


def theils_u1(actual, forecast) -> float:
    """RMSE normalised by the product of the root mean squares of actual and forecast."""
    a, f = _pair(actual, forecast)
    denom = np.sqrt(np.mean(a**2)) * np.sqrt(np.mean(f**2))
    if denom == 0:
        return 0.0 if np.allclose(a, f) else float("inf")
    return float(rmse(a, f) / denom)


def mase(actual, forecast, train, seasonal_lag: int = 1) -> float:
    """Mean absolute error scaled by the in-sample seasonal-naive error.

    Denominator: sum_{t=S+1..D} |y_t - y_{t-S}| / (D - S) over the training
    series of length D; raises when the training series makes it zero.
    """
    a, f = _pair(actual, forecast)
    y = as_vector(train, "train")
    d, s = len(y), int(seasonal_lag)
    if not 1 <= s < d:
        raise ValueError(f"seasonal_lag must be in 1..{d - 1}, got {s}")
    scale = np.abs(y[s:] - y[:-s]).sum() / (d - s)
    if scale == 0:
        raise ZeroDivisionError("in-sample seasonal-naive error is zero (constant training series)")
    return float(np.mean(np.abs(f - a)) / scale)


def mdrae(actual, forecast, naive) -> float:
    """Median of |y - f| / (y - naive); the naive reference is the last-value forecast."""
    a, f = _pair(actual, forecast)
    r = as_vector(naive, "naive")
    check_aligned(a, r, names=("actual", "naive"))
    denom = a - r
    if np.any(denom == 0):
        raise ZeroDivisionError("naive forecast equals the actual at some step")
    return float(np.median(np.abs(a - f) / denom))


def mdape(actual, forecast) -> float:
    """Median of |y - f| / y * 100 (guaranteed non-negative only for positive actuals)."""
    a, f = _pair(actual, forecast)
    if np.any(a == 0):
        raise ZeroDivisionError("actual value of zero makes the percentage error undefined")
    return float(np.median(np.abs(a - f) / a) * 100.0)


def _pair(actual, forecast):
    a = as_vector(actual, "actual")
    f = as_vector(forecast, "forecast")
    check_aligned(a, f, names=("actual", "forecast"))
    return a, f


def compute_metrics(actual, forecast, train, seasonal_lag: int = 1, naive=None) -> MetricReport:
    """All six metrics for one forecast against the test actuals.

    `train` is the training series used for the MASE scaling; `naive`
    defaults to the random-walk point forecast (the last training value
    repeated), which is the reference for MDRAE.
    """
    a, f = _pair(actual, forecast)
    y = as_vector(train, "train")
    if naive is None:
        naive = np.full(len(a), y[-1])
    report = MetricReport(
        rmse=rmse(a, f),
        smape_percent=smape_percent(a, f),
        theils_u1=theils_u1(a, f),
    )
    for name, fn in (
        ("mase", lambda: mase(a, f, y, seasonal_lag)),
        ("mdrae", lambda: mdrae(a, f, naive)),
        ("mdape", lambda: mdape(a, f)),
    ):
        try:
            setattr(report, name, fn())
        except ZeroDivisionError as exc:
            report.undefined[name] = str(exc)
    return report


def empirical_risk(in_sample_pred, actual) -> float:
    """Mean squared in-sample residual."""
    p = as_vector(in_sample_pred, "in_sample_pred")
    a = as_vector(actual, "actual")
    check_aligned(p, a, names=("in_sample_pred", "actual"))
    return float(np.mean((a - p) ** 2))
