"""Model-comparison statistics: the MCB rank test and the rolling fluctuation test.

The multiple-comparisons-with-the-best (MCB) procedure ranks M forecasters
within each of D datasets, averages the ranks, and draws a critical interval
of width CD = theta_alpha * sqrt(M (M + 1) / (6 D)) around each mean rank,
where theta_alpha is the upper-alpha quantile of the studentized range
distribution for M groups and infinite degrees of freedom (Koning et al.
2005). The fluctuation test of Giacomini & Rossi (2010) tracks a rolling
Diebold-Mariano-type statistic of the loss differential between two
forecasters, flagging windows where one model's local predictive accuracy
significantly beats the other's.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .validation import as_vector, check_aligned, check_in_range

# Upper-alpha quantiles of the studentized range distribution, infinite
# degrees of freedom, M = 2..20 groups. Computed by numerical inversion of
# the exact range-of-M-standard-normals distribution; agrees with published
# tables (e.g. Harter 1960) to their printed precision.
_STUDENTIZED_RANGE_INF = {
    0.01: (
        3.642773, 4.120303, 4.402801, 4.602821, 4.757047, 4.882166, 4.987183,
        5.077506, 5.156635, 5.226963, 5.290196, 5.347592, 5.400105, 5.448476,
        5.493291, 5.535020, 5.574047, 5.610690, 5.645215,
    ),
    0.05: (
        2.771808, 3.314493, 3.633160, 3.857656, 4.030092, 4.169554, 4.286309,
        4.386509, 4.474124, 4.551864, 4.621655, 4.684920, 4.742732, 4.795924,
        4.845154, 4.890951, 4.933745, 4.973892, 5.011689,
    ),
    0.10: (
        2.326174, 2.902380, 3.240446, 3.478281, 3.660721, 3.808098, 3.931349,
        4.037023, 4.129346, 4.211200, 4.284635, 4.351158, 4.411913, 4.467782,
        4.519464, 4.567519, 4.612403, 4.654494, 4.694104,
    ),
}

# Two-sided critical values of the fluctuation test, indexed by the window
# fraction mu, from Giacomini & Rossi (2010), Table 1. The 10% row equals
# the one-sided 5% row by the symmetry of the limiting process.
_FLUCTUATION_MU_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
_FLUCTUATION_CRITICAL = {
    0.05: (3.393, 3.179, 3.012, 2.890, 2.779, 2.634, 2.560, 2.433, 2.331),
    0.10: (3.170, 2.948, 2.766, 2.626, 2.500, 2.356, 2.252, 2.130, 1.950),
}


def studentized_range_quantile(n_models: int, alpha: float) -> float:
    """Embedded-table lookup of the upper-alpha studentized range quantile."""
    if alpha not in _STUDENTIZED_RANGE_INF:
        raise ValueError(f"alpha must be one of {sorted(_STUDENTIZED_RANGE_INF)}, got {alpha}")
    table = _STUDENTIZED_RANGE_INF[alpha]
    if not 2 <= n_models <= len(table) + 1:
        raise ValueError(f"number of models must be in 2..{len(table) + 1}, got {n_models}")
    return table[n_models - 2]


@dataclass(frozen=True)
class ErrorMatrix:
    """Rectangular loss table: one row per model, one column per dataset."""

    losses: np.ndarray
    models: tuple
    datasets: tuple

    def __post_init__(self):
        losses = np.asarray(self.losses, dtype=float)
        if losses.ndim != 2:
            raise ValueError("losses must be a 2-D (models x datasets) array")
        if not np.all(np.isfinite(losses)):
            raise ValueError("losses must be finite with no missing cells")
        if losses.shape != (len(self.models), len(self.datasets)):
            raise ValueError(
                f"losses shape {losses.shape} does not match "
                f"{len(self.models)} models x {len(self.datasets)} datasets"
            )
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "datasets", tuple(self.datasets))


@dataclass(frozen=True)
class McbResult:
    models: tuple
    mean_ranks: np.ndarray
    critical_distance: float
    intervals: np.ndarray  # (M, 2) rank +/- CD/2
    reference_upper: float  # top of the best model's interval
    alpha: float

    def worse_than_best(self) -> np.ndarray:
        """True where a model's interval lies entirely above the reference."""
        return self.intervals[:, 0] > self.reference_upper

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "critical_distance": self.critical_distance,
            "reference_upper": self.reference_upper,
            "models": [
                {
                    "name": name,
                    "mean_rank": float(self.mean_ranks[i]),
                    "lower": float(self.intervals[i, 0]),
                    "upper": float(self.intervals[i, 1]),
                    "worse_than_best": bool(self.worse_than_best()[i]),
                }
                for i, name in enumerate(self.models)
            ],
        }


def mcb_test(errors: ErrorMatrix, alpha: float = 0.05) -> McbResult:
    """Multiple comparisons with the best over an (M x D) loss table.

    Within each dataset models are ranked by loss (ties get average ranks),
    ranks are averaged across datasets, and each model receives the interval
    mean rank +/- CD / 2. A model is significantly worse than the best when
    its interval starts above the best model's interval top.
    """
    m, d = errors.losses.shape
    if m < 2 or d < 2:
        raise ValueError(f"MCB needs at least 2 models and 2 datasets, got {m} x {d}")
    ranks = np.empty_like(errors.losses)
    for j in range(d):
        ranks[:, j] = rankdata(errors.losses[:, j], method="average")
    mean_ranks = ranks.mean(axis=1)
    cd = studentized_range_quantile(m, alpha) * np.sqrt(m * (m + 1) / (6.0 * d))
    intervals = np.column_stack([mean_ranks - cd / 2.0, mean_ranks + cd / 2.0])
    reference_upper = float(intervals[np.argmin(mean_ranks), 1])
    return McbResult(
        models=errors.models,
        mean_ranks=mean_ranks,
        critical_distance=float(cd),
        intervals=intervals,
        reference_upper=reference_upper,
        alpha=alpha,
    )


@dataclass(frozen=True)
class FluctuationResult:
    statistic: np.ndarray  # one value per admissible window end (NaN where undefined)
    window_ends: np.ndarray  # index of the last observation in each window
    critical_value: float
    mu: float
    alpha: float
    window: int

    def exceeds(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.abs(self.statistic) > self.critical_value

    def to_dict(self) -> dict:
        stat = [None if not np.isfinite(s) else float(s) for s in self.statistic]
        return {
            "mu": self.mu,
            "alpha": self.alpha,
            "window": self.window,
            "critical_value": self.critical_value,
            "window_ends": self.window_ends.tolist(),
            "statistic": stat,
        }


def _bartlett_long_run_variance(d: np.ndarray, lag: int) -> float:
    """HAC long-run variance with Bartlett kernel weights and `lag` autocovariances."""
    w = len(d)
    centred = d - d.mean()
    gamma0 = float(centred @ centred) / w
    total = gamma0
    for k in range(1, min(lag, w - 1) + 1):
        gamma_k = float(centred[k:] @ centred[:-k]) / w
        total += 2.0 * (1.0 - k / (lag + 1.0)) * gamma_k
    return total


def fluctuation_critical_value(mu: float, alpha: float) -> float:
    """Two-sided critical value, nearest-mu lookup with a warning off the grid."""
    if alpha not in _FLUCTUATION_CRITICAL:
        raise ValueError(f"alpha must be one of {sorted(_FLUCTUATION_CRITICAL)}, got {alpha}")
    grid = np.asarray(_FLUCTUATION_MU_GRID)
    nearest = int(np.argmin(np.abs(grid - mu)))
    if abs(grid[nearest] - mu) > 1e-9:
        warnings.warn(
            f"mu={mu} is off the critical-value grid; using the value for mu={grid[nearest]}",
            stacklevel=2,
        )
    return _FLUCTUATION_CRITICAL[alpha][nearest]


def gr_fluctuation_test(loss_a, loss_b, mu: float, alpha: float = 0.05) -> FluctuationResult:
    """Rolling test of relative local forecasting performance.

    For each window of w = round(mu * n) consecutive out-of-sample losses the
    statistic is the mean loss differential (a minus b) divided by its HAC
    standard error (Bartlett kernel, truncation lag floor(w^(1/3))). Positive
    values mean model b is locally more accurate. A window with a
    zero-variance differential yields 0 when the models tie exactly and NaN
    (missing, not an error) when a constant gap leaves the scale undefined.
    """
    a = as_vector(loss_a, "loss_a")
    b = as_vector(loss_b, "loss_b")
    check_aligned(a, b, names=("loss_a", "loss_b"))
    check_in_range(mu, 0.0, 1.0, "mu")
    n = len(a)
    w = int(round(mu * n))
    if w < 2:
        raise ValueError(f"window round(mu * n) = {w} is too small; need at least 2")
    d = a - b
    lag = int(np.floor(w ** (1.0 / 3.0)))
    ends = np.arange(w - 1, n)
    stats = np.empty(len(ends))
    for i, e in enumerate(ends):
        window = d[e - w + 1 : e + 1]
        variance = _bartlett_long_run_variance(window, lag)
        if variance <= 0:
            # a degenerate window: identical performance is a clean zero,
            # a constant non-zero gap has no defined scale and is missing
            stats[i] = 0.0 if window.mean() == 0 else np.nan
        else:
            stats[i] = window.mean() / np.sqrt(variance / w)
    return FluctuationResult(
        statistic=stats,
        window_ends=ends,
        critical_value=fluctuation_critical_value(mu, alpha),
        mu=float(mu),
        alpha=float(alpha),
        window=w,
    )
