"""Hodrick-Prescott and Christiano-Fitzgerald filters and the exogenous feature set.

The HP filter extracts a smooth trend by penalised least squares; the CF
filter is the full-sample asymmetric approximation to the ideal band-pass
filter (the random-walk variant, computed without drift adjustment). Both are
applied to the inflation target and the two uncertainty indices to build the
six-column exogenous feature block consumed by the ensemble forecaster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .validation import as_vector, check_aligned

# Conventional smoothing parameter for monthly data (Ravn & Uhlig 2002).
HP_LAMBDA_MONTHLY = 129600.0

# Default pass-band in months: business cycles of 1.5 to 8 years.
CF_LOWER_MONTHS = 18.0
CF_UPPER_MONTHS = 96.0

EXOGENOUS_COLUMNS = (
    "hp_trend_cpi",
    "hp_trend_epu",
    "hp_trend_gprc",
    "cf_cycle_cpi",
    "cf_cycle_epu",
    "cf_cycle_gprc",
)


@dataclass(frozen=True)
class HpResult:
    """Trend/cycle split with trend + cycle = input exactly."""

    trend: np.ndarray
    cycle: np.ndarray
    smoothing: float


@dataclass(frozen=True)
class CfResult:
    """Band-pass cycle together with the period band that produced it."""

    cycle: np.ndarray
    lower_period: float
    upper_period: float


@dataclass(frozen=True)
class ExogenousFeatures:
    """Six aligned feature series in fixed column order (see EXOGENOUS_COLUMNS)."""

    matrix: np.ndarray  # shape (n, 6)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[1] != len(EXOGENOUS_COLUMNS):
            raise ValueError(f"feature matrix must have {len(EXOGENOUS_COLUMNS)} columns")
        object.__setattr__(self, "matrix", m)

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def columns(self) -> tuple:
        return EXOGENOUS_COLUMNS


def hp_filter(series, smoothing: float = HP_LAMBDA_MONTHLY) -> HpResult:
    """Hodrick-Prescott trend/cycle decomposition.

    The trend solves min_tau sum (y - tau)^2 + smoothing * sum (d2 tau)^2,
    i.e. the penta-diagonal system (I + smoothing * D'D) tau = y with D the
    second-difference operator, solved directly in O(n). The cycle is the
    residual y - tau, so the additive identity is exact.
    """
    y = as_vector(series, "series")
    n = len(y)
    if n < 4:
        raise ValueError(f"HP filter needs at least 4 observations, got {n}")
    if smoothing < 0:
        raise ValueError(f"smoothing must be non-negative, got {smoothing}")
    if smoothing == 0:
        trend = y.copy()
    else:
        # Upper banded form of I + smoothing * D'D for solveh_banded.
        diag = np.full(n, 6.0)
        diag[[0, -1]] = 1.0
        diag[[1, -2]] = 5.0
        super1 = np.full(n - 1, -4.0)
        super1[[0, -1]] = -2.0
        super2 = np.ones(n - 2)
        ab = np.zeros((3, n))
        ab[0, 2:] = smoothing * super2
        ab[1, 1:] = smoothing * super1
        ab[2, :] = 1.0 + smoothing * diag
        trend = solveh_banded(ab, y)
        # one step of iterative refinement; the system's condition number grows
        # with the smoothing parameter and the raw solve can lose ~lambda*eps
        residual = y - _apply_penalised_operator(trend, smoothing)
        trend = trend + solveh_banded(ab, residual)
    return HpResult(trend=trend, cycle=y - trend, smoothing=float(smoothing))


def _apply_penalised_operator(tau: np.ndarray, smoothing: float) -> np.ndarray:
    """(I + smoothing * D'D) tau without forming the matrix."""
    d2 = np.diff(tau, n=2)
    out = tau.copy()
    out[:-2] += smoothing * d2
    out[1:-1] += smoothing * (-2.0 * d2)
    out[2:] += smoothing * d2
    return out


def cf_weight_matrix(n: int, lower_period: float, upper_period: float) -> np.ndarray:
    """Full-sample asymmetric CF filter weights as an (n, n) matrix.

    Interior weights are phi_j = (sin(j*b) - sin(j*a)) / (pi*j) with
    a = 2*pi/upper, b = 2*pi/lower and phi_0 = (b - a)/pi; the first and
    last observations instead receive the truncation weights
    phi~_k = -phi_0/2 - sum_{j=1}^{k-1} phi_j, which force a zero weight sum
    (zero DC gain) in every row.
    """
    if not 2 <= lower_period < upper_period:
        raise ValueError(
            f"need 2 <= lower_period < upper_period, got ({lower_period}, {upper_period})"
        )
    a = 2.0 * np.pi / upper_period
    b = 2.0 * np.pi / lower_period
    j = np.arange(1, n)
    phi = np.empty(n)
    phi[0] = (b - a) / np.pi
    phi[1:] = (np.sin(j * b) - np.sin(j * a)) / (np.pi * j)
    # phi_cum[k] = sum_{j=1}^{k} phi_j, so endpoint weight phi~_k = -phi_0/2 - phi_cum[k-1]
    phi_cum = np.concatenate([[0.0], np.cumsum(phi[1:])])

    weights = np.zeros((n, n))
    for t in range(1, n + 1):
        row = weights[t - 1]
        row[t - 1] += phi[0]
        n_fwd = n - 1 - t  # forward interior terms y_{t+1} .. y_{n-1}
        if n_fwd > 0:
            row[t : t + n_fwd] += phi[1 : n_fwd + 1]
        row[n - 1] += -0.5 * phi[0] - phi_cum[max(n - t - 1, 0)]
        n_bwd = t - 2  # backward interior terms y_{t-1} .. y_2
        if n_bwd > 0:
            row[t - 1 - n_bwd : t - 1] += phi[1 : n_bwd + 1][::-1]
        row[0] += -0.5 * phi[0] - phi_cum[max(t - 2, 0)]
    return weights


def cf_filter(series, lower_period: float = CF_LOWER_MONTHS, upper_period: float = CF_UPPER_MONTHS) -> CfResult:
    """Christiano-Fitzgerald band-pass cycle with periods in (lower, upper) months."""
    y = as_vector(series, "series")
    if len(y) < 8:
        raise ValueError(f"CF filter needs at least 8 observations, got {len(y)}")
    cycle = cf_weight_matrix(len(y), lower_period, upper_period) @ y
    return CfResult(cycle=cycle, lower_period=float(lower_period), upper_period=float(upper_period))


def build_exogenous(
    cpi_inflation,
    log_epu,
    gprc,
    smoothing: float = HP_LAMBDA_MONTHLY,
    lower_period: float = CF_LOWER_MONTHS,
    upper_period: float = CF_UPPER_MONTHS,
) -> ExogenousFeatures:
    """Assemble the six-column exogenous block: HP trends then CF cycles.

    Column order is fixed: trend(CPI), trend(logEPU), trend(GPRC),
    cycle(CPI), cycle(logEPU), cycle(GPRC). All three inputs must share
    start and length; filters see only the window they are given, so
    fitting on a training slice cannot leak future information.
    """
    y = as_vector(cpi_inflation, "cpi_inflation")
    e = as_vector(log_epu, "log_epu")
    g = as_vector(gprc, "gprc")
    check_aligned(y, e, g, names=("cpi_inflation", "log_epu", "gprc"))
    cols = [hp_filter(s, smoothing).trend for s in (y, e, g)]
    cols += [cf_filter(s, lower_period, upper_period).cycle for s in (y, e, g)]
    return ExogenousFeatures(matrix=np.column_stack(cols))
