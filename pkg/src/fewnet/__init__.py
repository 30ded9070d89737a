"""Wavelet-ensemble neural forecasting for inflation under uncertainty.

The central estimator is `FewnetForecaster`: it decomposes the target with
the maximal-overlap discrete wavelet transform, augments each component with
economically filtered exogenous features (HP trends and CF cycles of the
target and two uncertainty indices), trains one small autoregressive neural
network per component, and sums the recursive component forecasts. Around it
sit the reference forecasters, forecast-accuracy metrics, model-comparison
tests, conformal prediction intervals, and the experiment CLI.
"""

__version__ = "0.1.0"

from .arnn import ArnnForecaster, DesignSet, make_design
from .baselines import (
    ArModel,
    AutoregressiveForecaster,
    RandomWalkDriftForecaster,
    RandomWalkForecaster,
    ar_fit,
    ar_forecast,
    read_forecast_csv,
)
from .comparisons import (
    ErrorMatrix,
    FluctuationResult,
    McbResult,
    gr_fluctuation_test,
    mcb_test,
    studentized_range_quantile,
)
from .conformal import (
    ConformalConfig,
    IntervalSeries,
    conformal_scores,
    conformalize,
    prediction_intervals,
    windowed_quantile,
)
from .econ_filters import (
    EXOGENOUS_COLUMNS,
    CfResult,
    ExogenousFeatures,
    HpResult,
    build_exogenous,
    cf_filter,
    hp_filter,
)
from .ensemble import FewnetForecaster, hidden_size, select_p
from .errors import (
    ConfigError,
    ContinuityError,
    DataFormatError,
    ExperimentError,
    TrainingDivergenceError,
)
from .metrics import MetricReport, compute_metrics, empirical_risk
from .series import (
    FoldSet,
    Month,
    SplitSpec,
    TimeSeries,
    load_csv,
    log_transform,
    rolling_origin_folds,
    split,
    yoy_inflation,
)
from .wavelets import (
    ModwtDecomposition,
    MraDecomposition,
    WaveletFilter,
    default_level,
    equivalent_filters,
    filter_coefficients,
    max_level,
    modwt,
    mra,
    reconstruct,
)

__all__ = [
    "__version__",
    "ArModel",
    "ArnnForecaster",
    "AutoregressiveForecaster",
    "CfResult",
    "ConfigError",
    "ConformalConfig",
    "ContinuityError",
    "DataFormatError",
    "DesignSet",
    "ErrorMatrix",
    "ExogenousFeatures",
    "EXOGENOUS_COLUMNS",
    "ExperimentError",
    "FewnetForecaster",
    "FluctuationResult",
    "FoldSet",
    "HpResult",
    "IntervalSeries",
    "McbResult",
    "MetricReport",
    "ModwtDecomposition",
    "Month",
    "MraDecomposition",
    "RandomWalkDriftForecaster",
    "RandomWalkForecaster",
    "SplitSpec",
    "TimeSeries",
    "TrainingDivergenceError",
    "WaveletFilter",
    "ar_fit",
    "ar_forecast",
    "build_exogenous",
    "cf_filter",
    "compute_metrics",
    "conformal_scores",
    "conformalize",
    "default_level",
    "empirical_risk",
    "equivalent_filters",
    "filter_coefficients",
    "gr_fluctuation_test",
    "hidden_size",
    "hp_filter",
    "load_csv",
    "log_transform",
    "make_design",
    "max_level",
    "mcb_test",
    "modwt",
    "mra",
    "prediction_intervals",
    "read_forecast_csv",
    "reconstruct",
    "rolling_origin_folds",
    "select_p",
    "split",
    "studentized_range_quantile",
    "windowed_quantile",
    "yoy_inflation",
]
