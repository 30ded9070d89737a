"""Wavelet-ensemble forecaster: one autoregressive network per MODWT component.

The target series is decomposed into K detail series and one smooth series
(K defaults to floor(ln n)); each component is modelled by its own network
whose inputs are component lags plus the six economically filtered exogenous
features (HP trends and CF cycles of the target and the two uncertainty
indices). Component forecasts are produced recursively and summed, so the
ensemble forecast is the exact sum of the component forecasts at every step.
Disabling the economic filters yields the wavelet-only ablation of the model.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator

from .arnn import ArnnForecaster
from .econ_filters import CF_LOWER_MONTHS, CF_UPPER_MONTHS, HP_LAMBDA_MONTHLY, build_exogenous
from .errors import TrainingDivergenceError
from .metrics import smape_percent
from .series import rolling_origin_folds
from .validation import as_matrix, as_vector, derive_seed
from .wavelets import default_level, filter_coefficients, modwt, mra

_BUNDLE_FORMAT = "fewnet-ensemble/1"
N_EXOGENOUS = 6


def hidden_size(p: int) -> int:
    """Hidden-layer width rule: nearest integer to (p + 1) / 2, at least 1.

    Ties round half-to-even; p is the total input-layer width.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return max(1, round((p + 1) / 2))


class FewnetForecaster(BaseEstimator):
    """Ensemble wavelet neural network with economically filtered exogenous inputs.

    Parameters
    ----------
    wavelet : str
        MODWT filter name (haar, d8, la8, c6, bl14).
    levels : int or None
        Decomposition depth K; None applies floor(ln n) on the training length.
    p_grid : sequence of int or None
        Candidate total input widths searched by cross-validated SMAPE.
        None means 7..24 with the economic filters on (six exogenous columns
        occupy the input layer, so p must exceed 6) and 1..24 without them.
    use_econ_filters : bool
        False drops the six exogenous features entirely (the wavelet-only
        ablation); component networks then consume p pure lags.
    hp_smoothing, cf_lower, cf_upper : float
        Economic-filter settings used to build the exogenous block.
    epochs, learning_rate, restarts : training hyperparameters per component.
    cv_folds, cv_horizon : rolling-origin cross-validation geometry for the
        lag-order search.
    zero_detail_levels : sequence of int
        Detail levels (1-based) whose forecasts are forced to zero, for
        suppressing pure-noise fine scales. Off by default.
    seed : int
        Top-level seed; every component and restart derives from it.
    n_jobs : int
        Component trainings to run concurrently. Results are independent of
        the schedule because randomness is derived per component.
    """

    def __init__(
        self,
        wavelet="haar",
        levels=None,
        p_grid=None,
        use_econ_filters=True,
        hp_smoothing=HP_LAMBDA_MONTHLY,
        cf_lower=CF_LOWER_MONTHS,
        cf_upper=CF_UPPER_MONTHS,
        epochs=500,
        learning_rate=0.05,
        restarts=20,
        cv_folds=5,
        cv_horizon=12,
        zero_detail_levels=(),
        seed=0,
        n_jobs=1,
    ):
        self.wavelet = wavelet
        self.levels = levels
        self.p_grid = p_grid
        self.use_econ_filters = use_econ_filters
        self.hp_smoothing = hp_smoothing
        self.cf_lower = cf_lower
        self.cf_upper = cf_upper
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.restarts = restarts
        self.cv_folds = cv_folds
        self.cv_horizon = cv_horizon
        self.zero_detail_levels = zero_detail_levels
        self.seed = seed
        self.n_jobs = n_jobs

    # -- fitting ---------------------------------------------------------

    def _n_exog(self) -> int:
        return N_EXOGENOUS if self.use_econ_filters else 0

    def _resolve_grid(self):
        n_exog = self._n_exog()
        if self.p_grid is None:
            grid = list(range(7, 25)) if n_exog else list(range(1, 25))
        else:
            grid = sorted(set(int(p) for p in self.p_grid))
        if not grid:
            raise ValueError("p_grid must be non-empty")
        bad = [p for p in grid if p <= n_exog]
        if bad:
            raise ValueError(
                f"every p in the grid must exceed the {n_exog} exogenous columns, got {bad}"
            )
        return grid

    def _exog_matrix(self, y: np.ndarray, X) :
        if not self.use_econ_filters:
            return None
        if X is None:
            raise ValueError("use_econ_filters=True needs X with columns (log_epu, gprc)")
        X = as_matrix(X, "X")
        if X.shape != (len(y), 2):
            raise ValueError(f"X must have shape ({len(y)}, 2), got {X.shape}")
        return build_exogenous(
            y, X[:, 0], X[:, 1], self.hp_smoothing, self.cf_lower, self.cf_upper
        ).matrix

    def _fit_components(self, y: np.ndarray, X, p: int, seed: int):
        """Decompose y, then train one network per detail/smooth component."""
        n = len(y)
        level = self.levels if self.levels is not None else default_level(n)
        filt = filter_coefficients(self.wavelet)
        analysis = mra(modwt(y, filt, level))
        exog = self._exog_matrix(y, X)
        lags = p - self._n_exog()
        component_series = [analysis.details[k] for k in range(level)] + [analysis.smooth]

        def train_one(k):
            model = ArnnForecaster(
                lags=lags,
                hidden=hidden_size(p),
                epochs=self.epochs,
                learning_rate=self.learning_rate,
                restarts=self.restarts,
                seed=derive_seed(seed, "component", k),
            )
            return model.fit(component_series[k], exog)

        indices = range(level + 1)
        if self.n_jobs and self.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                components = list(pool.map(train_one, indices))
        else:
            components = [train_one(k) for k in indices]
        return level, analysis, exog, components

    def fit(self, y, X=None):
        """Fit on the training series `y` and exogenous matrix `X` (n, 2).

        `X` columns are the log-transformed policy-uncertainty index and the
        geopolitical-risk index, aligned with `y`. Ignored (and allowed to
        be None) when `use_econ_filters` is False.
        """
        y = as_vector(y, "y")
        grid = self._resolve_grid()
        max_p = max(grid)
        # the design needs at least as many rows as input columns
        required = (max_p - self._n_exog()) + max_p
        if len(y) < required:
            raise ValueError(
                f"series of length {len(y)} is too short for p={max_p} (needs >= {required})"
            )
        if len(grid) == 1:
            self.p_ = grid[0]
            self.cv_table_ = {grid[0]: float("nan")}
        else:
            folds = rolling_origin_folds(y, self.cv_folds, self.cv_horizon)
            self.p_, self.cv_table_ = select_p(y, X, grid, folds, self)
        self.q_ = hidden_size(self.p_)
        self.level_, self.mra_, self.exog_, self.components_ = self._fit_components(
            y, X, self.p_, self.seed
        )
        return self

    # -- forecasting -----------------------------------------------------

    def predict_components(self, horizon: int, exog_future=None) -> np.ndarray:
        """Per-component recursive forecasts, shape (K + 1, horizon).

        Rows 0..K-1 are the detail components (levels 1..K), row K is the
        smooth. By default the six exogenous features are frozen at their
        last training values for every step (nothing about the future is
        known); alternatively `exog_future` supplies one (horizon, 6) row of
        feature values per step, ordered as EXOGENOUS_COLUMNS. Levels listed
        in `zero_detail_levels` forecast zero.
        """
        if exog_future is not None:
            exog_future = as_matrix(exog_future, "exog_future")
            if exog_future.shape != (horizon, self._n_exog()):
                raise ValueError(
                    f"exog_future must have shape ({horizon}, {self._n_exog()}), "
                    f"got {exog_future.shape}"
                )
        zeroed = set(int(k) for k in self.zero_detail_levels)
        out = np.empty((len(self.components_), horizon))
        for k, model in enumerate(self.components_):
            if k + 1 <= self.level_ and (k + 1) in zeroed:
                out[k] = 0.0
            else:
                out[k] = model.predict(horizon, X_future=exog_future)
        return out

    def predict(self, horizon: int, exog_future=None) -> np.ndarray:
        """Ensemble forecast: the sum of the component forecasts at each step."""
        return self.predict_components(horizon, exog_future).sum(axis=0)

    # -- diagnostics -----------------------------------------------------

    def empirical_risk_w(self) -> float:
        """Mean squared sum of component in-sample residuals.

        Because the ensemble forecast is the sum of component forecasts,
        this equals the mean squared in-sample residual of the recombined
        prediction, evaluated on the rows where every component has one.
        """
        total = None
        for model in self.components_:
            resid = model.insample_residuals()
            total = resid if total is None else total + resid
        return float((total**2).mean())

    # -- serialisation ---------------------------------------------------

    def to_json(self) -> str:
        """Bundle: resolved structure plus the K + 1 serialised component models."""
        payload = {
            "format": _BUNDLE_FORMAT,
            "params": _jsonable_params(self.get_params()),
            "level": self.level_,
            "p": self.p_,
            "q": self.q_,
            "components": [m.to_json() for m in self.components_],
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FewnetForecaster":
        payload = json.loads(text)
        if payload.get("format") != _BUNDLE_FORMAT:
            raise ValueError(f"unrecognised bundle format {payload.get('format')!r}")
        model = cls(**payload["params"])
        model.level_ = int(payload["level"])
        model.p_ = int(payload["p"])
        model.q_ = int(payload["q"])
        model.components_ = [ArnnForecaster.from_json(c) for c in payload["components"]]
        return model


def _jsonable_params(params: dict) -> dict:
    out = dict(params)
    for key in ("p_grid", "zero_detail_levels"):
        if out.get(key) is not None:
            out[key] = list(out[key])
    return out


def select_p(y, X, grid, folds, config: FewnetForecaster):
    """Choose the input width by cross-validated SMAPE.

    For each candidate p the full ensemble is refitted on every fold's train
    slice and scored on the fold's validation window; the candidate with the
    lowest mean SMAPE wins, ties going to the smaller p. Candidates whose
    training diverges on some fold are skipped; if every candidate fails, a
    selection error is raised.
    """
    y = as_vector(y, "y")
    X = None if X is None else as_matrix(X, "X")
    scores: dict[int, float] = {}
    failures: dict[int, str] = {}
    for p in grid:
        fold_scores = []
        try:
            for train_idx, val_idx in folds:
                candidate = FewnetForecaster(
                    **{**config.get_params(), "p_grid": [p], "n_jobs": 1}
                )
                candidate.seed = derive_seed(config.seed, "cv", p)
                candidate.fit(y[train_idx], None if X is None else X[train_idx])
                forecast = candidate.predict(len(val_idx))
                fold_scores.append(smape_percent(y[val_idx], forecast))
        except (TrainingDivergenceError, ValueError) as exc:
            failures[p] = str(exc)
            continue
        scores[p] = float(np.mean(fold_scores))
    if not scores:
        detail = "; ".join(f"p={p}: {msg}" for p, msg in failures.items())
        raise RuntimeError(f"lag-order selection failed for every candidate ({detail})")
    best = min(scores, key=lambda p: (scores[p], p))
    return best, scores
