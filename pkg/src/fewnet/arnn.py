"""Single-hidden-layer autoregressive neural network with exogenous inputs.

The network maps p inputs (lagged target values plus one lagged observation
of each exogenous column) through q logistic-sigmoid hidden units to a linear
output. Training is full-batch gradient descent on mean squared error, run
independently from several seeded random restarts whose predictions are
averaged; inputs and target are standardised before training. Everything is
deterministic given (data, hyperparameters, seed).
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator

from .errors import TrainingDivergenceError
from .validation import as_matrix, as_vector, derive_seed

_SCALE_FLOOR = 1e-8
_SERIALISATION_FORMAT = "fewnet-arnn/1"


class DesignSet:
    """Supervised rows (lag vector, exogenous vector, label) built from a series.

    Row t has lags (y_{t-1}, ..., y_{t-p}) ordered most-recent-first, the
    exogenous observation X_{t-1}, and label y_t.
    """

    def __init__(self, lags: np.ndarray, exog: np.ndarray | None, labels: np.ndarray):
        lags = np.asarray(lags, dtype=float)
        labels = np.asarray(labels, dtype=float)
        if lags.ndim != 2 or labels.ndim != 1 or lags.shape[0] != labels.shape[0]:
            raise ValueError("lags must be (rows, p_lags) aligned with labels")
        if exog is not None:
            exog = np.asarray(exog, dtype=float)
            if exog.shape[0] != labels.shape[0]:
                raise ValueError("exogenous rows must align with labels")
        self.lags = lags
        self.exog = exog
        self.labels = labels

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def n_lags(self) -> int:
        return self.lags.shape[1]

    @property
    def n_exog(self) -> int:
        return 0 if self.exog is None else self.exog.shape[1]

    def inputs(self) -> np.ndarray:
        """Full input matrix, lag columns first then exogenous columns."""
        if self.exog is None:
            return self.lags
        return np.hstack([self.lags, self.exog])


def make_design(target, p_lags: int, exog=None) -> DesignSet:
    """Build the lagged design set for a series, optionally with exogenous columns.

    Rejects under-determined designs: there must be at least as many rows as
    input columns rather than silently shrinking the lag order.
    """
    y = as_vector(target, "target")
    n = len(y)
    if p_lags < 1:
        raise ValueError(f"p_lags must be >= 1, got {p_lags}")
    if p_lags >= n:
        raise ValueError(f"p_lags={p_lags} leaves no rows for a series of length {n}")
    rows = n - p_lags
    idx = np.arange(p_lags, n)
    # column j holds y_{t-1-j}: most recent lag first
    lag_matrix = y[idx[:, None] - 1 - np.arange(p_lags)[None, :]]
    exog_rows = None
    width = p_lags
    if exog is not None:
        x = as_matrix(exog, "exog")
        if x.shape[0] != n:
            raise ValueError(f"exogenous matrix has {x.shape[0]} rows, expected {n}")
        exog_rows = x[idx - 1]
        width += x.shape[1]
    if rows < width:
        raise ValueError(
            f"design has {rows} rows for {width} input columns; "
            f"need a series of length >= {p_lags + width}"
        )
    return DesignSet(lags=lag_matrix, exog=exog_rows, labels=y[idx])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward(x: np.ndarray, w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray):
    """Batched forward pass: x (n, p), weights with leading restart axis R."""
    z = np.einsum("np,rpq->rnq", x, w1) + b1[:, None, :]
    hidden = _sigmoid(z)
    yhat = np.einsum("rnq,rq->rn", hidden, w2) + b2[:, None]
    return yhat, hidden


def _mse_and_grad(x, y, w1, b1, w2, b2):
    """Mean-squared-error loss and its analytic gradient, per restart."""
    n = len(y)
    yhat, hidden = _forward(x, w1, b1, w2, b2)
    resid = yhat - y[None, :]
    loss = (resid**2).mean(axis=1)
    d_out = 2.0 * resid / n  # (R, n)
    g_b2 = d_out.sum(axis=1)
    g_w2 = np.einsum("rn,rnq->rq", d_out, hidden)
    d_hidden = d_out[:, :, None] * w2[:, None, :] * hidden * (1.0 - hidden)
    g_w1 = np.einsum("np,rnq->rpq", x, d_hidden)
    g_b1 = d_hidden.sum(axis=1)
    return loss, (g_w1, g_b1, g_w2, g_b2)


def _flat_loss_and_grad(params: np.ndarray, x: np.ndarray, y: np.ndarray, q: int):
    """Single-network loss/gradient on a flat parameter vector.

    Layout: w1 (p*q, C-order), b1 (q), w2 (q), b2 (1). Exists so the
    analytic gradient can be checked against finite differences.
    """
    p = x.shape[1]
    w1, b1, w2, b2 = _unpack(params, p, q)
    # b2 from _unpack is already the length-1 batch axis
    loss, (g_w1, g_b1, g_w2, g_b2) = _mse_and_grad(x, y, w1[None], b1[None], w2[None], b2)
    grad = np.concatenate([g_w1[0].ravel(), g_b1[0], g_w2[0], g_b2])
    return float(loss[0]), grad


def _unpack(params: np.ndarray, p: int, q: int):
    w1 = params[: p * q].reshape(p, q)
    b1 = params[p * q : p * q + q]
    w2 = params[p * q + q : p * q + 2 * q]
    b2 = params[p * q + 2 * q :]
    return w1, b1, w2, b2


def _init_restarts(p: int, q: int, restarts: int, seed: int):
    """Uniform(-0.5, 0.5) weights, one independent generator per restart."""
    w1 = np.empty((restarts, p, q))
    b1 = np.empty((restarts, q))
    w2 = np.empty((restarts, q))
    b2 = np.empty(restarts)
    for r in range(restarts):
        rng = np.random.default_rng(derive_seed(seed, "restart", r))
        w1[r] = rng.uniform(-0.5, 0.5, size=(p, q))
        b1[r] = rng.uniform(-0.5, 0.5, size=q)
        w2[r] = rng.uniform(-0.5, 0.5, size=q)
        b2[r] = rng.uniform(-0.5, 0.5)
    return w1, b1, w2, b2


class ArnnForecaster(BaseEstimator):
    """Autoregressive neural network forecaster.

    Parameters
    ----------
    lags : int
        Number of lagged target values in the input layer.
    hidden : int or None
        Hidden-layer width. None applies the nearest-integer rule
        (p + 1) / 2 with p the total input width (lags + exogenous columns).
    epochs : int
        Full-batch gradient-descent steps per restart.
    learning_rate : float
        Fixed gradient-descent step size.
    restarts : int
        Number of independently initialised trainings; predictions average
        the restarts.
    seed : int
        Base seed; each restart derives its own child seed from it.
    """

    def __init__(self, lags=1, hidden=None, epochs=500, learning_rate=0.05, restarts=20, seed=0):
        self.lags = lags
        self.hidden = hidden
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.restarts = restarts
        self.seed = seed

    def _check_params(self):
        if self.lags < 1:
            raise ValueError(f"lags must be >= 1, got {self.lags}")
        if self.hidden is not None and self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if self.epochs < 1 or self.restarts < 1:
            raise ValueError("epochs and restarts must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")

    def fit(self, y, X=None):
        """Fit on a series `y` and optional aligned exogenous matrix `X` (n, n_exog)."""
        self._check_params()
        y = as_vector(y, "y")
        design = make_design(y, self.lags, X)
        inputs = design.inputs()

        self.n_exog_ = design.n_exog
        p = inputs.shape[1]
        self.hidden_ = self.hidden if self.hidden is not None else max(1, round((p + 1) / 2))
        self.centers_ = inputs.mean(axis=0)
        self.scales_ = np.maximum(inputs.std(axis=0), _SCALE_FLOOR)
        self.y_center_ = float(design.labels.mean())
        self.y_scale_ = float(max(design.labels.std(), _SCALE_FLOOR))

        x_std = (inputs - self.centers_) / self.scales_
        y_std = (design.labels - self.y_center_) / self.y_scale_
        weights, loss_curve = self._descend(x_std, y_std)
        self.weights_ = weights
        self.loss_curve_ = loss_curve
        self.history_ = y[-self.lags :].copy()
        self.last_exog_ = None if X is None else as_matrix(X, "X")[-1].copy()
        self.design_ = design
        return self

    def _descend(self, x_std, y_std):
        p = x_std.shape[1]
        w1, b1, w2, b2 = _init_restarts(p, self.hidden_, self.restarts, self.seed)
        curve = np.empty((self.restarts, self.epochs + 1))
        lr = self.learning_rate
        with np.errstate(over="ignore", invalid="ignore"):
            # divergence shows up as a non-finite loss and is raised explicitly
            for epoch in range(self.epochs):
                loss, (g_w1, g_b1, g_w2, g_b2) = _mse_and_grad(x_std, y_std, w1, b1, w2, b2)
                if not np.all(np.isfinite(loss)):
                    bad = int(np.flatnonzero(~np.isfinite(loss))[0])
                    raise TrainingDivergenceError(restart=bad, epoch=epoch)
                curve[:, epoch] = loss
                w1 -= lr * g_w1
                b1 -= lr * g_b1
                w2 -= lr * g_w2
                b2 -= lr * g_b2
            final_loss, _ = _mse_and_grad(x_std, y_std, w1, b1, w2, b2)
        if not np.all(np.isfinite(final_loss)):
            bad = int(np.flatnonzero(~np.isfinite(final_loss))[0])
            raise TrainingDivergenceError(restart=bad, epoch=self.epochs)
        curve[:, -1] = final_loss
        return {"w1": w1, "b1": b1, "w2": w2, "b2": b2}, curve

    def _predict_rows(self, rows: np.ndarray) -> np.ndarray:
        """Restart-averaged predictions for raw (unstandardised) input rows."""
        x_std = (rows - self.centers_) / self.scales_
        w = self.weights_
        yhat_std, _ = _forward(x_std, w["w1"], w["b1"], w["w2"], w["b2"])
        return (yhat_std * self.y_scale_ + self.y_center_).mean(axis=0)

    def predict_one(self, lag_values, exog_values=None) -> float:
        """One-step prediction from an explicit lag vector (most recent first)."""
        lag_values = np.asarray(lag_values, dtype=float)
        if lag_values.shape != (self.lags,):
            raise ValueError(f"expected {self.lags} lag values, got shape {lag_values.shape}")
        if self.n_exog_:
            if exog_values is None:
                raise ValueError("model was fitted with exogenous inputs; exog_values is required")
            exog_values = np.asarray(exog_values, dtype=float)
            if exog_values.shape != (self.n_exog_,):
                raise ValueError(f"expected {self.n_exog_} exogenous values, got shape {exog_values.shape}")
            row = np.concatenate([lag_values, exog_values])
        else:
            if exog_values is not None:
                raise ValueError("model was fitted without exogenous inputs")
            row = lag_values
        return float(self._predict_rows(row[None, :])[0])

    def predict(self, horizon: int, X_future=None) -> np.ndarray:
        """Recursive multi-step forecast.

        Each step feeds the most recent predictions back into the lag vector.
        With exogenous inputs, `X_future` supplies one row per step; when it
        is omitted the last observed exogenous row is held fixed for every
        step (the no-information default).
        """
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        if X_future is not None:
            if not self.n_exog_:
                raise ValueError("model was fitted without exogenous inputs; X_future is not allowed")
            X_future = as_matrix(X_future, "X_future")
            if X_future.shape != (horizon, self.n_exog_):
                raise ValueError(
                    f"X_future must have shape ({horizon}, {self.n_exog_}), got {X_future.shape}"
                )
        history = list(self.history_)
        out = np.empty(horizon)
        for h in range(horizon):
            lag_vec = np.array(history[-self.lags :][::-1])
            if self.n_exog_:
                exog_vec = self.last_exog_ if X_future is None else X_future[h]
                out[h] = self.predict_one(lag_vec, exog_vec)
            else:
                out[h] = self.predict_one(lag_vec)
            history.append(out[h])
        return out

    def fitted_values(self) -> np.ndarray:
        """In-sample predictions, one per design row."""
        return self._predict_rows(self.design_.inputs())

    def insample_residuals(self) -> np.ndarray:
        return self.design_.labels - self.fitted_values()

    def to_json(self) -> str:
        """Serialise to a flat numeric JSON document; round-trips bit-exactly."""
        w = self.weights_
        payload = {
            "format": _SERIALISATION_FORMAT,
            "params": self.get_params(),
            "n_exog": self.n_exog_,
            "hidden": self.hidden_,
            "centers": self.centers_.tolist(),
            "scales": self.scales_.tolist(),
            "y_center": self.y_center_,
            "y_scale": self.y_scale_,
            "history": self.history_.tolist(),
            "last_exog": None if self.last_exog_ is None else self.last_exog_.tolist(),
            "weights": {k: w[k].tolist() for k in ("w1", "b1", "w2", "b2")},
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ArnnForecaster":
        payload = json.loads(text)
        if payload.get("format") != _SERIALISATION_FORMAT:
            raise ValueError(f"unrecognised serialisation format {payload.get('format')!r}")
        model = cls(**payload["params"])
        model.n_exog_ = int(payload["n_exog"])
        model.hidden_ = int(payload["hidden"])
        model.centers_ = np.asarray(payload["centers"], dtype=float)
        model.scales_ = np.asarray(payload["scales"], dtype=float)
        model.y_center_ = float(payload["y_center"])
        model.y_scale_ = float(payload["y_scale"])
        model.history_ = np.asarray(payload["history"], dtype=float)
        model.last_exog_ = (
            None if payload["last_exog"] is None else np.asarray(payload["last_exog"], dtype=float)
        )
        model.weights_ = {k: np.asarray(v, dtype=float) for k, v in payload["weights"].items()}
        return model
