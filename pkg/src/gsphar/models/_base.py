from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import check_panel, check_square_nonneg
from ..spillover import SpilloverGraph

SHORT, MID, LONG = 1, 5, 22
WINDOW_MODES = ("overlapping", "partitioned")
TARGET_MODES = ("point", "mean")


def window_slices(mode: str) -> tuple[slice, slice]:
    """Lag-order slices (lag 1 at position 0) of the mid and long pooling windows."""
    if mode == "overlapping":
        return slice(0, MID), slice(0, LONG)
    if mode == "partitioned":
        return slice(SHORT, MID), slice(MID, LONG)
    raise ValueError(f"unknown window mode {mode!r}; expected one of {WINDOW_MODES}")


def lag_windows(values: np.ndarray, first: int = LONG, last: int | None = None) -> np.ndarray:
    """(S, 22, N) chronological windows ``values[t-22:t]`` for origins t in [first, last]."""
    T = values.shape[0]
    last = T if last is None else last
    if first < LONG:
        raise ValueError(f"origins need {LONG} lags of history")
    if last > T:
        raise ValueError("origin beyond the end of the panel")
    if last < first:
        return np.zeros((0, LONG, values.shape[1]))
    view = np.lib.stride_tricks.sliding_window_view(values, LONG, axis=0)  # (T-21, N, 22)
    return np.ascontiguousarray(view[first - LONG : last - LONG + 1].transpose(0, 2, 1))


def horizon_targets(values: np.ndarray, horizon: int, mode: str = "point") -> np.ndarray:
    """Targets for origins t = 22..T-H: ``v_{t+H-1}`` or the mean of ``v_t..v_{t+H-1}``."""
    T = values.shape[0]
    n = T - LONG - horizon + 1
    if n <= 0:
        return np.zeros((0, values.shape[1]))
    if mode == "point":
        return values[LONG + horizon - 1 : LONG + horizon - 1 + n].copy()
    if mode == "mean":
        csum = np.vstack([np.zeros((1, values.shape[1])), np.cumsum(values, axis=0)])
        return (csum[LONG + horizon : LONG + horizon + n] - csum[LONG:LONG + n]) / horizon
    raise ValueError(f"unknown target mode {mode!r}; expected one of {TARGET_MODES}")


def lag_order(windows: np.ndarray) -> np.ndarray:
    """(S, 22, N) chronological windows -> (S, N, 22) with lag 1 first."""
    return np.ascontiguousarray(windows[:, ::-1, :].transpose(0, 2, 1))


def pooled_features(windows: np.ndarray, mode: str = "overlapping") -> np.ndarray:
    """Equal-weight HAR features (S, N, 3): lag 1, mid-window mean, long-window mean."""
    lags = lag_order(windows)
    mid, long = window_slices(mode)
    return np.stack([lags[..., 0], lags[..., mid].mean(axis=-1), lags[..., long].mean(axis=-1)], axis=-1)


def weighted_pool(lags: np.ndarray, weights: np.ndarray, window: slice) -> np.ndarray:
    """Convex-weighted pooling: ``sum_k weights[n, k] * lags[s, n, k]`` over the window."""
    return np.einsum("snk,nk->sn", lags[..., window], weights)


def ols(X: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Least squares with an optional ridge on every column except the first (intercept)."""
    k = X.shape[1]
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0) or np.linalg.matrix_rank(X / scale) < k:
        raise ValueError("degenerate regression design (rank deficient)")
    if ridge > 0:
        pen = np.sqrt(ridge) * np.eye(k)[1:]
        X = np.vstack([X, pen])
        y = np.concatenate([y, np.zeros((k - 1,) + y.shape[1:])])
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta


def har_design(features: np.ndarray) -> np.ndarray:
    """Prepend an intercept column to (S, 3) features."""
    return np.column_stack([np.ones(features.shape[0]), features])


class PanelForecaster(BaseEstimator):
    """Common fit/predict plumbing for direct H-step forecasters on a T x N panel.

    A sample has origin ``t``: its inputs are rows ``t-22..t-1`` and its
    target is row ``t+H-1`` (``target="point"``) or the mean of rows
    ``t..t+H-1`` (``target="mean"``).
    """

    def _check_config(self):
        if int(self.horizon) < 1:
            raise ValueError("horizon must be >= 1")
        if self.target not in TARGET_MODES:
            raise ValueError(f"unknown target mode {self.target!r}")
        if getattr(self, "windows", "overlapping") not in WINDOW_MODES:
            raise ValueError(f"unknown window mode {self.windows!r}")

    def _training_samples(self, X):
        self._check_config()
        values = check_panel(X, min_rows=LONG + self.horizon + 1)
        windows = lag_windows(values, LONG, values.shape[0] - self.horizon)
        targets = horizon_targets(values, self.horizon, self.target)
        return values, windows, targets

    def fit(self, X, y=None):
        values, windows, targets = self._training_samples(X)
        self.n_features_in_ = values.shape[1]
        self._fit(X, values, windows, targets)
        return self

    def _check_input(self, X):
        check_is_fitted(self)
        values = check_panel(X, min_rows=LONG)
        if values.shape[1] != self.n_features_in_:
            raise ValueError(f"panel has {values.shape[1]} columns, model was fit on {self.n_features_in_}")
        return values

    def predict(self, X) -> np.ndarray:
        """Forecasts aligned with the panel's own targets (origins 22..T-H)."""
        values = self._check_input(X)
        windows = lag_windows(values, LONG, values.shape[0] - self.horizon)
        return self.predict_windows(windows)

    def targets(self, X) -> np.ndarray:
        return horizon_targets(check_panel(X), self.horizon, self.target)

    def forecast(self, X, start: int | None = None, stop: int | None = None) -> np.ndarray:
        """Forecasts for target rows ``start..stop-1`` of the panel.

        Rows past the end of the panel are allowed as long as their
        22-day input window is available (true out-of-sample forecasts).
        """
        values = self._check_input(X)
        T = values.shape[0]
        first_row = LONG + self.horizon - 1
        start = first_row if start is None else int(start)
        stop = T if stop is None else int(stop)
        if start < first_row:
            raise ValueError(f"row {start} lacks history; the first forecastable row is {first_row}")
        if stop - self.horizon > T:
            raise ValueError(f"row {stop - 1} needs history beyond the end of the panel")
        windows = lag_windows(values, start - self.horizon + 1, stop - self.horizon)
        return self.predict_windows(windows)

    def predict_windows(self, windows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def n_params_(self) -> int:
        raise NotImplementedError


class GraphMixin:
    """Resolves the spillover adjacency: given explicitly or estimated from the training panel."""

    def _resolve_adjacency(self, X, values):
        if self.adjacency is not None:
            A = check_square_nonneg(getattr(self.adjacency, "values", self.adjacency))
            if A.shape[0] != values.shape[1]:
                raise ValueError("adjacency size does not match the panel")
            return A
        graph = SpilloverGraph(
            var_order=self.var_order,
            horizon=self.spillover_horizon or self.horizon,
            ridge=self.var_ridge,
        )
        graph.fit(X if hasattr(X, "labels") else values)
        return graph.net_.values
