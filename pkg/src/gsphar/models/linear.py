"""Closed-form members of the zoo: HAR, VHAR, HAR-KS and v-GSPHAR."""

from __future__ import annotations

import numpy as np

from ..spectral import magnetic_basis
from ._base import LONG, GraphMixin, PanelForecaster, har_design, ols, pooled_features

HAR_RIDGE = 1e-8


class HARRegressor(PanelForecaster):
    """Univariate HAR fitted separately to every column.

    ``coef_[i]`` holds (intercept, daily, weekly, monthly) for column ``i``.
    """

    def __init__(self, horizon=1, windows="overlapping", target="point", ridge=HAR_RIDGE):
        self.horizon = horizon
        self.windows = windows
        self.target = target
        self.ridge = ridge

    def _fit(self, X, values, windows, targets):
        feats = pooled_features(windows, self.windows)
        self.coef_ = np.stack(
            [ols(har_design(feats[:, i]), targets[:, i], self.ridge) for i in range(values.shape[1])]
        )

    def predict_windows(self, windows):
        feats = pooled_features(windows, self.windows)
        return self.coef_[:, 0] + np.einsum("snk,nk->sn", feats, self.coef_[:, 1:])

    @property
    def n_params_(self):
        return self.coef_.size


def fit_har(panel, index: int, horizon: int = 1, **kwargs) -> HARRegressor:
    """HAR on a single column of ``panel``."""
    values = np.asarray(getattr(panel, "values", panel), dtype=float)
    return HARRegressor(horizon=horizon, **kwargs).fit(values[:, [index]])


class VHARRegressor(PanelForecaster):
    """Vector HAR: every target on all markets' daily, weekly and monthly terms.

    ``coef_`` has shape (N, 3N + 1): intercept, N daily, N weekly, N monthly.
    """

    def __init__(self, horizon=1, target="point", ridge=HAR_RIDGE):
        self.horizon = horizon
        self.target = target
        self.ridge = ridge

    @staticmethod
    def _design(windows):
        feats = pooled_features(windows, "overlapping")  # (S, N, 3)
        S = feats.shape[0]
        return np.column_stack([np.ones(S), feats[:, :, 0], feats[:, :, 1], feats[:, :, 2]])

    def _fit(self, X, values, windows, targets):
        self.coef_ = ols(self._design(windows), targets, self.ridge).T

    def predict_windows(self, windows):
        return self._design(windows) @ self.coef_.T

    @property
    def n_params_(self):
        return self.coef_.size


class HARKSRegressor(PanelForecaster):
    """HAR kitchen sink: all markets' daily terms plus own weekly and monthly terms.

    ``coef_`` has shape (N, N + 3): intercept, N daily, own weekly, own monthly.
    """

    def __init__(self, horizon=1, target="point", ridge=HAR_RIDGE):
        self.horizon = horizon
        self.target = target
        self.ridge = ridge

    @staticmethod
    def _design(feats, i):
        S = feats.shape[0]
        return np.column_stack([np.ones(S), feats[:, :, 0], feats[:, i, 1], feats[:, i, 2]])

    def _fit(self, X, values, windows, targets):
        feats = pooled_features(windows, "overlapping")
        self.coef_ = np.stack(
            [ols(self._design(feats, i), targets[:, i], self.ridge) for i in range(values.shape[1])]
        )

    def predict_windows(self, windows):
        feats = pooled_features(windows, "overlapping")
        return np.column_stack([self._design(feats, i) @ self.coef_[i] for i in range(feats.shape[1])])

    @property
    def n_params_(self):
        return self.coef_.size


class VGSPHARRegressor(GraphMixin, PanelForecaster):
    """Per-basis univariate HAR in the graph Fourier domain of the undirected spillover graph.

    The panel is projected on the eigenbasis of the q = 0 magnetic Laplacian,
    one HAR is fitted per basis vector, and forecasts are mapped back.
    ``coef_[m]`` holds (intercept, daily, weekly, monthly) for basis ``m``.
    """

    def __init__(
        self,
        horizon=1,
        adjacency=None,
        var_order=LONG,
        var_ridge=1e-4,
        spillover_horizon=None,
        target="point",
        ridge=HAR_RIDGE,
    ):
        self.horizon = horizon
        self.adjacency = adjacency
        self.var_order = var_order
        self.var_ridge = var_ridge
        self.spillover_horizon = spillover_horizon
        self.target = target
        self.ridge = ridge

    def _fit(self, X, values, windows, targets):
        self.adjacency_ = self._resolve_adjacency(X, values)
        self.basis_ = magnetic_basis(self.adjacency_, 0.0)
        U = self.basis_.U.real
        feats = pooled_features(windows @ U, "overlapping")
        spec_targets = targets @ U
        self.coef_ = np.stack(
            [ols(har_design(feats[:, m]), spec_targets[:, m], self.ridge) for m in range(U.shape[1])]
        )

    def predict_spectral(self, windows):
        U = self.basis_.U.real
        feats = pooled_features(windows @ U, "overlapping")
        return self.coef_[:, 0] + np.einsum("snk,nk->sn", feats, self.coef_[:, 1:])

    def predict_windows(self, windows):
        return self.predict_spectral(windows) @ self.basis_.U.real.T

    @property
    def n_params_(self):
        return self.coef_.size
