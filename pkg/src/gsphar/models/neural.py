"""Gradient-trained members of the zoo: GNNHAR, GSPHAR and dynamic GSPHAR."""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_is_fitted

from .. import autodiff as ad
from ..spectral import BasisCache, magnetic_basis
from ..spillover import DynamicAdjacency, dynamic_adjacencies
from ._base import LONG, GraphMixin, PanelForecaster, har_design, lag_order, ols, pooled_features, window_slices


class TrainingError(ValueError):
    def __init__(self, message, log):
        super().__init__(message)
        self.log = log


def chronological_split(n_samples: int, validation_fraction: float) -> tuple[np.ndarray, np.ndarray]:
    n_val = int(math.floor(n_samples * validation_fraction))
    if validation_fraction > 0 and n_val == 0:
        n_val = 1
    n_train = n_samples - n_val
    if n_train < 1:
        raise ValueError("not enough samples for the requested validation fraction")
    return np.arange(n_train), np.arange(n_train, n_samples)


class _GradientForecaster(GraphMixin, PanelForecaster):
    """Full-batch Adam on the mean absolute error with early stopping on a validation tail."""

    def _param_names(self):
        raise NotImplementedError

    def _init_params(self, rng, data, targets, train):
        raise NotImplementedError

    def _forward(self, params, data):
        raise NotImplementedError

    def loss_and_grad(self, flat, data, targets):
        """L1 loss and its gradient at a flat parameter vector (for gradient checks)."""
        params = self._unflatten(flat)
        tensors = {k: ad.parameter(v) for k, v in params.items()}
        loss = ad.l1_loss(self._forward(tensors, data), targets)
        loss.backward()
        grad = np.concatenate(
            [np.ravel(tensors[k].grad if tensors[k].grad is not None else np.zeros_like(tensors[k].value)) for k in self._param_names()]
        )
        return float(loss.value), grad

    def loss_graph(self, flat, data, targets):
        """The L1 loss at ``flat`` as a constant tape node (no gradients recorded)."""
        params = {k: ad.Tensor(v) for k, v in self._unflatten(flat).items()}
        return ad.l1_loss(self._forward(params, data), targets)

    def loss_at(self, flat, data, targets):
        return float(self.loss_graph(flat, data, targets).value)

    def _flatten(self, params):
        return np.concatenate([np.ravel(params[k]) for k in self._param_names()])

    def _unflatten(self, flat):
        out, pos = {}, 0
        for k in self._param_names():
            shape = self._shapes_[k]
            size = int(np.prod(shape, dtype=int))
            out[k] = np.asarray(flat[pos : pos + size]).reshape(shape)
            pos += size
        return out

    def _initial(self, data, targets):
        train, val = chronological_split(targets.shape[0], self.validation_fraction)
        rng = np.random.default_rng(self.random_state)
        init = self._init_params(rng, data, targets, train)
        self._shapes_ = {k: np.shape(init[k]) for k in self._param_names()}
        return init, train, val

    def initial_state(self, X):
        """Set up the graph and return (flat initial parameters, prepared data, targets)."""
        values, windows, targets = self._training_samples(X)
        self.n_features_in_ = values.shape[1]
        self._setup(X, values)
        data = self._prepare(windows)
        init, _, _ = self._initial(data, targets)
        return self._flatten(init), data, targets

    def _train(self, data, targets, callback=None):
        init, train, val = self._initial(data, targets)
        trainable = [k for k in self._param_names() if k not in self._frozen()]
        tensors = {k: ad.parameter(init[k]) if k in trainable else ad.Tensor(init[k]) for k in self._param_names()}
        opt = ad.Adam([tensors[k] for k in trainable], lr=self.learning_rate)
        train_data = self._subset(data, train)
        val_data = self._subset(data, val) if len(val) else None
        best = {k: t.value.copy() for k, t in tensors.items()}
        best_val, since_best = math.inf, 0
        log = []
        for epoch in range(1, self.max_epochs + 1):
            for t in tensors.values():
                t.grad = None
            loss = ad.l1_loss(self._forward(tensors, train_data), targets[train])
            loss.backward()
            train_loss = float(loss.value)
            if not math.isfinite(train_loss):
                raise TrainingError(f"training loss became non-finite at epoch {epoch}", log)
            opt.step([tensors[k].grad for k in trainable])
            if val_data is not None:
                frozen = {k: ad.Tensor(t.value) for k, t in tensors.items()}
                val_loss = float(ad.l1_loss(self._forward(frozen, val_data), targets[val]).value)
            else:
                val_loss = train_loss
            log.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
            if callback is not None:
                callback(epoch, {k: t.value for k, t in tensors.items()})
            if val_loss < best_val:
                best_val, since_best = val_loss, 0
                best = {k: t.value.copy() for k, t in tensors.items()}
            else:
                since_best += 1
                if val_data is not None and since_best >= self.patience:
                    break
        if val_data is None:
            best = {k: t.value.copy() for k, t in tensors.items()}
        self.params_ = best
        self.training_log_ = log
        self.best_epoch_ = min(log, key=lambda r: r["val_loss"])["epoch"] if val_data is not None else len(log)

    def _frozen(self):
        return ()

    @staticmethod
    def _subset(data, rows):
        return {k: (v[rows] if isinstance(v, np.ndarray) and v.ndim >= 1 and k.startswith("s_") else v) for k, v in data.items()}

    def predict_windows(self, windows):
        check_is_fitted(self, "params_")
        data = self._prepare(windows)
        params = {k: ad.Tensor(v) for k, v in self.params_.items()}
        return self._forward(params, data).value

    def _fit(self, X, values, windows, targets, callback=None):
        self._setup(X, values)
        data = self._prepare(windows)
        self._train(data, targets, callback)

    def fit(self, X, y=None, callback=None):
        """Train on ``X``; ``callback(epoch, params)`` is called after every optimizer step."""
        values, windows, targets = self._training_samples(X)
        self.n_features_in_ = values.shape[1]
        self._fit(X, values, windows, targets, callback)
        return self

    @property
    def n_params_(self):
        check_is_fitted(self, "params_")
        return int(sum(np.size(self.params_[k]) for k in self._param_names() if k not in self._frozen()))


def _glorot(rng, shape):
    fan_in, fan_out = shape[0], shape[-1]
    return rng.normal(0.0, math.sqrt(2.0 / (fan_in + fan_out)), size=shape)


class GNNHARRegressor(_GradientForecaster):
    """HAR with an additive spatial graph network term over the binarized spillover graph.

    Inputs per node are (lag 1, mean of lags 2-5, mean of lags 6-22); the
    graph term is ``gamma . ReLU(P ... ReLU(P H0 W1) ... W_{l+1})`` with
    ``P = D^-1/2 A D^-1/2``. ``use_gnn=False`` pins ``gamma`` at zero.
    """

    def __init__(
        self,
        horizon=1,
        n_layers=1,
        hidden=8,
        adjacency=None,
        threshold=0.0,
        use_gnn=True,
        var_order=LONG,
        var_ridge=1e-4,
        spillover_horizon=None,
        target="point",
        learning_rate=0.01,
        max_epochs=500,
        patience=25,
        validation_fraction=0.125,
        random_state=0,
    ):
        self.horizon = horizon
        self.n_layers = n_layers
        self.hidden = hidden
        self.adjacency = adjacency
        self.threshold = threshold
        self.use_gnn = use_gnn
        self.var_order = var_order
        self.var_ridge = var_ridge
        self.spillover_horizon = spillover_horizon
        self.target = target
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _param_names(self):
        return ["har", "gamma"] + [f"W{k}" for k in range(1, self.n_layers + 2)]

    def _frozen(self):
        return () if self.use_gnn else tuple(n for n in self._param_names() if n != "har")

    def _setup(self, X, values):
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        self.adjacency_ = self._resolve_adjacency(X, values)
        net = self.adjacency_
        binary = ((net + net.T) > self.threshold).astype(float)
        np.fill_diagonal(binary, 0.0)
        self.binary_adjacency_ = binary
        deg = binary.sum(axis=1)
        inv_sqrt = 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0))
        self.propagation_ = inv_sqrt[:, None] * binary * inv_sqrt[None, :]

    def _prepare(self, windows):
        return {"s_h0": pooled_features(windows, "partitioned"), "P": self.propagation_}

    def _init_params(self, rng, data, targets, train):
        h0 = data["s_h0"][train]
        X = har_design(h0.reshape(-1, 3))
        params = {"har": ols(X, targets[train].reshape(-1), 1e-8)}
        dims = [3] + [self.hidden] * (self.n_layers + 1)
        for k in range(1, self.n_layers + 2):
            params[f"W{k}"] = _glorot(rng, (dims[k - 1], dims[k]))
        params["gamma"] = np.zeros(self.hidden) if not self.use_gnn else rng.normal(0.0, 0.01, self.hidden)
        return params

    def _forward(self, p, data):
        h0 = data["s_h0"]
        har = p["har"]
        out = har[0] + har[1] * h0[..., 0] + har[2] * h0[..., 1] + har[3] * h0[..., 2]
        if not self.use_gnn:
            return out
        h = ad.Tensor(h0)
        for k in range(1, self.n_layers + 2):
            h = ad.relu(ad.einsum("snc,ch->snh", ad.einsum("nm,smc->snc", data["P"], h), p[f"W{k}"]))
        return out + ad.einsum("snh,h->sn", h, p["gamma"])


class GSPHARRegressor(_GradientForecaster):
    """Spectral HAR over the magnetic-Laplacian basis of the directed spillover graph.

    Lags are projected by the GFT, pooled with per-basis convex filters
    (softmax of free logits), passed through HAR regressions shared across
    bases on the real and imaginary parts, mapped back by the IGFT and
    merged node-wise by a small ReLU network on (real, imaginary).
    """

    def __init__(
        self,
        horizon=1,
        q=0.25,
        adjacency=None,
        var_order=LONG,
        var_ridge=1e-4,
        spillover_horizon=None,
        windows="overlapping",
        target="point",
        hidden=16,
        learning_rate=0.01,
        max_epochs=500,
        patience=25,
        validation_fraction=0.125,
        random_state=0,
    ):
        self.horizon = horizon
        self.q = q
        self.adjacency = adjacency
        self.var_order = var_order
        self.var_ridge = var_ridge
        self.spillover_horizon = spillover_horizon
        self.windows = windows
        self.target = target
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _param_names(self):
        return ["logits_mid", "logits_long", "w_real", "w_imag", "W1", "b1", "W2", "b2", "W3", "b3"]

    def _setup(self, X, values):
        self.adjacency_ = self._resolve_adjacency(X, values)
        self.basis_ = magnetic_basis(self.adjacency_, self.q)

    def _bases(self, windows):
        U = np.asarray(self.basis_.U, dtype=complex)
        return np.ascontiguousarray(np.broadcast_to(U, (windows.shape[0],) + U.shape))

    def _prepare(self, windows):
        U = self._bases(windows)  # (S, N, N)
        spec = np.einsum("snm,sln->sml", U.conj(), windows)  # GFT of every lag
        lags = lag_order(spec.transpose(0, 2, 1))
        return {
            "s_real": np.ascontiguousarray(lags.real),
            "s_imag": np.ascontiguousarray(lags.imag),
            "s_Ur": np.ascontiguousarray(U.real),
            "s_Ui": np.ascontiguousarray(U.imag),
        }

    def _init_params(self, rng, data, targets, train):
        mid, long = window_slices(self.windows)
        n = data["s_real"].shape[1]
        h = self.hidden
        return {
            "logits_mid": np.zeros((n, mid.stop - mid.start)),
            "logits_long": np.zeros((n, long.stop - long.start)),
            "w_real": np.array([0.0, 1 / 3, 1 / 3, 1 / 3]) + rng.normal(0.0, 0.01, 4),
            "w_imag": np.array([0.0, 1 / 3, 1 / 3, 1 / 3]) + rng.normal(0.0, 0.01, 4),
            "W1": _glorot(rng, (2, h)),
            "b1": np.full(h, 0.01),
            "W2": _glorot(rng, (h, h)),
            "b2": np.full(h, 0.01),
            "W3": _glorot(rng, (h,)),
            "b3": np.zeros(()),
        }

    def filter_weights(self, params=None):
        """Realized convex weights (mid, long), each of shape (N, window length)."""
        params = self.params_ if params is None else params
        return (
            ad.softmax(ad.Tensor(params["logits_mid"])).value,
            ad.softmax(ad.Tensor(params["logits_long"])).value,
        )

    def _forward(self, p, data):
        mid, long = window_slices(self.windows)
        wm = ad.softmax(p["logits_mid"])
        wl = ad.softmax(p["logits_long"])
        parts = []
        for key, w in (("s_real", p["w_real"]), ("s_imag", p["w_imag"])):
            lags = data[key]
            pooled_mid = ad.einsum("snk,nk->sn", lags[..., mid], wm)
            pooled_long = ad.einsum("snk,nk->sn", lags[..., long], wl)
            parts.append(w[0] + w[1] * lags[..., 0] + pooled_mid * w[2] + pooled_long * w[3])
        fr, fi = parts
        Ur, Ui = data["s_Ur"], data["s_Ui"]
        vr = ad.einsum("snm,sm->sn", Ur, fr) - ad.einsum("snm,sm->sn", Ui, fi)
        vi = ad.einsum("snm,sm->sn", Ui, fr) + ad.einsum("snm,sm->sn", Ur, fi)
        z = ad.stack([vr, vi], axis=-1)
        h1 = ad.relu(ad.einsum("snc,ch->snh", z, p["W1"]) + p["b1"])
        h2 = ad.relu(ad.einsum("snh,hk->snk", h1, p["W2"]) + p["b2"])
        return ad.einsum("snh,h->sn", h2, p["W3"]) + p["b3"]


class DGSPHARRegressor(GSPHARRegressor):
    """GSPHAR whose adjacency is re-weighted per input window by absolute lag correlations.

    Every window gets ``A = (rho |C_mid| + (1 - rho) |C_long|) * A_DY`` and its
    own magnetic basis; bases are cached by adjacency.
    """

    def __init__(
        self,
        horizon=1,
        q=0.25,
        rho=0.5,
        correlation="pearson",
        adjacency=None,
        var_order=LONG,
        var_ridge=1e-4,
        spillover_horizon=None,
        windows="overlapping",
        target="point",
        hidden=16,
        learning_rate=0.01,
        max_epochs=500,
        patience=25,
        validation_fraction=0.125,
        random_state=0,
    ):
        super().__init__(
            horizon=horizon,
            q=q,
            adjacency=adjacency,
            var_order=var_order,
            var_ridge=var_ridge,
            spillover_horizon=spillover_horizon,
            windows=windows,
            target=target,
            hidden=hidden,
            learning_rate=learning_rate,
            max_epochs=max_epochs,
            patience=patience,
            validation_fraction=validation_fraction,
            random_state=random_state,
        )
        self.rho = rho
        self.correlation = correlation

    def _setup(self, X, values):
        super()._setup(X, values)
        self.dynamic_ = DynamicAdjacency(self.adjacency_, self.rho)
        self.basis_cache_ = BasisCache(self.q)

    def window_adjacencies(self, windows):
        return dynamic_adjacencies(self.dynamic_, windows, self.correlation)

    def _bases(self, windows):
        if not hasattr(self, "basis_cache_"):
            self.basis_cache_ = BasisCache(self.q)
        if windows.shape[0] == 0:
            n = self.adjacency_.shape[0]
            return np.zeros((0, n, n), dtype=complex)
        return np.asarray(self.basis_cache_.stack(self.window_adjacencies(windows)), dtype=complex)


def export_filter_weights(model) -> list[dict]:
    """Basis-averaged learned pooling weights per lag, next to HAR's equal weights."""
    if not isinstance(model, GSPHARRegressor):
        raise TypeError("filter weights exist only for GSPHAR and d-GSPHAR fits")
    check_is_fitted(model, "params_")
    mid, long = window_slices(model.windows)
    wm, wl = model.filter_weights()
    rows = []
    for name, sl, w in (("mid", mid, wm), ("long", long, wl)):
        avg = w.mean(axis=0)
        ref = 1.0 / (sl.stop - sl.start)
        for k, value in enumerate(avg):
            rows.append({"window": name, "lag": sl.start + k + 1, "learned_weight": float(value), "har_reference_weight": ref})
    return rows

