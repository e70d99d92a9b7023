"""VAR estimation, generalized forecast-error variance decomposition and the
net pairwise spillover graph, plus the correlation-modulated dynamic adjacency."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_panel

RAW = "raw"
NORMALIZED = "normalized"
NET_PAIRWISE = "net_pairwise"
KINDS = (RAW, NORMALIZED, NET_PAIRWISE)

MID_WINDOW = 5
LONG_WINDOW = 22


@dataclass(frozen=True)
class VarFit:
    p: int
    coefficients: np.ndarray  # (p, N, N), coefficients[j] multiplies v_{t-j-1}
    intercept: np.ndarray
    sigma: np.ndarray
    spectral_radius: float

    @property
    def stable(self) -> bool:
        return self.spectral_radius < 1.0

    @property
    def n(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class SpilloverMatrix:
    values: np.ndarray
    horizon: int
    kind: str
    labels: list | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spillover kind {self.kind!r}")
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("spillover matrix must be square")
        object.__setattr__(self, "values", v)


def _companion_radius(coefs: np.ndarray) -> float:
    p, n, _ = coefs.shape
    if n == 0:
        return 0.0
    comp = np.zeros((n * p, n * p))
    comp[:n, :] = np.concatenate(list(coefs), axis=1)
    comp[n:, :-n] = np.eye(n * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def lagged_design(values: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``[v_{t-1}, ..., v_{t-p}]`` and targets ``v_t`` for t = p..T-1."""
    T = values.shape[0]
    Z = np.concatenate([values[p - j : T - j] for j in range(1, p + 1)], axis=1)
    return Z, values[p:]


def fit_var(panel, p: int = 22, ridge: float = 1e-4) -> VarFit:
    """Equation-by-equation least squares for a VAR(p) with an unpenalized intercept.

    ``ridge`` is relative: the penalty added to the Gram matrix is
    ``ridge * trace(Z'Z) / k`` for ``k`` lagged regressors (after centering).
    """
    values = check_panel(panel)
    T, N = values.shape
    if p < 1:
        raise ValueError("VAR order p must be >= 1")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    if T <= N * p + 1:
        raise ValueError(f"need T > N*p + 1 = {N * p + 1} observations, got {T}")
    Z, Y = lagged_design(values, p)
    z_mean, y_mean = Z.mean(axis=0), Y.mean(axis=0)
    Zc, Yc = Z - z_mean, Y - y_mean
    gram = Zc.T @ Zc
    k = gram.shape[0]
    lam = ridge * np.trace(gram) / k
    gram_pen = gram + lam * np.eye(k)
    if ridge == 0 and np.linalg.matrix_rank(gram) < k:
        raise ValueError("singular VAR design; refit with ridge > 0")
    try:
        beta = np.linalg.solve(gram_pen, Zc.T @ Yc)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular VAR design; refit with ridge > 0") from exc
    intercept = y_mean - z_mean @ beta
    resid = Y - intercept - Z @ beta
    sigma = resid.T @ resid / (T - p)
    sigma = 0.5 * (sigma + sigma.T)
    coefs = beta.T.reshape(N, p, N).transpose(1, 0, 2).copy()
    radius = _companion_radius(coefs)
    if radius >= 1:
        warnings.warn(f"VAR fit is not stationary (companion spectral radius {radius:.4f})", RuntimeWarning)
    return VarFit(p, coefs, intercept, sigma, radius)


def ma_coefficients(fit: VarFit, H: int) -> np.ndarray:
    """MA matrices B_0..B_{H-1} with B_0 = I and B_h = sum_j Phi_j B_{h-j}."""
    n, p = fit.n, fit.p
    B = np.zeros((H, n, n))
    if H == 0:
        return B
    B[0] = np.eye(n)
    for h in range(1, H):
        for j in range(1, min(h, p) + 1):
            B[h] += fit.coefficients[j - 1] @ B[h - j]
    return B


def gfevd(fit: VarFit, H: int) -> SpilloverMatrix:
    """Generalized FEVD shares theta_ij: part of i's H-step error variance due to shocks in j."""
    if H < 1:
        raise ValueError("horizon H must be >= 1")
    sigma = fit.sigma
    diag = np.diag(sigma)
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        raise ValueError(f"zero residual variance for index {int(bad[0])}")
    B = ma_coefficients(fit, H)
    BS = B @ sigma  # (H, N, N): e_i' B_h Sigma e_j
    num = np.sum(BS**2, axis=0) / diag[None, :]
    den = np.einsum("hij,hij->i", BS, B)  # e_i' B_h Sigma B_h' e_i
    return SpilloverMatrix(num / den[:, None], H, RAW)


def normalize_rows(theta: SpilloverMatrix) -> SpilloverMatrix:
    rows = theta.values.sum(axis=1)
    bad = np.flatnonzero(~(rows > 0))
    if bad.size:
        raise ValueError(f"row {int(bad[0])} of the spillover matrix sums to zero")
    return SpilloverMatrix(theta.values / rows[:, None], theta.horizon, NORMALIZED, theta.labels)


def net_pairwise(theta_norm: SpilloverMatrix) -> SpilloverMatrix:
    """max(theta_ij - theta_ji, 0) with a zero diagonal."""
    if theta_norm.kind != NORMALIZED:
        raise ValueError("net_pairwise expects a normalized spillover matrix")
    t = theta_norm.values
    diff = t - t.T
    net = np.where(diff > 0, diff, 0.0)
    np.fill_diagonal(net, 0.0)
    return SpilloverMatrix(net, theta_norm.horizon, NET_PAIRWISE, theta_norm.labels)


def spillover_graph(panel, p: int = 22, H: int = 1, ridge: float = 1e-4) -> SpilloverMatrix:
    """Net pairwise spillover matrix of a panel (VAR -> GFEVD -> normalize -> net)."""
    fit = fit_var(panel, p=p, ridge=ridge)
    net = net_pairwise(normalize_rows(gfevd(fit, H)))
    labels = list(panel.labels) if hasattr(panel, "labels") else None
    return SpilloverMatrix(net.values, H, NET_PAIRWISE, labels)


def pearson_window(window) -> np.ndarray:
    """Absolute Pearson correlations of the columns of an n x N slice.

    A zero-variance column gets zero off-diagonal entries and a unit diagonal.
    """
    x = np.asarray(window, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("pearson_window needs at least 2 rows")
    return _abs_corr(x[None])[0]


def _abs_corr(x: np.ndarray) -> np.ndarray:
    # x: (S, n, N) -> (S, N, N)
    dev = x - x.mean(axis=1, keepdims=True)
    cov = np.einsum("sti,stj->sij", dev, dev)
    var = np.einsum("sii->si", cov)
    scale = np.sqrt(var)
    ok = var > 1e-14 * np.maximum(np.einsum("sti,sti->si", x, x), 1e-300)
    denom = scale[:, :, None] * scale[:, None, :]
    mask = ok[:, :, None] & ok[:, None, :]
    corr = np.zeros_like(cov)
    np.divide(np.abs(cov), denom, out=corr, where=mask)
    np.minimum(corr, 1.0, out=corr)
    idx = np.arange(x.shape[2])
    corr[:, idx, idx] = 1.0
    return corr


@dataclass(frozen=True)
class DynamicAdjacency:
    base: np.ndarray
    rho: float = 0.5
    mid_window: int = MID_WINDOW
    long_window: int = LONG_WINDOW

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        base = self.base.values if isinstance(self.base, SpilloverMatrix) else self.base
        object.__setattr__(self, "base", np.asarray(base, dtype=float))


def dynamic_adjacency(dyn: DynamicAdjacency, lagged) -> np.ndarray:
    """Correlation-modulated adjacency for one 22 x N lag window (rows t-22..t-1)."""
    lagged = np.asarray(lagged, dtype=float)
    if lagged.ndim != 2 or lagged.shape[0] != dyn.long_window:
        raise ValueError(f"lagged input must have exactly {dyn.long_window} rows")
    return dynamic_adjacencies(dyn, lagged[None])[0]


def dynamic_adjacencies(dyn: DynamicAdjacency, windows: np.ndarray, correlation: str = "pearson") -> np.ndarray:
    """Vectorized :func:`dynamic_adjacency` over (S, 22, N) windows.

    ``correlation="ones"`` replaces both correlation matrices by all-ones
    matrices, which reduces the result to the base adjacency.
    """
    windows = np.asarray(windows, dtype=float)
    S, L, N = windows.shape
    if L != dyn.long_window:
        raise ValueError(f"windows must have exactly {dyn.long_window} rows")
    if correlation == "pearson":
        mid = _abs_corr(windows[:, -dyn.mid_window :])
        long = _abs_corr(windows)
    elif correlation == "ones":
        mid = long = np.ones((S, N, N))
    else:
        raise ValueError(f"unknown correlation mode {correlation!r}")
    return modulate(dyn.base, mid, long, dyn.rho)


def modulate(base, mid_corr, long_corr, rho: float) -> np.ndarray:
    """``(rho |C_mid| + (1 - rho) |C_long|) * base``, broadcasting over leading axes."""
    return (rho * np.abs(mid_corr) + (1.0 - rho) * np.abs(long_corr)) * np.asarray(base)


class SpilloverGraph(TransformerMixin, BaseEstimator):
    """Estimate the net pairwise spillover graph of a panel.

    ``fit`` stores the VAR fit and the raw, normalized and net matrices;
    ``transform`` returns the net pairwise adjacency.
    """

    def __init__(self, var_order=22, horizon=1, ridge=1e-4):
        self.var_order = var_order
        self.horizon = horizon
        self.ridge = ridge

    def fit(self, X, y=None):
        self.var_ = fit_var(X, p=self.var_order, ridge=self.ridge)
        labels = list(X.labels) if hasattr(X, "labels") else None
        raw = gfevd(self.var_, self.horizon)
        self.theta_ = SpilloverMatrix(raw.values, raw.horizon, RAW, labels)
        self.theta_normalized_ = normalize_rows(self.theta_)
        self.net_ = net_pairwise(self.theta_normalized_)
        self.n_features_in_ = self.net_.values.shape[0]
        return self

    def transform(self, X=None):
        check_is_fitted(self, "net_")
        return self.net_.values.copy()
