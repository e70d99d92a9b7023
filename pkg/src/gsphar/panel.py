"""Realized-volatility panels: construction, alignment, summary statistics,
the ADF unit-root check and a synthetic spillover-panel generator."""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

# Constant-only Dickey-Fuller asymptotic critical values (1%, 5%, 10%).
ADF_CRITICAL = {0.01: -3.43, 0.05: -2.86, 0.10: -2.57}


def _check_labels_days(labels, days):
    if len(set(labels)) != len(labels):
        raise ValueError("labels must be unique")
    for a, b in zip(days[:-1], days[1:]):
        if not a < b:
            raise ValueError(f"days must be strictly increasing ({a!r} >= {b!r})")


@dataclass(frozen=True)
class ReturnPanel:
    """Intraday log-returns, ``returns[t][i]`` is the sequence for day ``t`` and index ``i``.

    An empty sequence marks a day on which the index traded no intraday
    returns; its realized variance is zero.
    """

    labels: list
    days: list
    returns: list

    def __post_init__(self):
        _check_labels_days(self.labels, self.days)
        if len(self.returns) != len(self.days):
            raise ValueError("returns must have one entry per day")
        for t, row in enumerate(self.returns):
            if len(row) != len(self.labels):
                raise ValueError(f"day {self.days[t]} has {len(row)} cells, expected {len(self.labels)}")


@dataclass(frozen=True)
class VolPanel:
    """Aligned T x N panel of scaled square-root realized volatility."""

    labels: list
    days: list
    values: np.ndarray
    scale: float = 100.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        if values.shape != (len(self.days), len(self.labels)):
            raise ValueError(
                f"values shape {values.shape} does not match {len(self.days)} days x {len(self.labels)} labels"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if np.any(values < 0):
            raise ValueError("values must be non-negative")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        _check_labels_days(list(self.labels), list(self.days))
        object.__setattr__(self, "labels", list(self.labels))
        object.__setattr__(self, "days", list(self.days))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.days)

    def slice_rows(self, start=None, stop=None) -> "VolPanel":
        rows = slice(start, stop)
        return VolPanel(self.labels, self.days[rows], self.values[rows], self.scale)


def compute_rv(returns: ReturnPanel, scale: float = 100.0) -> VolPanel:
    """Daily ``scale * sqrt(sum of squared intraday returns)`` per index."""
    values = np.zeros((len(returns.days), len(returns.labels)))
    for t, row in enumerate(returns.returns):
        for i, cell in enumerate(row):
            r = np.asarray(cell, dtype=float)
            if not np.all(np.isfinite(r)):
                raise ValueError(f"non-finite return on {returns.days[t]} for {returns.labels[i]}")
            values[t, i] = scale * math.sqrt(float(np.dot(r, r)))
    return VolPanel(returns.labels, returns.days, values, scale)


def align_panels(raw: Mapping[str, Mapping], scale: float = 100.0) -> VolPanel:
    """Align per-label dated series on the dates common to all of them.

    ``raw`` maps label -> {date: value}; column order follows the mapping's order.
    """
    labels = list(raw)
    if not labels:
        raise ValueError("no series to align")
    common = set(raw[labels[0]])
    for label in labels[1:]:
        common &= set(raw[label])
    if not common:
        raise ValueError("series share no common dates")
    days = sorted(common)
    values = np.array([[raw[label][d] for label in labels] for d in days], dtype=float)
    return VolPanel(labels, days, values, scale)


@dataclass(frozen=True)
class IndexStats:
    label: str
    mean: float
    std: float
    skewness: float
    kurtosis: float
    adf_stat: float
    adf_reject: bool
    adf_band: str


@dataclass(frozen=True)
class PanelStats:
    rows: list = field(default_factory=list)

    def __getitem__(self, label) -> IndexStats:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)


def moments(x) -> tuple[float, float, float, float]:
    """Mean, sample std (ddof=1), skewness and raw (non-excess) kurtosis.

    Zero-variance input reports skewness and kurtosis as 0.
    """
    x = np.asarray(x, dtype=float)
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev**2))
    std = float(np.sqrt(np.sum(dev**2) / (len(x) - 1))) if len(x) > 1 else 0.0
    if m2 <= 1e-14 * max(mean * mean, 1e-300):
        return mean, 0.0, 0.0, 0.0
    skew = float(np.mean(dev**3) / m2**1.5)
    kurt = float(np.mean(dev**4) / m2**2)
    return mean, std, skew, kurt


def adf_lag(n: int) -> int:
    """Schwert's rule, floor(12 * (n/100)^(1/4))."""
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def adf_test(series, lags: int | None = None) -> tuple[float, bool]:
    """Augmented Dickey-Fuller t-statistic with a constant, and rejection at 5%.

    Regresses dy_t on [1, y_{t-1}, dy_{t-1}, ..., dy_{t-k}].
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or len(y) < 30:
        raise ValueError("adf_test needs a 1-d series of length >= 30")
    k = adf_lag(len(y)) if lags is None else int(lags)
    dy = np.diff(y)
    n = len(dy) - k
    if n <= k + 2:
        raise ValueError("series too short for the chosen lag order")
    cols = [np.ones(n), y[k:-1]]
    cols += [dy[k - j : len(dy) - j] for j in range(1, k + 1)]
    X = np.column_stack(cols)
    target = dy[k:]
    # Column scaling keeps the rank test meaningful for any series magnitude.
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0) or np.linalg.matrix_rank(X / norms, tol=1e-10 * math.sqrt(n)) < X.shape[1]:
        raise ValueError("singular ADF regression (degenerate series)")
    beta, *_ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ beta
    dof = n - X.shape[1]
    sigma2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = math.sqrt(sigma2 * xtx_inv[1, 1])
    if se == 0:
        raise ValueError("singular ADF regression (zero residual variance)")
    stat = float(beta[1] / se)
    return stat, stat < ADF_CRITICAL[0.05]


def adf_band(stat: float) -> str:
    for level in (0.01, 0.05, 0.10):
        if stat < ADF_CRITICAL[level]:
            return f"<{level:.2f}"
    return ">0.10"


def describe(panel: VolPanel) -> PanelStats:
    values = np.asarray(panel.values)
    if values.shape[0] < 30:
        raise ValueError("describe needs at least 30 observations")
    rows = []
    for i, label in enumerate(panel.labels):
        mean, std, skew, kurt = moments(values[:, i])
        try:
            stat, reject = adf_test(values[:, i])
            band = adf_band(stat)
        except ValueError:
            stat, reject, band = float("nan"), False, "n/a"
        rows.append(IndexStats(label, mean, std, skew, kurt, stat, reject, band))
    return PanelStats(rows)


@dataclass(frozen=True)
class SyntheticSpec:
    """VAR(1)-in-logs generator settings.

    ``coupling[i, j]`` is the loading of series ``i`` on the previous value of
    series ``j`` (a spillover from ``j`` into ``i``).
    """

    n: int
    t: int
    coupling: np.ndarray
    noise_scale: float = 0.3
    seed: int = 0
    level: float = 0.0
    burn_in: int = 200

    def __post_init__(self):
        c = np.asarray(self.coupling, dtype=float)
        if c.shape != (self.n, self.n):
            raise ValueError(f"coupling must be {self.n}x{self.n}")
        if not self.noise_scale > 0:
            raise ValueError("noise_scale must be positive")
        if self.t < 1:
            raise ValueError("t must be positive")
        object.__setattr__(self, "coupling", c)

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.coupling)))) if self.n else 0.0


def generate_synthetic(spec: SyntheticSpec, labels: Sequence[str] | None = None) -> VolPanel:
    """Simulate ``exp(x_t)`` with ``x_t = level + C (x_{t-1} - level) + noise``."""
    if spec.spectral_radius >= 1:
        raise ValueError(f"explosive coupling (spectral radius {spec.spectral_radius:.4f} >= 1)")
    rng = np.random.default_rng(spec.seed)
    total = spec.t + spec.burn_in
    shocks = rng.standard_normal((total, spec.n)) * spec.noise_scale
    x = np.zeros((total, spec.n))
    prev = np.zeros(spec.n)
    for k in range(total):
        prev = spec.coupling @ prev + shocks[k]
        x[k] = prev
    values = np.maximum(np.exp(spec.level + x[spec.burn_in :]), 0.0)
    labels = list(labels) if labels is not None else [f"S{i + 1}" for i in range(spec.n)]
    start = datetime.date(2000, 1, 1)
    days = [(start + datetime.timedelta(days=k)).isoformat() for k in range(spec.t)]
    return VolPanel(labels, days, values, scale=1.0)


def planted_coupling(n: int, strength: float = 0.4, own: float = 0.5) -> np.ndarray:
    """A one-directional chain 1 -> 2 -> ... -> n on top of own persistence."""
    c = np.eye(n) * own
    for i in range(1, n):
        c[i, i - 1] = strength
    return c
