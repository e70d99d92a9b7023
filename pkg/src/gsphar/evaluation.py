"""Forecast scoring: per-index MAE, one-sided Diebold-Mariano tests and
Model Confidence Sets with a moving-block bootstrap."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class ForecastSet:
    model: str
    horizon: int
    forecasts: np.ndarray
    truth: np.ndarray
    labels: list

    def __post_init__(self):
        f = np.asarray(self.forecasts, dtype=float)
        y = np.asarray(self.truth, dtype=float)
        if f.shape != y.shape or f.ndim != 2:
            raise ValueError(f"forecast shape {f.shape} does not match truth shape {y.shape}")
        if f.shape[1] != len(self.labels):
            raise ValueError("label count does not match the forecast columns")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(y))):
            raise ValueError(f"non-finite forecasts or truth for model {self.model}")
        object.__setattr__(self, "forecasts", f)
        object.__setattr__(self, "truth", y)

    @property
    def errors(self) -> np.ndarray:
        return self.forecasts - self.truth


def mae(fs: ForecastSet) -> np.ndarray:
    if fs.forecasts.shape[0] < 1:
        raise ValueError("need at least one forecast")
    return np.mean(np.abs(fs.errors), axis=0)


@dataclass(frozen=True)
class DmResult:
    statistic: float
    p_value: float
    mean: float
    variance: float
    lag: int


def newey_west_variance(d, lag: int) -> float:
    """Bartlett-weighted long-run variance of ``d`` (autocovariances with denominator T)."""
    d = np.asarray(d, dtype=float)
    T = len(d)
    dev = d - d.mean()
    lrv = float(dev @ dev) / T
    for k in range(1, min(lag, T - 1) + 1):
        gamma = float(dev[k:] @ dev[:-k]) / T
        lrv += 2.0 * (1.0 - k / (lag + 1.0)) * gamma
    return lrv


def dm_test(e0, e1, horizon: int = 1) -> DmResult:
    """One-sided test that model 1 is more accurate than model 0 under absolute loss.

    ``d_t = |e0_t| - |e1_t|``; a large positive statistic favours model 1.
    """
    e0 = np.asarray(e0, dtype=float)
    e1 = np.asarray(e1, dtype=float)
    if e0.shape != e1.shape or e0.ndim != 1:
        raise ValueError("error series must be 1-d and of equal length")
    T = len(e0)
    if T < 10:
        raise ValueError("dm_test needs at least 10 observations")
    d = np.abs(e0) - np.abs(e1)
    d_bar = float(d.mean())
    lag = max(int(horizon) - 1, 0)
    v_d = max(newey_west_variance(d, lag), 0.0) / T
    if v_d > 0:
        stat = d_bar / math.sqrt(v_d)
        p = float(norm.sf(stat))
    elif d_bar == 0:
        stat, p = 0.0, 0.5
    else:
        stat = math.copysign(math.inf, d_bar)
        p = 0.0 if d_bar > 0 else 1.0
    return DmResult(stat, p, d_bar, v_d, lag)


@dataclass(frozen=True)
class McsResult:
    pvalues: np.ndarray
    included: np.ndarray
    elimination_order: list
    level: float
    n_bootstrap: int
    block_length: int


def default_block_length(T: int) -> int:
    # exact integer cube root; the float power undershoots perfect cubes
    k = round(T ** (1.0 / 3.0))
    while k**3 > T:
        k -= 1
    while (k + 1) ** 3 <= T:
        k += 1
    return max(2, k)


def moving_block_indices(T: int, n_bootstrap: int, block_length: int, rng) -> np.ndarray:
    block_length = min(block_length, T)
    n_blocks = -(-T // block_length)
    starts = rng.integers(0, T - block_length + 1, size=(n_bootstrap, n_blocks))
    idx = starts[:, :, None] + np.arange(block_length)[None, None, :]
    return idx.reshape(n_bootstrap, -1)[:, :T]


def mcs_test(losses, level: float = 0.05, n_bootstrap: int = 1000, block_length: int | None = None,
             seed: int = 0, indices: np.ndarray | None = None) -> McsResult:
    """Model Confidence Set with the range statistic T_R.

    ``losses`` is (T, M). Models are eliminated one at a time by
    ``argmax_i max_j t_ij``; each model's MCS p-value is the running maximum of
    the elimination-step p-values, and the last survivor gets 1.
    ``indices`` may supply precomputed (B, T) bootstrap row indices.
    """
    L = np.asarray(losses, dtype=float)
    if L.ndim != 2 or L.shape[1] < 2:
        raise ValueError("need a (T, M) loss matrix with at least 2 models")
    T, M = L.shape
    block_length = default_block_length(T) if block_length is None else int(block_length)
    if indices is None:
        indices = moving_block_indices(T, n_bootstrap, block_length, np.random.default_rng(seed))
    n_bootstrap = indices.shape[0]
    means = L.mean(axis=0)
    boot = L[indices].mean(axis=1)  # (B, M)
    d_bar = means[:, None] - means[None, :]
    d_boot = boot[:, :, None] - boot[:, None, :] - d_bar[None]
    var = np.mean(d_boot**2, axis=0)
    pos = var > 0
    t = np.zeros((M, M))
    np.divide(d_bar, np.sqrt(var), out=t, where=pos)
    t[~pos & (d_bar > 0)] = math.inf
    t[~pos & (d_bar < 0)] = -math.inf
    z_boot = np.zeros_like(d_boot)
    np.divide(np.abs(d_boot), np.sqrt(var)[None], out=z_boot, where=pos[None])

    alive = list(range(M))
    pvalues = np.ones(M)
    order = []
    running = 0.0
    while len(alive) > 1:
        sub = np.ix_(alive, alive)
        t_sub = t[sub]
        stat = float(np.max(np.abs(t_sub)))
        boot_stat = z_boot[:, alive][:, :, alive].reshape(n_bootstrap, -1).max(axis=1)
        p = float(np.mean(boot_stat >= stat)) if math.isfinite(stat) else 0.0
        worst = alive[int(np.argmax(t_sub.max(axis=1)))]
        running = max(running, p)
        pvalues[worst] = running
        order.append(worst)
        alive.remove(worst)
    order.append(alive[0])
    pvalues[alive[0]] = 1.0
    return McsResult(pvalues, pvalues >= level, order, level, n_bootstrap, block_length)


@dataclass
class HorizonReport:
    horizon: int
    models: list
    labels: list
    mae: np.ndarray  # (N, M)
    mae_min: np.ndarray  # (N, M) bool, one True per row
    reference: str | None = None
    dm: dict = field(default_factory=dict)  # competitor -> (statistics (N,), p-values (N,))
    mcs_pvalues: np.ndarray | None = None  # (N, M)
    mcs_included: np.ndarray | None = None

    @property
    def comparisons_available(self) -> bool:
        return len(self.models) > 1


@dataclass
class EvalReport:
    horizons: dict  # H -> HorizonReport


def row_minimum_flags(table: np.ndarray) -> np.ndarray:
    flags = np.zeros(table.shape, dtype=bool)
    flags[np.arange(table.shape[0]), np.argmin(table, axis=1)] = True
    return flags


def build_report(sets, reference: str | None = None, level: float = 0.05, n_bootstrap: int = 1000,
                 block_length: int | None = None, seed: int = 0) -> EvalReport:
    """Assemble MAE, DM (each competitor vs ``reference``) and MCS tables per horizon.

    ``reference`` defaults to the last model listed for a horizon.
    """
    by_h: dict[int, list[ForecastSet]] = {}
    for fs in sets:
        by_h.setdefault(int(fs.horizon), []).append(fs)
    reports = {}
    for H in sorted(by_h):
        group = by_h[H]
        labels = list(group[0].labels)
        truth = group[0].truth
        for fs in group[1:]:
            if list(fs.labels) != labels:
                raise ValueError(f"label mismatch for model {fs.model} at H={H}")
            if fs.truth.shape != truth.shape or not np.array_equal(fs.truth, truth):
                raise ValueError(f"truth mismatch for model {fs.model} at H={H}")
        models = [fs.model for fs in group]
        if len(set(models)) != len(models):
            raise ValueError(f"duplicate model names at H={H}")
        table = np.column_stack([mae(fs) for fs in group])
        rep = HorizonReport(H, models, labels, table, row_minimum_flags(table))
        if len(group) > 1:
            ref = reference if reference in models else models[-1]
            rep.reference = ref
            ref_err = group[models.index(ref)].errors
            for fs in group:
                if fs.model == ref:
                    continue
                res = [dm_test(fs.errors[:, i], ref_err[:, i], H) for i in range(len(labels))]
                rep.dm[fs.model] = (np.array([r.statistic for r in res]), np.array([r.p_value for r in res]))
            T = truth.shape[0]
            block = default_block_length(T) if block_length is None else block_length
            idx = moving_block_indices(T, n_bootstrap, block, np.random.default_rng(seed))
            pv = np.zeros((len(labels), len(models)))
            for i in range(len(labels)):
                losses = np.column_stack([np.abs(fs.errors[:, i]) for fs in group])
                pv[i] = mcs_test(losses, level, block_length=block, indices=idx).pvalues
            rep.mcs_pvalues = pv
            rep.mcs_included = pv >= level
        reports[H] = rep
    return EvalReport(reports)
