import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gsphar.evaluation import (
    ForecastSet,
    build_report,
    default_block_length,
    dm_test,
    mae,
    mcs_test,
    moving_block_indices,
    newey_west_variance,
    row_minimum_flags,
)

LABELS = ["a", "b", "c"]


def fset(model, forecasts, truth, H=1):
    return ForecastSet(model, H, forecasts, truth, LABELS)


def test_mae_perfect_and_offset(rng):
    y = rng.gamma(2.0, size=(40, 3))
    np.testing.assert_array_equal(mae(fset("m", y, y)), 0.0)
    np.testing.assert_allclose(mae(fset("m", y + 0.5, y)), 0.5, atol=1e-15)


def test_mae_hand_value():
    y = np.zeros((2, 3))
    f = np.array([[1.0, -2.0, 0.0], [3.0, 2.0, 0.5]])
    np.testing.assert_allclose(mae(fset("m", f, y)), [2.0, 2.0, 0.25])


def test_forecast_set_validation():
    with pytest.raises(ValueError, match="shape"):
        fset("m", np.zeros((3, 3)), np.zeros((4, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        fset("m", np.full((3, 3), np.nan), np.zeros((3, 3)))
    with pytest.raises(ValueError, match="label"):
        ForecastSet("m", 1, np.zeros((3, 2)), np.zeros((3, 2)), LABELS)


def test_dm_hand_example():
    e0 = np.array([3.0, -1, 3, 1] * 3)
    e1 = np.array([1.0, 1, -1, 1] * 3)
    r = dm_test(e0, e1, 1)
    assert r.mean == 1.0 and r.lag == 0
    assert abs(r.variance - 1.0 / 12) < 1e-15
    assert abs(r.statistic - math.sqrt(12)) < 1e-12
    # the four-point example from the derivation, before the length guard
    d = np.array([2.0, 0, 2, 0])
    v = newey_west_variance(d, 0) / 4
    assert v == 0.25 and d.mean() / math.sqrt(v) == 2.0


def test_newey_west_bartlett_weights():
    d = np.array([1.0, -1, 2, 0, -2])
    dev = d - d.mean()
    g = [dev[k:] @ dev[: len(d) - k] / 5 for k in range(3)]
    assert abs(newey_west_variance(d, 2) - (g[0] + 2 * (2 / 3) * g[1] + 2 * (1 / 3) * g[2])) < 1e-15


def test_dm_degenerate_conventions(rng):
    e = rng.normal(size=30)
    r = dm_test(e, e, 5)
    assert (r.statistic, r.p_value) == (0.0, 0.5)
    r = dm_test(e * 0 + 2, e * 0 + 1, 1)
    assert r.statistic == math.inf and r.p_value == 0.0
    r = dm_test(e * 0 + 1, e * 0 + 2, 1)
    assert r.statistic == -math.inf and r.p_value == 1.0


def test_dm_rejects_bad_input():
    with pytest.raises(ValueError):
        dm_test(np.ones(12), np.ones(11))
    with pytest.raises(ValueError, match="10"):
        dm_test(np.ones(9), np.ones(9))


series = arrays(np.float64, 40, elements=st.floats(-10, 10, allow_nan=False, width=64))


@settings(max_examples=60, deadline=None)
@given(series, series, st.integers(1, 6))
def test_dm_antisymmetry(e0, e1, H):
    a, b = dm_test(e0, e1, H), dm_test(e1, e0, H)
    assume(math.isfinite(a.statistic))
    assert abs(a.statistic + b.statistic) <= 1e-9 * max(1.0, abs(a.statistic))
    assert abs(a.p_value + b.p_value - 1) <= 1e-12
    assert 0 <= a.p_value <= 1
    assert a.statistic == 0 or np.sign(a.statistic) == np.sign(a.mean)


@settings(max_examples=60, deadline=None)
@given(series, series, st.floats(1e-3, 1e3), st.integers(1, 6))
def test_dm_scale_invariance(e0, e1, c, H):
    a, b = dm_test(e0, e1, H), dm_test(c * e0, c * e1, H)
    assume(a.variance > 1e-12)
    assert abs(a.statistic - b.statistic) <= 1e-8 * max(1.0, abs(a.statistic))


def test_block_length_and_indices(rng):
    assert default_block_length(5) == 2
    assert default_block_length(500) == 7
    assert default_block_length(1000) == 10
    idx = moving_block_indices(50, 20, 7, rng)
    assert idx.shape == (20, 50)
    assert idx.min() >= 0 and idx.max() < 50
    # consecutive within each block
    blocks = idx[:, :49].reshape(20, 7, 7)
    assert np.all(np.diff(blocks, axis=2) == 1)


def test_mcs_identical_models_all_survive(rng):
    loss = np.abs(rng.normal(size=200))
    r = mcs_test(np.column_stack([loss, loss, loss]), n_bootstrap=200)
    np.testing.assert_array_equal(r.pvalues, 1.0)
    assert r.included.all()


def test_mcs_result_fields(rng):
    r = mcs_test(np.abs(rng.normal(size=(125, 3))), n_bootstrap=50, seed=2)
    assert r.n_bootstrap == 50 and r.block_length == 5 and r.level == 0.05
    assert sorted(r.elimination_order) == [0, 1, 2]
    assert np.all((0 <= r.pvalues) & (r.pvalues <= 1))
    assert r.pvalues[r.elimination_order[-1]] == 1.0
    # p-values never decrease along the elimination order
    assert np.all(np.diff(r.pvalues[r.elimination_order]) >= 0)


def test_mcs_needs_two_models():
    with pytest.raises(ValueError):
        mcs_test(np.ones((20, 1)))


@pytest.mark.parametrize("seed", range(25))
def test_mcs_best_model_survives(seed):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(2, 6))
    L = np.abs(rng.normal(size=(150, M))) + rng.uniform(0, 0.3, M)
    r = mcs_test(L, n_bootstrap=200, seed=seed)
    best = int(np.argmin(L.mean(axis=0)))
    assert r.pvalues[best] == 1.0 and r.included[best]


@pytest.mark.parametrize("seed", range(10))
def test_mcs_dominated_addition_keeps_survivors(seed):
    rng = np.random.default_rng(seed)
    L = np.abs(rng.normal(size=(200, 3))) + [0.0, 0.05, 0.1]
    idx = moving_block_indices(200, 300, default_block_length(200), np.random.default_rng(99))
    base = mcs_test(L, indices=idx)
    bad = L[:, [0]] + 10 + rng.uniform(0, 0.1, (200, 1))
    grown = mcs_test(np.column_stack([L, bad]), indices=idx)
    assert not grown.included[3]
    assert np.all(grown.included[:3] >= base.included)
    np.testing.assert_allclose(grown.pvalues[:3], base.pvalues, atol=1e-15)


def test_mcs_deterministic_for_seed(rng):
    L = np.abs(rng.normal(size=(100, 4)))
    a, b = mcs_test(L, seed=5, n_bootstrap=100), mcs_test(L, seed=5, n_bootstrap=100)
    np.testing.assert_array_equal(a.pvalues, b.pvalues)


def test_row_minimum_flags_ties_go_first():
    t = np.array([[1.0, 1.0, 2.0], [3.0, 0.5, 0.5]])
    np.testing.assert_array_equal(row_minimum_flags(t), [[True, False, False], [False, True, False]])


def test_report_single_model(rng):
    y = rng.gamma(2.0, size=(30, 3))
    rep = build_report([fset("HAR", y + 0.1, y)]).horizons[1]
    assert rep.models == ["HAR"] and rep.mae.shape == (3, 1)
    assert not rep.comparisons_available
    assert rep.dm == {} and rep.mcs_pvalues is None and rep.reference is None


def test_report_identical_forecasts(rng):
    y = rng.gamma(2.0, size=(30, 3))
    f = y + rng.normal(size=y.shape)
    rep = build_report([fset("A", f, y), fset("B", f.copy(), y)], n_bootstrap=100).horizons[1]
    assert rep.reference == "B"
    stats, pvals = rep.dm["A"]
    np.testing.assert_array_equal(stats, 0.0)
    np.testing.assert_array_equal(pvals, 0.5)
    np.testing.assert_array_equal(rep.mcs_pvalues, 1.0)


def test_report_layout(rng):
    y = rng.gamma(2.0, size=(60, 3))
    sets = [fset(m, y + rng.normal(scale=s, size=y.shape), y, H) for H in (1, 5) for m, s in
            (("HAR", 0.5), ("GSPHAR", 0.3), ("VHAR", 0.4))]
    rep = build_report(sets, reference="GSPHAR", n_bootstrap=100)
    assert sorted(rep.horizons) == [1, 5]
    for h in rep.horizons.values():
        assert h.reference == "GSPHAR" and set(h.dm) == {"HAR", "VHAR"}
        assert h.mae_min.sum() == 3
        assert np.all(h.mae_min.sum(axis=1) == 1)
        assert h.mcs_pvalues.shape == (3, 3)
        np.testing.assert_array_equal(h.mcs_included, h.mcs_pvalues >= 0.05)


def test_report_rejects_mismatches(rng):
    y = rng.gamma(2.0, size=(20, 3))
    other = ForecastSet("B", 1, y, y, ["a", "b", "x"])
    with pytest.raises(ValueError, match="label"):
        build_report([fset("A", y, y), other])
    with pytest.raises(ValueError, match="truth"):
        build_report([fset("A", y, y), fset("B", y, y + 1)])
    with pytest.raises(ValueError, match="duplicate"):
        build_report([fset("A", y, y), fset("A", y, y)])
