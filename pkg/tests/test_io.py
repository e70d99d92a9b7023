import json

import numpy as np
import pytest

from gsphar.evaluation import ForecastSet, build_report
from gsphar.io import (
    CsvFormatError,
    fmt,
    format_mae_table,
    load_fit,
    read_intraday_csv,
    read_panel_csv,
    read_spillover,
    save_fit,
    write_basis,
    write_horizon_report,
    write_panel_csv,
    write_spillover,
)
from gsphar.models import MODEL_REGISTRY
from gsphar.panel import SyntheticSpec, VolPanel, generate_synthetic, planted_coupling
from gsphar.spectral import magnetic_basis
from gsphar.spillover import spillover_graph


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_fmt_round_trips(rng):
    for x in rng.normal(size=200) * 10.0 ** rng.integers(-20, 20, 200):
        assert float(fmt(x)) == x
    assert fmt(0.1) == "0.10000000000000001"


def test_panel_round_trip(tmp_path, rng):
    vp = VolPanel(["x", "y"], ["2020-01-01", "2020-01-02", "2020-01-03"], rng.gamma(2.0, size=(3, 2)))
    write_panel_csv(vp, tmp_path / "p.csv")
    back = read_panel_csv(tmp_path / "p.csv")
    assert back.labels == ["x", "y"] and back.days == vp.days
    assert back.values.tobytes() == vp.values.tobytes()


@pytest.mark.parametrize(
    "text, line, match",
    [
        ("", 1, "empty"),
        ("day,a\n1,2\n", 1, "header"),
        ("date,a,a\n1,2,3\n", 1, "duplicate"),
        ("date,a\n2020-01-01,1\n2020-01-02,abc\n", 3, "parse"),
        ("date,a,b\n2020-01-01,1,2\n2020-01-02,1\n", 3, "fields"),
        ("date,a\n2020-01-02,1\n2020-01-01,1\n", 3, "not after"),
        ("date,a\n2020-01-01,-1\n", 2, "negative"),
        ("date,a\n2020-01-01,inf\n", 2, "non-finite"),
        ("date,a\n", 1, "no data"),
    ],
)
def test_panel_parse_errors_carry_line(tmp_path, text, line, match):
    p = write(tmp_path, "bad.csv", text)
    with pytest.raises(CsvFormatError, match=match) as info:
        read_panel_csv(p)
    assert info.value.line == line
    assert f"bad.csv:{line}:" in str(info.value)


def test_intraday_reader(tmp_path):
    p = write(tmp_path, "r.csv", "date,label,ret\nd2,B,0.5\nd1,A,0.1\nd1,A,-0.2\nd2,A,\n")
    rp = read_intraday_csv(p)
    assert rp.labels == ["B", "A"] and rp.days == ["d1", "d2"]
    assert rp.returns[0][0] == [] and rp.returns[0][1] == [0.1, -0.2]
    assert rp.returns[1] == [[0.5], []]


@pytest.mark.parametrize(
    "text, line",
    [
        ("date,ticker,ret\n", 1),
        ("date,label,ret\nd1,A,0.1\nd1,A,x\n", 3),
        ("date,label,ret\nd1,,0.1\n", 2),
        ("date,label,ret\nd1,A,0.1,9\n", 2),
    ],
)
def test_intraday_parse_errors(tmp_path, text, line):
    with pytest.raises(CsvFormatError) as info:
        read_intraday_csv(write(tmp_path, "r.csv", text))
    assert info.value.line == line


def test_spillover_round_trip(tmp_path, rng):
    vp = generate_synthetic(SyntheticSpec(3, 600, planted_coupling(3), seed=3))
    net = spillover_graph(vp, p=2, H=5)
    write_spillover(net, tmp_path / "g.csv", vp.labels, {"var_order": 2})
    back = read_spillover(tmp_path / "g.csv")
    assert back.values.tobytes() == net.values.tobytes()
    assert back.labels == vp.labels and back.horizon == 5 and back.kind == net.kind
    meta = json.loads((tmp_path / "g.json").read_text())
    assert meta["var_order"] == 2 and meta["labels"] == vp.labels


def test_spillover_label_mismatch(tmp_path):
    p = write(tmp_path, "g.csv", ",a,b\na,0,1\nc,0,0\n")
    with pytest.raises(CsvFormatError, match="row label") as info:
        read_spillover(p)
    assert info.value.line == 3


def test_basis_export(tmp_path, rng):
    A = rng.uniform(size=(3, 3))
    np.fill_diagonal(A, 0)
    b = magnetic_basis(A, 0.25)
    write_basis(b, tmp_path, ["a", "b", "c"])
    U = np.loadtxt(tmp_path / "U_real.csv", delimiter=",", skiprows=1, usecols=(1, 2, 3)) + 1j * np.loadtxt(
        tmp_path / "U_imag.csv", delimiter=",", skiprows=1, usecols=(1, 2, 3)
    )
    assert U.tobytes() == np.asarray(b.U).tobytes()
    lam = np.loadtxt(tmp_path / "eigenvalues.csv", delimiter=",", skiprows=1, usecols=1)
    assert lam.tobytes() == np.asarray(b.eigenvalues).tobytes()


FIT_KW = {
    "HAR": {},
    "VHAR": {},
    "HAR-KS": {},
    "v-GSPHAR": {},
    "GNNHAR": {"max_epochs": 5},
    "GSPHAR": {"max_epochs": 5, "windows": "partitioned"},
    "d-GSPHAR": {"max_epochs": 5},
}


@pytest.mark.parametrize("kind", list(MODEL_REGISTRY))
def test_fit_round_trip_predicts_identically(tmp_path, kind):
    vp = generate_synthetic(SyntheticSpec(3, 150, planted_coupling(3), seed=5))
    model = MODEL_REGISTRY[kind](horizon=2, **FIT_KW[kind]).fit(vp)
    save_fit(model, kind, tmp_path / "fit.json", seed=9)
    back = load_fit(tmp_path / "fit.json")
    assert type(back) is type(model)
    assert back.predict(vp).tobytes() == model.predict(vp).tobytes()
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert doc["kind"] == kind and doc["seed"] == 9


def test_save_fit_rejects_wrong_kind(tmp_path):
    vp = generate_synthetic(SyntheticSpec(2, 100, planted_coupling(2), seed=1))
    with pytest.raises(ValueError):
        save_fit(MODEL_REGISTRY["HAR"]().fit(vp), "VHAR", tmp_path / "f.json")


def test_horizon_report_files(tmp_path, rng):
    labels = ["a", "b"]
    y = rng.gamma(2.0, size=(40, 2))
    sets = [ForecastSet(m, 5, y + s, y, labels) for m, s in (("HAR", 0.3), ("GSPHAR", 0.1))]
    rep = build_report(sets, reference="GSPHAR", n_bootstrap=50).horizons[5]
    write_horizon_report(rep, tmp_path)
    mae_rows = (tmp_path / "mae.csv").read_text().splitlines()
    assert mae_rows[0] == "label,HAR,GSPHAR,best"
    first = mae_rows[1].split(",")
    assert first[0] == "a" and first[-1] == "GSPHAR"
    assert abs(float(first[1]) - 0.3) < 1e-12 and len(first[1]) > 10
    dm_rows = (tmp_path / "dm.csv").read_text().splitlines()
    assert dm_rows[0] == "label,model,reference,statistic,p_value"
    assert [r.split(",")[:3] for r in dm_rows[1:]] == [["a", "HAR", "GSPHAR"], ["b", "HAR", "GSPHAR"]]
    mcs_rows = (tmp_path / "mcs.csv").read_text().splitlines()
    assert len(mcs_rows) == 1 + 4
    table = format_mae_table(rep)
    assert "0.300 " in table and "0.100*" in table


def test_report_single_model_files(tmp_path, rng):
    y = rng.gamma(2.0, size=(20, 2))
    rep = build_report([ForecastSet("HAR", 1, y, y, ["a", "b"])]).horizons[1]
    write_horizon_report(rep, tmp_path)
    assert (tmp_path / "dm.csv").read_text().splitlines() == ["label,model,reference,statistic,p_value"]
    assert (tmp_path / "mcs.csv").read_text().splitlines() == ["label,model,p_value,included"]
