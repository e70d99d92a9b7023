"""CSV and JSON readers/writers for panels, graphs, bases, fits and reports.

Machine-readable floats are written with 17 significant digits so that a
round trip reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .models import MODEL_REGISTRY, GNNHARRegressor, VGSPHARRegressor
from .models.neural import _GradientForecaster
from .panel import PanelStats, ReturnPanel, VolPanel
from .spectral import MagneticBasis, magnetic_basis
from .spillover import KINDS, SpilloverMatrix


class CsvFormatError(ValueError):
    """A malformed input file; the message carries the path and line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def fmt(x) -> str:
    return "%.17g" % float(x)


def _parse_float(text, path, line, what):
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(path, line, f"cannot parse {what} {text!r} as a number") from None
    if not math.isfinite(value):
        raise CsvFormatError(path, line, f"non-finite {what} {text!r}")
    return value


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if row and any(cell.strip() for cell in row):
                yield lineno, [cell.strip() for cell in row]


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# panels


def read_panel_csv(path, scale: float = 100.0) -> VolPanel:
    """Read ``date,<label1>,...,<labelN>`` into a VolPanel."""
    rows = iter(_rows(path))
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise CsvFormatError(path, 1, "empty file") from None
    if len(header) < 2 or header[0].lower() != "date":
        raise CsvFormatError(path, lineno, "header must be 'date,<label>,...'")
    labels = header[1:]
    if len(set(labels)) != len(labels):
        raise CsvFormatError(path, lineno, "duplicate labels in header")
    days, values = [], []
    for lineno, row in rows:
        if len(row) != len(header):
            raise CsvFormatError(path, lineno, f"expected {len(header)} fields, found {len(row)}")
        if days and not row[0] > days[-1]:
            raise CsvFormatError(path, lineno, f"date {row[0]!r} is not after {days[-1]!r}")
        vals = [_parse_float(cell, path, lineno, "value") for cell in row[1:]]
        if any(v < 0 for v in vals):
            raise CsvFormatError(path, lineno, "negative volatility")
        days.append(row[0])
        values.append(vals)
    if not days:
        raise CsvFormatError(path, lineno, "no data rows")
    return VolPanel(labels, days, np.array(values), scale)


def write_panel_csv(panel: VolPanel, path):
    _write_rows(
        path,
        ["date", *panel.labels],
        ([d, *map(fmt, row)] for d, row in zip(panel.days, panel.values)),
    )


def read_intraday_csv(path) -> ReturnPanel:
    """Read long-format ``date,label,ret`` rows into a ReturnPanel.

    Every date in the file becomes a day of the panel. A label with no
    returns on a day (or a row with an empty ``ret``) has an empty cell,
    which maps to zero realized volatility. Labels keep first-seen order.
    """
    rows = iter(_rows(path))
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise CsvFormatError(path, 1, "empty file") from None
    if [h.lower() for h in header] != ["date", "label", "ret"]:
        raise CsvFormatError(path, lineno, "header must be 'date,label,ret'")
    cells: dict[tuple, list] = {}
    labels: list = []
    days: set = set()
    for lineno, row in rows:
        if len(row) == 2:
            row = [*row, ""]
        if len(row) != 3:
            raise CsvFormatError(path, lineno, f"expected 3 fields, found {len(row)}")
        day, label, ret = row
        if not day or not label:
            raise CsvFormatError(path, lineno, "date and label are required")
        if label not in labels:
            labels.append(label)
        days.add(day)
        bucket = cells.setdefault((day, label), [])
        if ret:
            bucket.append(_parse_float(ret, path, lineno, "return"))
    if not days:
        raise CsvFormatError(path, lineno, "no data rows")
    ordered = sorted(days)
    returns = [[cells.get((d, label), []) for label in labels] for d in ordered]
    return ReturnPanel(labels, ordered, returns)


def write_stats_csv(stats: PanelStats, path):
    _write_rows(
        path,
        ["label", "mean", "std", "skewness", "kurtosis", "adf_stat", "adf_reject"],
        (
            [r.label, fmt(r.mean), fmt(r.std), fmt(r.skewness), fmt(r.kurtosis), fmt(r.adf_stat), str(bool(r.adf_reject)).lower()]
            for r in stats.rows
        ),
    )


def format_stats_table(stats: PanelStats) -> str:
    """Human-readable summary table rounded to 3 decimals."""
    head = f"{'label':<12}{'mean':>10}{'std':>10}{'skew':>10}{'kurt':>10}{'adf':>10}  p"
    lines = [head]
    for r in stats.rows:
        lines.append(
            f"{r.label:<12}{r.mean:>10.3f}{r.std:>10.3f}{r.skewness:>10.3f}{r.kurtosis:>10.3f}{r.adf_stat:>10.3f}  {r.adf_band}"
        )
    return "\n".join(lines)


# graphs and bases


def write_spillover(matrix: SpilloverMatrix, path, labels=None, extra: dict | None = None):
    """Square CSV with labels as header row and first column, plus a ``.json`` sidecar."""
    labels = list(labels if labels is not None else matrix.labels or range(matrix.values.shape[0]))
    labels = [str(x) for x in labels]
    _write_rows(path, ["", *labels], ([lab, *map(fmt, row)] for lab, row in zip(labels, matrix.values)))
    doc = {"kind": matrix.kind, "H": int(matrix.horizon), "labels": labels}
    doc.update(extra or {})
    _write_json(Path(path).with_suffix(".json"), doc)


def read_spillover(path) -> SpilloverMatrix:
    rows = list(_rows(path))
    if not rows:
        raise CsvFormatError(path, 1, "empty file")
    lineno, header = rows[0]
    labels = header[1:]
    if len(rows) - 1 != len(labels):
        raise CsvFormatError(path, lineno, f"expected {len(labels)} data rows, found {len(rows) - 1}")
    values = []
    for (lineno, row), label in zip(rows[1:], labels):
        if len(row) != len(header):
            raise CsvFormatError(path, lineno, f"expected {len(header)} fields, found {len(row)}")
        if row[0] != label:
            raise CsvFormatError(path, lineno, f"row label {row[0]!r} does not match column label {label!r}")
        values.append([_parse_float(c, path, lineno, "weight") for c in row[1:]])
    sidecar = Path(path).with_suffix(".json")
    kind, horizon = "net_pairwise", 1
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        kind, horizon = meta.get("kind", kind), int(meta.get("H", horizon))
    if kind not in KINDS:
        raise CsvFormatError(sidecar, 1, f"unknown spillover kind {kind!r}")
    return SpilloverMatrix(np.array(values), horizon, kind, labels)


def write_basis(basis: MagneticBasis, directory, labels=None):
    directory = Path(directory)
    n = basis.n
    labels = [str(x) for x in (labels if labels is not None else range(n))]
    cols = [f"u{k}" for k in range(n)]
    _write_rows(directory / "eigenvalues.csv", ["index", "eigenvalue"], ([k, fmt(v)] for k, v in enumerate(basis.eigenvalues)))
    _write_rows(directory / "U_real.csv", ["", *cols], ([lab, *map(fmt, row)] for lab, row in zip(labels, basis.U.real)))
    _write_rows(directory / "U_imag.csv", ["", *cols], ([lab, *map(fmt, row)] for lab, row in zip(labels, np.imag(basis.U))))


# fitted models


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if hasattr(value, "values") and isinstance(getattr(value, "values"), np.ndarray):
        return value.values.tolist()
    return value


def _model_state(model) -> dict:
    if isinstance(model, _GradientForecaster):
        state = dict(model.params_)
        state["adjacency_"] = model.adjacency_
        return state
    state = {"coef_": model.coef_}
    if isinstance(model, VGSPHARRegressor):
        state["adjacency_"] = model.adjacency_
    return state


def fit_document(model, kind: str, seed: int | None = None) -> dict:
    """JSON-ready description of a fitted model: kind, hyperparameters, flattened parameters, log, seed."""
    if kind not in MODEL_REGISTRY or not isinstance(model, MODEL_REGISTRY[kind]):
        raise ValueError(f"model is not a fitted {kind!r}")
    params = {}
    for name, arr in _model_state(model).items():
        arr = np.asarray(arr, dtype=float)
        params[name] = {"shape": list(arr.shape), "values": [float(v) for v in arr.ravel()]}
    return {
        "kind": kind,
        "hyperparameters": {k: _jsonable(v) for k, v in model.get_params().items()},
        "n_features": int(model.n_features_in_),
        "params": params,
        "training_log": list(getattr(model, "training_log_", [])),
        "seed": seed,
    }


def save_fit(model, kind: str, path, seed: int | None = None):
    doc = fit_document(model, kind, seed)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n")


def load_fit(path):
    """Rebuild a fitted model from a document written by :func:`save_fit`."""
    doc = json.loads(Path(path).read_text())
    return model_from_document(doc)


def model_from_document(doc: dict):
    kind = doc.get("kind")
    if kind not in MODEL_REGISTRY:
        raise ValueError(f"unknown model kind {kind!r}")
    hyper = dict(doc["hyperparameters"])
    if hyper.get("adjacency") is not None:
        hyper["adjacency"] = np.asarray(hyper["adjacency"], dtype=float)
    model = MODEL_REGISTRY[kind](**hyper)
    state = {k: np.array(v["values"], dtype=float).reshape(v["shape"]) for k, v in doc["params"].items()}
    n = int(doc["n_features"])
    model.n_features_in_ = n
    if isinstance(model, _GradientForecaster):
        adjacency = state.pop("adjacency_")
        model.adjacency = adjacency
        model._setup(None, np.zeros((1, n)))
        model.adjacency = hyper.get("adjacency")
        model.params_ = state
        model._shapes_ = {k: v.shape for k, v in state.items()}
        model.training_log_ = list(doc.get("training_log", []))
    else:
        model.coef_ = state["coef_"]
        if isinstance(model, VGSPHARRegressor):
            model.adjacency_ = state["adjacency_"]
            model.basis_ = magnetic_basis(model.adjacency_, 0.0)
    return model


def write_filter_weights(rows, path):
    _write_rows(
        path,
        ["window", "lag", "learned_weight", "har_reference_weight"],
        ([r["window"], r["lag"], fmt(r["learned_weight"]), fmt(r["har_reference_weight"])] for r in rows),
    )


# evaluation reports


def write_horizon_report(rep, directory):
    """mae.csv, dm.csv and mcs.csv for one horizon."""
    directory = Path(directory)
    _write_rows(
        directory / "mae.csv",
        ["label", *rep.models, "best"],
        (
            [lab, *map(fmt, rep.mae[i]), rep.models[int(np.argmax(rep.mae_min[i]))]]
            for i, lab in enumerate(rep.labels)
        ),
    )
    dm_rows = []
    for model, (stats, pvals) in rep.dm.items():
        for i, lab in enumerate(rep.labels):
            dm_rows.append([lab, model, rep.reference, fmt(stats[i]), fmt(pvals[i])])
    _write_rows(directory / "dm.csv", ["label", "model", "reference", "statistic", "p_value"], dm_rows)
    mcs_rows = []
    if rep.mcs_pvalues is not None:
        for i, lab in enumerate(rep.labels):
            for j, model in enumerate(rep.models):
                mcs_rows.append([lab, model, fmt(rep.mcs_pvalues[i, j]), str(bool(rep.mcs_included[i, j])).lower()])
    _write_rows(directory / "mcs.csv", ["label", "model", "p_value", "included"], mcs_rows)


def format_mae_table(rep) -> str:
    """MAE table rounded to 3 decimals; the per-row minimum is starred."""
    width = max(10, *(len(m) + 2 for m in rep.models))
    lines = [f"H = {rep.horizon}", f"{'label':<12}" + "".join(f"{m:>{width}}" for m in rep.models)]
    for i, lab in enumerate(rep.labels):
        cells = "".join(
            f"{(f'{v:.3f}*' if rep.mae_min[i, j] else f'{v:.3f} '):>{width}}" for j, v in enumerate(rep.mae[i])
        )
        lines.append(f"{lab:<12}" + cells)
    return "\n".join(lines)
