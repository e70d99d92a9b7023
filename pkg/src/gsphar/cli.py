"""``gsphar`` command line: compute-rv, build-graph, describe and run."""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import ForecastSet, build_report
from .io import (
    format_mae_table,
    format_stats_table,
    read_intraday_csv,
    read_panel_csv,
    save_fit,
    write_basis,
    write_filter_weights,
    write_horizon_report,
    write_panel_csv,
    write_spillover,
    write_stats_csv,
)
from .models import MODEL_REGISTRY, export_filter_weights
from .models._base import LONG
from .panel import SyntheticSpec, compute_rv, describe, generate_synthetic, planted_coupling
from .spectral import magnetic_basis
from .spillover import SpilloverGraph

FIXTURE_PREFIX = "@"
ALL_MODELS = list(MODEL_REGISTRY)


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


class ConfigError(ValueError):
    pass


def _reject_unknown(section: str, given: dict, allowed) -> None:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def _from_dict(cls, section: str, raw):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{section} must be a JSON object")
    names = [f.name for f in dataclasses.fields(cls)]
    _reject_unknown(section, raw, names)
    return cls(**raw)


@dataclass(frozen=True)
class SyntheticData:
    n: int = 4
    t: int = 600
    strength: float = 0.4
    own: float = 0.5
    noise_scale: float = 0.3
    seed: int = 0


@dataclass(frozen=True)
class DataConfig:
    panel: str | None = None
    intraday: str | None = None
    synthetic: SyntheticData | None = None
    scale: float = 100.0


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.01
    max_epochs: int = 500
    patience: int = 25
    gsphar_hidden: int = 16
    gnn_layers: int = 1
    gnn_hidden: int = 8
    windows: str = "overlapping"
    target: str = "point"


@dataclass(frozen=True)
class McsConfig:
    level: float = 0.05
    n_bootstrap: int = 1000
    block_length: int | None = None


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig
    seed: int
    models: list = field(default_factory=lambda: list(ALL_MODELS))
    horizons: list = field(default_factory=lambda: [1, 5, 22])
    q: float = 0.25
    rho: float = 0.5
    var_order: int = LONG
    var_ridge: float = 1e-4
    split: list = field(default_factory=lambda: [0.7, 0.1, 0.2])
    training: TrainingConfig = field(default_factory=TrainingConfig)
    mcs: McsConfig = field(default_factory=McsConfig)
    reference: str | None = "GSPHAR"
    out: str | None = None

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        names = [f.name for f in dataclasses.fields(cls)]
        _reject_unknown("config", raw, names)
        if "seed" not in raw:
            raise ConfigError("config must set 'seed'")
        if "data" not in raw:
            raise ConfigError("config must set 'data'")
        raw = dict(raw)
        data = dict(raw.pop("data") or {})
        _reject_unknown("data", data, [f.name for f in dataclasses.fields(DataConfig)])
        if data.get("synthetic") is not None:
            data["synthetic"] = _from_dict(SyntheticData, "data.synthetic", data["synthetic"])
        for key in ("panel", "intraday"):
            if data.get(key) is not None and base_dir is not None:
                data[key] = str((base_dir / data[key]).resolve())
        cfg = cls(
            data=DataConfig(**data),
            training=_from_dict(TrainingConfig, "training", raw.pop("training", None)),
            mcs=_from_dict(McsConfig, "mcs", raw.pop("mcs", None)),
            **raw,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        sources = [s for s in (self.data.panel, self.data.intraday, self.data.synthetic) if s is not None]
        if len(sources) != 1:
            raise ConfigError("data must name exactly one of 'panel', 'intraday' or 'synthetic'")
        for key in ("panel", "intraday"):
            path = getattr(self.data, key)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"data.{key} file not found: {path}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not self.models:
            raise ConfigError("models must list at least one model")
        unknown = [m for m in self.models if m not in MODEL_REGISTRY]
        if unknown:
            raise ConfigError(f"unknown model name(s): {', '.join(map(str, unknown))}; known: {', '.join(ALL_MODELS)}")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("models contains duplicates")
        if not self.horizons or any(not isinstance(h, int) or isinstance(h, bool) or h < 1 for h in self.horizons):
            raise ConfigError("horizons must be positive integers")
        if len(set(self.horizons)) != len(self.horizons):
            raise ConfigError("horizons contains duplicates")
        if len(self.split) != 3 or any(not (0 <= f <= 1) for f in self.split):
            raise ConfigError("split must be three fractions (train, validation, test)")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1")
        if self.split[0] <= 0 or self.split[2] <= 0:
            raise ConfigError("train and test fractions must be positive")
        if self.q < 0 or self.q > 0.5:
            raise ConfigError("q must lie in [0, 0.5]")
        if not 0 <= self.rho <= 1:
            raise ConfigError("rho must lie in [0, 1]")
        if self.var_order < 1 or self.var_ridge < 0:
            raise ConfigError("var_order must be >= 1 and var_ridge >= 0")
        if self.reference is not None and self.reference not in MODEL_REGISTRY:
            raise ConfigError(f"unknown reference model {self.reference!r}")
        t = self.training
        if t.learning_rate <= 0 or t.max_epochs < 1 or t.patience < 1:
            raise ConfigError("training needs learning_rate > 0, max_epochs >= 1 and patience >= 1")
        if t.gsphar_hidden < 1 or t.gnn_layers < 1 or t.gnn_hidden < 1:
            raise ConfigError("hidden sizes and gnn_layers must be >= 1")
        if t.windows not in ("overlapping", "partitioned") or t.target not in ("point", "mean"):
            raise ConfigError("training.windows must be overlapping|partitioned and training.target point|mean")
        if not 0 < self.mcs.level < 1 or self.mcs.n_bootstrap < 1:
            raise ConfigError("mcs.level must lie in (0, 1) and mcs.n_bootstrap >= 1")
        if self.mcs.block_length is not None and self.mcs.block_length < 1:
            raise ConfigError("mcs.block_length must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical config, excluding the output directory."""
        doc = self.to_dict()
        doc.pop("out", None)
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def load_config(source: str) -> RunConfig:
    """Load a config file, or a bundled one when ``source`` is ``@<name>``."""
    if source.startswith(FIXTURE_PREFIX):
        name = source[len(FIXTURE_PREFIX) :]
        ref = resources.files("gsphar") / "data" / f"{name}.json"
        if not ref.is_file():
            raise ConfigError(f"no bundled config named {name!r}")
        text, base = ref.read_text(), None
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {source}")
        text, base = path.read_text(), path.parent
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return RunConfig.from_dict(raw, base)


def load_data(cfg: RunConfig):
    d = cfg.data
    if d.panel is not None:
        return read_panel_csv(d.panel, d.scale)
    if d.intraday is not None:
        return compute_rv(read_intraday_csv(d.intraday), d.scale)
    s = d.synthetic
    spec = SyntheticSpec(s.n, s.t, planted_coupling(s.n, s.strength, s.own), s.noise_scale, s.seed)
    return generate_synthetic(spec)


def build_model(name: str, horizon: int, cfg: RunConfig, adjacency):
    t = cfg.training
    common = dict(horizon=horizon, target=t.target)
    val_frac = cfg.split[1] / (cfg.split[0] + cfg.split[1])
    trained = dict(
        learning_rate=t.learning_rate,
        max_epochs=t.max_epochs,
        patience=t.patience,
        validation_fraction=val_frac,
        random_state=cfg.seed,
    )
    graph = dict(adjacency=adjacency, var_order=cfg.var_order, var_ridge=cfg.var_ridge)
    cls = MODEL_REGISTRY[name]
    if name == "HAR":
        return cls(windows=t.windows, **common)
    if name in ("VHAR", "HAR-KS"):
        return cls(**common)
    if name == "v-GSPHAR":
        return cls(**graph, **common)
    if name == "GNNHAR":
        return cls(n_layers=t.gnn_layers, hidden=t.gnn_hidden, **graph, **common, **trained)
    if name == "GSPHAR":
        return cls(q=cfg.q, windows=t.windows, hidden=t.gsphar_hidden, **graph, **common, **trained)
    return cls(q=cfg.q, rho=cfg.rho, windows=t.windows, hidden=t.gsphar_hidden, **graph, **common, **trained)


def split_rows(n_rows: int, split) -> int:
    """Number of in-sample rows (training plus validation)."""
    return int(math.floor((split[0] + split[1]) * n_rows))


def run_pipeline(cfg: RunConfig, out: Path, log=None) -> dict:
    """Execute the full pipeline and write the report directory; returns the manifest."""
    log = log or (lambda msg: None)
    stage = "ingest"
    try:
        panel = load_data(cfg)
        T, N = panel.shape
        n_in = split_rows(T, cfg.split)
        need = LONG + max(cfg.horizons) + 1
        if n_in < max(need, cfg.var_order + 2) or T - n_in < 10:
            raise ValueError(f"panel of {T} rows is too short for the split and horizons")
        values = np.asarray(panel.values)
        in_sample = panel.slice_rows(0, n_in)
        out.mkdir(parents=True, exist_ok=True)
        write_panel_csv(panel, out / "panel.csv")
        stage = "describe"
        write_stats_csv(describe(panel), out / "stats.csv")

        files = ["panel.csv", "stats.csv"]
        forecast_sets = []
        for H in cfg.horizons:
            hdir = out / f"H{H}"
            stage = f"graph H={H}"
            graph = SpilloverGraph(cfg.var_order, H, cfg.var_ridge).fit(in_sample)
            if not graph.var_.stable:
                log(f"warning: VAR fit for H={H} is not stable (radius {graph.var_.spectral_radius:.4f})")
            adjacency = graph.net_.values
            write_spillover(graph.net_, hdir / "graph.csv", panel.labels, {"var_order": cfg.var_order, "ridge": cfg.var_ridge})
            write_basis(magnetic_basis(adjacency, cfg.q), hdir / "basis", panel.labels)
            files += [f"H{H}/graph.csv", f"H{H}/graph.json", f"H{H}/basis/eigenvalues.csv", f"H{H}/basis/U_real.csv", f"H{H}/basis/U_imag.csv"]
            truth = values[n_in:]
            for name in cfg.models:
                stage = f"fit {name} H={H}"
                log(f"fitting {name} at H={H}")
                model = build_model(name, H, cfg, adjacency).fit(in_sample)
                slug = name.replace("-", "_")
                save_fit(model, name, hdir / "fits" / f"{slug}.json", cfg.seed)
                files.append(f"H{H}/fits/{slug}.json")
                if name in ("GSPHAR", "d-GSPHAR"):
                    write_filter_weights(export_filter_weights(model), hdir / f"filter_weights_{slug}.csv")
                    files.append(f"H{H}/filter_weights_{slug}.csv")
                stage = f"forecast {name} H={H}"
                pred = model.forecast(values, n_in, T)
                forecast_sets.append(ForecastSet(name, H, pred, truth, panel.labels))

        stage = "evaluate"
        report = build_report(
            forecast_sets,
            reference=cfg.reference,
            level=cfg.mcs.level,
            n_bootstrap=cfg.mcs.n_bootstrap,
            block_length=cfg.mcs.block_length,
            seed=cfg.seed,
        )
        stage = "report"
        for H, rep in report.horizons.items():
            write_horizon_report(rep, out / f"H{H}")
            (out / f"H{H}" / "mae.txt").write_text(format_mae_table(rep) + "\n")
            files += [f"H{H}/{f}" for f in ("mae.csv", "dm.csv", "mcs.csv", "mae.txt")]
        manifest = {
            "version": __version__,
            "config_hash": cfg.digest(),
            "seed": cfg.seed,
            "models": list(cfg.models),
            "horizons": list(cfg.horizons),
            "labels": list(panel.labels),
            "rows": {"total": T, "in_sample": n_in, "test": T - n_in},
            "mcs_seed": cfg.seed,
            "files": sorted(files),
        }
        cfg_doc = cfg.to_dict()
        cfg_doc.pop("out", None)
        (out / "config.json").write_text(json.dumps(cfg_doc, indent=2, sort_keys=True) + "\n")
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - tagged and re-raised for the CLI
        raise StageError(stage, str(exc) or type(exc).__name__) from exc


# subcommands


def cmd_compute_rv(args) -> None:
    try:
        returns = read_intraday_csv(args.input)
    except (OSError, ValueError) as exc:
        raise StageError("ingest", str(exc)) from exc
    try:
        write_panel_csv(compute_rv(returns, args.scale), args.out)
    except (OSError, ValueError) as exc:
        raise StageError("write", str(exc)) from exc


def cmd_build_graph(args) -> None:
    try:
        panel = read_panel_csv(args.panel)
    except (OSError, ValueError) as exc:
        raise StageError("ingest", str(exc)) from exc
    try:
        graph = SpilloverGraph(args.p, args.horizon, args.ridge).fit(panel)
    except ValueError as exc:
        raise StageError("graph", str(exc)) from exc
    if not graph.var_.stable:
        print(f"warning: VAR fit is not stable (radius {graph.var_.spectral_radius:.4f})", file=sys.stderr)
    try:
        write_spillover(graph.net_, args.out, panel.labels, {"var_order": args.p, "ridge": args.ridge})
        if args.basis_dir:
            write_basis(magnetic_basis(graph.net_.values, args.q), args.basis_dir, panel.labels)
    except (OSError, ValueError) as exc:
        raise StageError("write", str(exc)) from exc


def cmd_describe(args) -> None:
    try:
        panel = read_panel_csv(args.panel)
    except (OSError, ValueError) as exc:
        raise StageError("ingest", str(exc)) from exc
    try:
        stats = describe(panel)
    except ValueError as exc:
        raise StageError("describe", str(exc)) from exc
    print(format_stats_table(stats))
    if args.out:
        write_stats_csv(stats, args.out)


def cmd_run(args) -> None:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out=args.out)
        cfg.validate()
        if cfg.out is None:
            raise ConfigError("no output directory: pass --out or set 'out' in the config")
    except (ConfigError, TypeError) as exc:
        raise StageError("config", str(exc)) from exc
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    run_pipeline(cfg, Path(cfg.out), log)


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsphar", description="Spillover-graph volatility forecasting pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute-rv", help="intraday returns CSV -> realized volatility panel CSV")
    p.add_argument("input", help="CSV with columns date,label,ret")
    p.add_argument("--out", required=True, help="panel CSV to write")
    p.add_argument("--scale", type=float, default=100.0)
    p.set_defaults(func=cmd_compute_rv)

    p = sub.add_parser("build-graph", help="panel CSV -> net pairwise spillover graph CSV")
    p.add_argument("panel", help="panel CSV (date,<labels>)")
    p.add_argument("--out", required=True, help="graph CSV to write (a .json sidecar is written next to it)")
    p.add_argument("--p", type=int, default=LONG, help="VAR order")
    p.add_argument("--horizon", type=int, default=1, help="forecast-error horizon")
    p.add_argument("--ridge", type=float, default=1e-4)
    p.add_argument("--basis-dir", help="also export the magnetic Laplacian basis here")
    p.add_argument("--q", type=float, default=0.25)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("describe", help="summary statistics and ADF test per index")
    p.add_argument("panel")
    p.add_argument("--out", help="stats CSV to write")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("run", help="full pipeline from a JSON config")
    p.add_argument("--config", required=True, help=f"config JSON path, or {FIXTURE_PREFIX}synthetic_fixture")
    p.add_argument("--seed", type=_seed, help="overrides the config seed")
    p.add_argument("--out", help="report directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except StageError as exc:
        print(f"gsphar {args.command}: [{exc.stage}] {exc}", file=sys.stderr)
        return 2 if exc.stage == "config" else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
