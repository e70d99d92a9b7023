"""Volatility forecasting on directed spillover graphs with magnetic-Laplacian spectral HAR models."""

__version__ = "0.1.0"

from .evaluation import ForecastSet, build_report, dm_test, mae, mcs_test  # noqa: E402
from .models import (  # noqa: E402
    MODEL_REGISTRY,
    DGSPHARRegressor,
    GNNHARRegressor,
    GSPHARRegressor,
    HARKSRegressor,
    HARRegressor,
    VGSPHARRegressor,
    VHARRegressor,
)
from .panel import VolPanel, align_panels, compute_rv, describe, generate_synthetic  # noqa: E402
from .spectral import magnetic_basis, normalized_magnetic_laplacian  # noqa: E402
from .spillover import SpilloverGraph, spillover_graph  # noqa: E402

__all__ = [
    "DGSPHARRegressor",
    "ForecastSet",
    "GNNHARRegressor",
    "GSPHARRegressor",
    "HARKSRegressor",
    "HARRegressor",
    "MODEL_REGISTRY",
    "SpilloverGraph",
    "VGSPHARRegressor",
    "VHARRegressor",
    "VolPanel",
    "align_panels",
    "build_report",
    "compute_rv",
    "describe",
    "dm_test",
    "generate_synthetic",
    "mae",
    "magnetic_basis",
    "mcs_test",
    "normalized_magnetic_laplacian",
    "spillover_graph",
]
