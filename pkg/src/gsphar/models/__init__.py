from ._base import LONG, MID, SHORT, horizon_targets, lag_windows, pooled_features
from .linear import HARKSRegressor, HARRegressor, VGSPHARRegressor, VHARRegressor, fit_har
from .neural import (
    DGSPHARRegressor,
    GNNHARRegressor,
    GSPHARRegressor,
    TrainingError,
    chronological_split,
    export_filter_weights,
)

MODEL_REGISTRY = {
    "HAR": HARRegressor,
    "VHAR": VHARRegressor,
    "HAR-KS": HARKSRegressor,
    "GNNHAR": GNNHARRegressor,
    "v-GSPHAR": VGSPHARRegressor,
    "GSPHAR": GSPHARRegressor,
    "d-GSPHAR": DGSPHARRegressor,
}

__all__ = [
    "DGSPHARRegressor",
    "GNNHARRegressor",
    "GSPHARRegressor",
    "HARKSRegressor",
    "HARRegressor",
    "LONG",
    "MID",
    "MODEL_REGISTRY",
    "SHORT",
    "TrainingError",
    "VGSPHARRegressor",
    "VHARRegressor",
    "chronological_split",
    "export_filter_weights",
    "fit_har",
    "horizon_targets",
    "lag_windows",
    "pooled_features",
]
