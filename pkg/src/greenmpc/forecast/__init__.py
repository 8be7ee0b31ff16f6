"""Day-ahead price and solar forecasting."""
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .cleaning import fill_gaps, iqr_clean, iqr_fences
from .ensemble import (DEFAULT_DECAY, ForecastSet, RollingForecasts, ensemble_combine,
                       ensemble_weights, persistence_baseline)
from .features import (FeatureTable, Normalizer, build_windows, chronological_split,
                       price_feature_table, series_feature_table, solar_feature_table,
                       window_starts)
from .fit import FitReport, fit_forecaster, persistence_rmse, rolling_forecasts, rolling_predictions
from .model import PRICE_LAYERS, SOLAR_LAYERS, AttentionModelConfig, TransformerForecaster
from .train import DivergenceError, TrainConfig, TrainResult, train

__all__ = [
    "AttentionModelConfig", "CheckpointError", "DEFAULT_DECAY", "DivergenceError",
    "FeatureTable", "FitReport", "ForecastSet", "Normalizer", "PRICE_LAYERS", "RollingForecasts",
    "SOLAR_LAYERS", "TrainConfig", "TrainResult", "TransformerForecaster", "build_windows",
    "chronological_split", "ensemble_combine", "ensemble_weights", "fill_gaps", "fit_forecaster",
    "iqr_clean", "iqr_fences", "load_checkpoint", "persistence_baseline", "persistence_rmse",
    "price_feature_table", "rolling_forecasts", "rolling_predictions", "save_checkpoint",
    "series_feature_table", "solar_feature_table", "train", "window_starts",
]
