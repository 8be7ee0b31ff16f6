"""End-to-end fit of one forecaster and rolling prediction over a feature table."""
from dataclasses import dataclass

import numpy as np

from .ensemble import DEFAULT_DECAY, RollingForecasts
from .features import HORIZON, WINDOW, build_windows, chronological_split
from .model import AttentionModelConfig, TransformerForecaster
from .train import TrainConfig, evaluate, train


@dataclass
class FitReport:
    result: object
    splits: object
    test_rmse: float
    test_mae: float
    persistence_rmse: float

    @property
    def model(self):
        return self.result.model

    @property
    def normalizer(self):
        return self.splits.normalizer


def persistence_rmse(table, starts, window=WINDOW, horizon=HORIZON):
    """RMSE of repeating the previous 24 h for every window issued at ``starts``."""
    y = table.columns[table.target]
    starts = np.asarray(starts, dtype=np.int64)
    if starts.size == 0:
        return float("nan")
    fut = y[starts[:, None] + np.arange(1, horizon + 1)]
    past = y[starts[:, None] + (np.arange(horizon) % 24) - 23]
    return float(np.sqrt(np.mean((fut - past) ** 2)))


def fit_forecaster(table, layers=2, heads=4, model_dim=32, feedforward_dim=64, dropout=0.1,
                   train_cfg=None, seed=0, progress=None):
    """Split, normalize on the training part, train, and score on the test part."""
    train_cfg = train_cfg or TrainConfig(seed=seed)
    splits = chronological_split(table)
    norm = splits.normalizer
    tr = build_windows(table, norm, splits.train)
    va = build_windows(table, norm, splits.val)
    te = build_windows(table, norm, splits.test)
    cfg = AttentionModelConfig(n_features=len(table.names), layers=layers, heads=heads,
                               model_dim=model_dim, feedforward_dim=feedforward_dim,
                               dropout=dropout)
    model = TransformerForecaster(cfg, seed=seed)
    scale = norm.std[norm.target_index]
    res = train(model, (tr.X, tr.Y), (va.X, va.Y), train_cfg, target_scale=scale,
                progress=progress)
    rmse, mae = evaluate(model, te.X, te.Y, scale)
    return FitReport(res, splits, rmse, mae, persistence_rmse(table, splits.test))


def rolling_predictions(model, normalizer, table, batch=512):
    """``pred[s]`` = 24-h forecast issued after hour ``s`` (NaN without a full input window)."""
    w = model.cfg.window
    m = normalizer.normalize(table.matrix())
    n = len(table)
    ok = np.isfinite(m).all(1) & table.valid
    run = np.zeros(n, dtype=np.int64)
    for i in range(n):
        run[i] = (run[i - 1] + 1 if i else 1) if ok[i] else 0
    pred = np.full((n, model.cfg.horizon), np.nan)
    starts = np.nonzero(run >= w)[0]
    for i in range(0, starts.size, batch):
        s = starts[i:i + batch]
        X = m[s[:, None] + np.arange(-w + 1, 1)[None, :]]
        pred[s] = normalizer.denormalize_target(model.predict(X))
    return pred


def rolling_forecasts(model, normalizer, table, decay=DEFAULT_DECAY):
    """RollingForecasts over ``table``; hours without a prediction fall back to persistence."""
    pred = rolling_predictions(model, normalizer, table)
    y = table.columns[table.target]
    fallback = np.concatenate([y[:24], y[:-24]]) if len(y) > 24 else y.copy()
    return RollingForecasts(pred, fallback, decay)
