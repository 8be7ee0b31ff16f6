"""Mini-batch Adam training with early stopping on validation RMSE."""
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import TransformerForecaster

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("epoch", "train_mse", "val_rmse", "val_mae")


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("lr > 0, batch_size, max_epochs and patience >= 1 required")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")


class Adam:
    """Adam with L2 weight decay folded into the gradient."""

    def __init__(self, params, cfg):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        b1t = 1.0 - c.beta1 ** self.t
        b2t = 1.0 - c.beta2 ** self.t
        for k, p in params.items():
            g = grads[k] + c.weight_decay * p
            self.m[k] = c.beta1 * self.m[k] + (1 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1 - c.beta2) * g * g
            p -= c.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + c.eps)


@dataclass
class EpochMetrics:
    epoch: int
    train_mse: float
    val_rmse: float
    val_mae: float


@dataclass
class TrainResult:
    model: TransformerForecaster
    history: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_rmse: float = math.inf

    def write_metrics_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(METRIC_COLUMNS)
            for h in self.history:
                wr.writerow([h.epoch, repr(h.train_mse), repr(h.val_rmse), repr(h.val_mae)])


def evaluate(model, X, Y, scale=1.0):
    """RMSE and MAE in target units (``scale`` undoes target normalization)."""
    if len(X) == 0:
        return math.nan, math.nan
    r = (model.predict(X) - Y) * scale
    return float(np.sqrt(np.mean(r * r))), float(np.mean(np.abs(r)))


def train(model, train_set, val_set, cfg=None, target_scale=1.0, progress=None):
    """Minimize MSE on ``train_set``; keep the parameters with the best validation RMSE.

    Each set is ``(X, Y)`` in normalized units. Raises DivergenceError if a
    loss or gradient turns non-finite. Reproducible for a fixed ``cfg.seed``.
    """
    cfg = cfg or TrainConfig()
    Xt, Yt = train_set
    Xv, Yv = val_set
    if len(Xt) == 0 or len(Xv) == 0:
        raise ValueError("training and validation sets must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.params, cfg)
    result = TrainResult(model)
    best = {k: v.copy() for k, v in model.params.items()}
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(Xt))
        total = 0.0
        for bi, start in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            loss, grads = model.loss_and_grad(Xt[idx], Yt[idx], rng)
            gnorm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if not (math.isfinite(loss) and math.isfinite(gnorm)):
                raise DivergenceError(f"non-finite loss at epoch {epoch}, batch {bi}: "
                                      f"loss={loss!r}, grad norm={gnorm!r}, "
                                      f"previous mean loss={total / max(bi, 1):.6g}")
            opt.step(model.params, grads)
            total += loss * len(idx)
        train_mse = total / len(Xt)
        rmse, mae = evaluate(model, Xv, Yv, target_scale)
        if not math.isfinite(rmse):
            raise DivergenceError(f"validation RMSE non-finite at epoch {epoch}")
        result.history.append(EpochMetrics(epoch, train_mse, rmse, mae))
        if progress:
            progress(result.history[-1])
        if rmse < result.best_val_rmse:
            result.best_val_rmse = rmse
            result.best_epoch = epoch
            best = {k: v.copy() for k, v in model.params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                log.info("early stop at epoch %d (best %d)", epoch, result.best_epoch)
                break
    model.params = best
    return result
