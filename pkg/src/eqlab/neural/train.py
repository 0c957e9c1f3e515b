"""MSE training loop with Adam and optional early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergedError
from .model import Network


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int | None = None    # epochs without val improvement; None = off
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")


class Adam:
    """Standard Adam; bias-corrected first/second moments."""

    def __init__(self, params: list[np.ndarray], cfg: TrainConfig):
        self.params = params
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]):
        self.t += 1
        c = self.cfg
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            p -= c.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + c.eps)


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred - target) ** 2))


@dataclass
class TrainResult:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False


def train(net: Network, x: np.ndarray, y: np.ndarray, cfg: TrainConfig,
          x_val: np.ndarray | None = None,
          y_val: np.ndarray | None = None) -> TrainResult:
    """Fit ``net`` to (x, y) windows; deterministic per ``cfg.seed``.

    Keeps the weights of the best epoch (validation loss if a validation
    split is given, training loss otherwise).  Raises
    :class:`TrainingDivergedError` with the epoch index if the loss goes
    non-finite.
    """
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(net.params(), cfg)
    result = TrainResult()
    n = x.shape[0]
    best = np.inf
    best_flat = net.get_flat()
    since_best = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            pred = net.forward(xb)
            diff = pred - yb
            batch_loss = float(np.mean(diff ** 2))
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(epoch, batch_loss)
            epoch_loss += batch_loss * len(idx)
            net.backward(2.0 * diff / diff.size)
            opt.step(net.grads())
        epoch_loss /= n
        result.train_loss.append(epoch_loss)
        if x_val is not None:
            vl = mse(net.forward(x_val), y_val)
            result.val_loss.append(vl)
            monitor = vl
        else:
            monitor = epoch_loss
        if not np.isfinite(monitor):
            raise TrainingDivergedError(epoch, monitor)
        if monitor < best:
            best = monitor
            best_flat = net.get_flat()
            result.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if cfg.patience is not None and since_best > cfg.patience:
                result.stopped_early = True
                break
    net.set_flat(best_flat)
    return result
