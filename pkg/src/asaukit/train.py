"""Mini-batch training loop: Adam, early stopping, deterministic shuffling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import Network
from .optim import adam_init, adam_step
from .rng import SplitMix64
from .tensor import NonFiniteError


class TrainingDiverged(RuntimeError):
    """Raised when a training loss turns NaN/Inf."""


@dataclass
class TrainConfig:
    max_epochs: int
    batch_size: int
    lr: float
    seed: int
    patience: int = 50
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if abs(sum(self.split) - 1.0) > 1e-12 or any(f <= 0 for f in self.split):
            raise ValueError(f"split fractions must be positive and sum to 1, got {self.split}")


@dataclass
class TrainResult:
    history: list[tuple[int, float, float]]  # (epoch, train_loss, val_metric)
    best_epoch: int
    best_metric: float
    best_values: np.ndarray


def train_loop(net: Network, datasets, config: TrainConfig, loss_fn, metric_fn,
               weight_decay: float = 1e-4) -> TrainResult:
    """Train until max_epochs or `patience` consecutive non-improving epochs.

    datasets is the (train, val, test) triple; only train and val are touched
    here, the test split belongs to the caller.  The validation metric is
    maximized, and the returned parameters are those of the best epoch (they
    are also loaded back into the network).  The whole run, including batch
    order, is a deterministic function of config.seed.
    """
    train_set, val_set, _ = datasets
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("train and validation splits must be nonempty")
    rng = SplitMix64(config.seed)
    state = adam_init(net.store, lr=config.lr, weight_decay=weight_decay)
    history: list[tuple[int, float, float]] = []
    best_metric = -np.inf
    best_epoch = 0
    best_values = net.store.snapshot()
    bad_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        order = list(range(len(train_set)))
        rng.shuffle(order)
        loss_sum = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            x, target = train_set.batch(idx)
            try:
                out, cache = net.forward(x)
                loss, grad = loss_fn(out, target)
            except NonFiniteError as exc:
                raise TrainingDiverged(f"non-finite activations at epoch {epoch}") from exc
            if not np.isfinite(loss):
                raise TrainingDiverged(f"loss became {loss} at epoch {epoch}")
            net.backward(cache, grad)
            adam_step(net.store, state)
            net.store.apply_clamps()
            loss_sum += loss * len(idx)
        train_loss = loss_sum / len(order)
        val_metric = metric_fn(net, val_set)
        history.append((epoch, train_loss, val_metric))
        if val_metric > best_metric:
            best_metric = val_metric
            best_epoch = epoch
            best_values = net.store.snapshot()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break

    net.store.load(best_values)
    return TrainResult(history, best_epoch, float(best_metric), best_values)


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as f:
        f.write("epoch,train_loss,val_metric\n")
        for epoch, loss, metric in history:
            f.write("%d,%.17g,%.17g\n" % (epoch, loss, metric))
