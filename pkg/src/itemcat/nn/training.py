"""Mini-batch training loop: seeded shuffling, Adam, per-epoch loss history."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..text import PAD_INDEX
from .network import NetworkParams, loss_and_grads
from .optim import AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    lr: float = 0.001
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def train(
    spec,
    params: NetworkParams,
    inputs: np.ndarray,
    labels: np.ndarray | None,
    cfg: TrainConfig,
    loss_kind: str,
):
    """Train in place; returns (params, per-epoch mean loss history).

    Fully deterministic given (cfg.seed, dataset order): one rng drives the
    epoch shuffles and all dropout masks. Index-sequence batches are trimmed
    to their longest real length, which changes nothing numerically because
    padded positions are masked out of both the recurrence and the losses.
    """
    n = inputs.shape[0]
    if n == 0:
        raise ValueError("dataset must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.for_params(params, lr=cfg.lr)
    index_input = np.issubdtype(inputs.dtype, np.integer)
    if index_input:
        real_lengths = (inputs != PAD_INDEX).sum(axis=1)
    history: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            batch_x = inputs[batch_idx]
            if index_input:
                t_eff = max(int(real_lengths[batch_idx].max(initial=0)), 1)
                batch_x = batch_x[:, :t_eff]
            batch_y = labels[batch_idx] if labels is not None else None
            loss, grads = loss_and_grads(
                spec, params, batch_x, batch_y, loss_kind, train=True, rng=rng
            )
            adam_step(params, grads, state)
            total += loss * batch_x.shape[0]
        history.append(total / n)
    return params, history
