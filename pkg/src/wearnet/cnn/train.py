"""Optimizers and the training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError
from .model import Model

log = logging.getLogger(__name__)


class SGD:
    def __init__(self, params, lr: float = 1e-2, momentum: float = 0.9):
        self.lr = lr
        self.momentum = momentum
        self.velocity = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        for p, g, v in zip(params, grads, self.velocity):
            v *= self.momentum
            v -= self.lr * g
            p += v


class Adam:
    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 30
    schedule: str = "constant"

    def lr_at(self, step: int, total: int) -> float:
        """Learning rate for ``step``; ``cosine`` decays from ``lr`` to 0 over ``total`` steps."""
        if self.schedule == "constant":
            return self.lr
        if self.schedule == "cosine":
            return 0.5 * self.lr * (1.0 + np.cos(np.pi * step / max(total, 1)))
        raise ValueError(f"unknown schedule {self.schedule!r}")

    def make_optimizer(self, params):
        if self.optimizer == "adam":
            return Adam(params, self.lr)
        if self.optimizer == "sgd":
            return SGD(params, self.lr, self.momentum)
        raise ValueError(f"unknown optimizer {self.optimizer!r}")


def prepare_batch(pixels) -> np.ndarray:
    """uint8 images (N, M, M) -> float64 (N, 1, M, M) scaled to [0, 1]."""
    x = np.asarray(pixels, dtype=np.float64) / 255.0
    return x[:, None, :, :] if x.ndim == 3 else x


def train_step(model: Model, x, labels, optimizer, step: int = 0) -> float:
    """One forward/backward pass and one optimizer update; returns the batch loss."""
    loss, grads = model.loss_and_grads(x, labels)
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss at step {step}", step=step)
    optimizer.step(model.params, grads)
    return loss


def fit(model: Model, pixels, labels, cfg: TrainConfig, seed: int, on_epoch=None) -> list[float]:
    """Minibatch training with a seeded shuffle each epoch; returns the per-step losses."""
    rng = np.random.default_rng(seed)
    opt = cfg.make_optimizer(model.params)
    labels = np.asarray(labels)
    losses = []
    step = 0
    total = cfg.epochs * -(-len(labels) // cfg.batch_size)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(labels))
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            opt.lr = cfg.lr_at(step, total)
            losses.append(train_step(model, prepare_batch(pixels[idx]), labels[idx], opt, step))
            step += 1
        log.debug("epoch %d loss %.5f", epoch, losses[-1] if losses else float("nan"))
        if on_epoch is not None:
            on_epoch(epoch, losses)
    return losses


def predict(model: Model, pixels, batch_size: int = 256) -> np.ndarray:
    out = [model.predict(prepare_batch(pixels[i:i + batch_size]), batch_size)
           for i in range(0, len(pixels), batch_size)]
    return np.concatenate(out) if out else np.empty(0, dtype=np.intp)
