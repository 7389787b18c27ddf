"""Single-instance overfitting (encoding) and rate/distortion metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .encoding import encode, image_to_targets, make_grid
from .nn import AdamState, DivergedError, ModelConfig, ParamSet, adam_update, loss_and_grad

log = logging.getLogger(__name__)

LR_FLOOR = 1e-8


@dataclass
class OverfitConfig:
    epochs: int = 25000
    lr: float = 5e-4
    lam: float = 1e-5
    plateau_patience: int = 500
    plateau_factor: float = 0.5
    early_stop: int = 5000
    warmup_epochs: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.lr < 0 or self.lam < 0:
            raise ValueError("epochs, lr and lam must be non-negative")
        if self.plateau_patience < 1 or self.early_stop < 1:
            raise ValueError("patience values must be positive")
        if not 0 < self.plateau_factor < 1:
            raise ValueError("plateau_factor must be in (0, 1)")
        if not 0 <= self.warmup_epochs <= self.epochs:
            raise ValueError("warmup_epochs must lie in [0, epochs]")


@dataclass
class PlateauSchedule:
    """Halve the rate after ``patience`` epochs without a strictly lower loss."""

    lr: float
    patience: int
    factor: float
    floor: float = LR_FLOOR
    best: float = math.inf
    bad: int = 0
    drops: int = 0

    def step(self, loss: float) -> float:
        if loss < self.best:
            self.best, self.bad = loss, 0
            return self.lr
        self.bad += 1
        if self.bad >= self.patience:
            self.bad = 0
            new = self.lr * self.factor
            if new >= self.floor:
                self.lr = new
                self.drops += 1
        return self.lr


@dataclass
class FitResult:
    params: ParamSet
    trace: list[float] = field(default_factory=list)
    mse_trace: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_loss: float = math.inf

    @property
    def epochs_run(self) -> int:
        return len(self.trace)


def fit(params: ParamSet, config: ModelConfig, inputs: np.ndarray, targets: np.ndarray,
        ocfg: OverfitConfig, ref: ParamSet | None = None,
        callback: Callable[[int, ParamSet, float], None] | None = None) -> FitResult:
    """Full-batch Adam with plateau schedule, early stop and best checkpoint.

    Epoch ``e`` evaluates the loss at the current parameters, records it, then
    takes one Adam step. Ties keep the earlier checkpoint.
    """
    state = AdamState.fresh(params)
    sched = PlateauSchedule(ocfg.lr, ocfg.plateau_patience, ocfg.plateau_factor)
    best = FitResult(params)
    since_best = 0
    tensors = params.tensors()
    for epoch in range(ocfg.epochs):
        current = ParamSet.from_tensors(tensors, params.role)
        try:
            loss, grads = loss_and_grad(current, config, inputs, targets, ocfg.lam, ref)
        except DivergedError as exc:
            raise DivergedError("overfitting diverged", step=epoch) from exc
        best.trace.append(loss)
        reg = ocfg.lam * (current.l1() if ref is None else (current - ref).l1()) if ocfg.lam else 0.0
        best.mse_trace.append(loss - reg)
        if callback is not None:
            callback(epoch, current, loss)
        if loss < best.best_loss:
            best.params, best.best_loss, best.best_epoch = current, loss, epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= ocfg.early_stop:
                log.info("early stop at epoch %d (best %d)", epoch, best.best_epoch)
                break
        if epoch < ocfg.warmup_epochs:
            lr = ocfg.lr * (epoch + 1) / ocfg.warmup_epochs
        else:
            lr = sched.step(loss)
        tensors = adam_update(state, tensors, grads.tensors(), lr)
    return best


def overfit(image: np.ndarray, config: ModelConfig, init: ParamSet, ocfg: OverfitConfig,
            ref: ParamSet | None = None, callback=None) -> FitResult:
    """Overfit ``config``'s network to an ``(H, W, C)`` image in [0, 1]."""
    H, W = image.shape[:2]
    inputs = encode(make_grid(W, H).coords, config)
    targets = image_to_targets(np.asarray(image, dtype=np.float64))
    return fit(init, config, inputs, targets, ocfg, ref, callback)


def psnr(mse: float) -> float:
    """PSNR in dB for signals in [0, 1]; ``inf`` when ``mse == 0``."""
    if mse < 0:
        raise ValueError("mse must be non-negative")
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def bitrate(total_bits: int, W: int, H: int) -> float:
    if W * H <= 0:
        raise ValueError("pixel count must be positive")
    return total_bits / (W * H)


def image_mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared error over every pixel and channel (the PSNR convention)."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.mean(d * d))
