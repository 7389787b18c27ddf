"""Quantization-aware retraining with a straight-through estimator."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..nn import (AdamState, ModelConfig, ParamSet, adam_update, backward, forward_trace)
from .grid import QuantizedParams, dequantize, quantize

log = logging.getLogger(__name__)


@dataclass
class QATResult:
    qparams: QuantizedParams
    mse_before: float
    mse_after: float
    diverged: bool = False
    best_epoch: int = 0


def _ste_mask(latent: np.ndarray, grid) -> np.ndarray:
    return (latent >= grid.min) & (latent <= grid.max)


def qat(qparams: QuantizedParams, config: ModelConfig, inputs: np.ndarray,
        targets: np.ndarray, epochs: int = 300, lr: float = 1e-6,
        base: ParamSet | None = None) -> QATResult:
    """Retrain latent weights through the quantizer; keep the best codes.

    Forward always uses ``dequantize(quantize(latent))`` on the fixed grids;
    backward treats the quantizer as identity inside the grid range and zero
    outside. In delta mode ``base`` is the frozen initialization and runs as a
    separate parallel branch of every linear layer. The loss is the plain MSE.
    """
    if qparams.mode == "delta" and base is None:
        raise ValueError("delta-mode QAT needs the frozen initialization")
    grids = qparams.grids
    latent = [dequantize(c, g) for c, g in zip(qparams.codes, grids)]
    state = AdamState.fresh(latent)
    B = inputs.shape[0]
    role = "delta" if base is not None else "full"

    def evaluate(codes):
        q = ParamSet.from_tensors([dequantize(c, g) for c, g in zip(codes, grids)], role)
        trace = forward_trace(q, config, inputs, base)
        diff = trace[0] - targets
        return float(np.sum(diff * diff) / B), q, trace, diff

    best_codes = [c.copy() for c in qparams.codes]
    best_mse = mse_before = evaluate(best_codes)[0]
    best_epoch = 0
    codes = best_codes
    for epoch in range(epochs + 1):
        mse, q, trace, diff = evaluate(codes)
        if not math.isfinite(mse):
            log.warning("QAT diverged at epoch %d; keeping pre-QAT codes", epoch)
            return QATResult(qparams, mse_before, mse_before, diverged=True)
        if mse < best_mse:
            best_mse, best_codes, best_epoch = mse, codes, epoch
        if epoch == epochs or lr == 0:
            break
        grads = backward(q, config, trace, (2.0 / B) * diff, base).tensors()
        grads = [gr * _ste_mask(lt, g) for gr, lt, g in zip(grads, latent, grids)]
        latent = adam_update(state, latent, grads, lr)
        codes = [quantize(lt, g) for lt, g in zip(latent, grids)]
    return QATResult(qparams.with_codes(best_codes), mse_before, best_mse, best_epoch=best_epoch)
