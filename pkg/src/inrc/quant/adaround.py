"""Adaptive rounding of one linear layer's weights.

Each weight picks ``floor`` or ``floor + 1`` on its grid. The choice is relaxed
to a rectified sigmoid ``h(V)`` and optimized with Adam to reproduce the
layer's float output, while an annealed regularizer pushes every ``h`` to 0 or
1. Constants follow the original AdaRound recipe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn.adam import AdamState, adam_update
from .grid import QuantGrid, dequantize, quantize

ZETA = 1.1
GAMMA = -0.1


@dataclass
class AdaRoundResult:
    codes: np.ndarray
    soft: np.ndarray  # final relaxed h(V)
    mse: float  # layer output MSE of ``codes``
    nearest_mse: float
    used_nearest: bool


def rectified_sigmoid(V: np.ndarray) -> np.ndarray:
    return np.clip(1.0 / (1.0 + np.exp(-V)) * (ZETA - GAMMA) + GAMMA, 0.0, 1.0)


def _init_v(rest: np.ndarray) -> np.ndarray:
    s = np.clip((rest - GAMMA) / (ZETA - GAMMA), 1e-6, 1 - 1e-6)
    return np.log(s / (1 - s))


def _layer_mse(weights_eff, inputs, target, bias):
    out = inputs @ weights_eff.T
    if bias is not None:
        out = out + bias
    d = out - target
    return float(np.sum(d * d) / d.shape[0])


def adaround_detail(weights: np.ndarray, inputs: np.ndarray, grid: QuantGrid,
                    iters: int = 1000, reg: float = 1e-4, *, target: np.ndarray | None = None,
                    base: np.ndarray | None = None, bias: np.ndarray | None = None,
                    lr: float = 1e-2, beta: tuple[float, float] = (20.0, 2.0),
                    warmup: float = 0.2) -> AdaRoundResult:
    """Optimize rounding of ``weights`` (``out x in``) against ``inputs`` (``B x in``).

    The layer evaluated is ``inputs @ (base + q(weights)).T + bias``. ``target``
    defaults to the unquantized ``inputs @ (base + weights).T + bias``.
    """
    W = np.asarray(weights, dtype=np.float64)
    X = np.asarray(inputs, dtype=np.float64)
    W0 = np.zeros_like(W) if base is None else np.asarray(base, dtype=np.float64)
    if target is None:
        target = X @ (W0 + W).T + (0.0 if bias is None else bias)
    top = grid.levels - 1

    nearest = quantize(W, grid)
    nearest_mse = _layer_mse(W0 + dequantize(nearest, grid), X, target, bias)
    scaled = (W - grid.min) / grid.step
    floor = np.clip(np.floor(scaled), 0, top)
    rest = np.clip(scaled - floor, 0.0, 1.0)
    if iters <= 0:
        return AdaRoundResult(nearest, rest, nearest_mse, nearest_mse, True)

    V = _init_v(rest)
    state = AdamState.fresh([V])
    n_rows = X.shape[0]
    warm = int(warmup * iters)
    b_start, b_end = beta
    for it in range(iters):
        sig = 1.0 / (1.0 + np.exp(-V))
        raw = sig * (ZETA - GAMMA) + GAMMA
        h = np.clip(raw, 0.0, 1.0)
        W_soft = W0 + grid.min + (floor + h) * grid.step
        out = X @ W_soft.T
        if bias is not None:
            out = out + bias
        d_out = (2.0 / n_rows) * (out - target)
        d_h = (d_out.T @ X) * grid.step
        if it >= warm and reg:
            t = (it - warm) / max(iters - warm, 1)
            b = b_end + (b_start - b_end) * max(0.0, 1.0 - t)
            u = 2 * h - 1
            d_h = d_h - reg * b * 2 * np.abs(u) ** (b - 1) * np.sign(u)
        inside = (raw > 0) & (raw < 1)
        d_V = d_h * (ZETA - GAMMA) * sig * (1 - sig) * inside
        (V,) = adam_update(state, [V], [d_V], lr)

    soft = rectified_sigmoid(V)
    codes = np.clip(floor + (soft >= 0.5), 0, top).astype(np.int64)
    mse = _layer_mse(W0 + dequantize(codes, grid), X, target, bias)
    if mse <= nearest_mse:
        return AdaRoundResult(codes, soft, mse, nearest_mse, False)
    return AdaRoundResult(nearest, soft, nearest_mse, nearest_mse, True)


def adaround(weights, inputs, grid, iters=1000, reg=1e-4, **kw) -> np.ndarray:
    """Rounding codes for ``weights``; never worse than nearest on ``inputs``."""
    return adaround_detail(weights, inputs, grid, iters, reg, **kw).codes
