from __future__ import annotations

import numpy as np

from .. import rng as _rng
from ..nn import ModelConfig, ParamSet
from .adaround import adaround_detail
from .grid import QuantizedParams, dequantize


def _activate(z, config: ModelConfig):
    return np.sin(config.omega * z) if config.activation == "sine" else np.maximum(z, 0.0)


def adaround_network(params: ParamSet, qparams: QuantizedParams, config: ModelConfig,
                     inputs: np.ndarray, base: ParamSet | None = None, iters: int = 1000,
                     reg: float = 1e-4, max_rows: int = 4096, seed: int = 0) -> QuantizedParams:
    """AdaRound every weight matrix in forward order.

    Layer ``k`` sees the activations produced by the already-rounded layers
    before it and is asked to match the float network's pre-activation.
    Biases keep their nearest-rounded codes. ``params`` are the float values
    behind ``qparams`` (the update only, in delta mode).
    """
    X = inputs
    if len(X) > max_rows:
        g = _rng.generator(seed, _rng.ADAROUND)
        X = X[np.sort(g.choice(len(X), max_rows, replace=False))]
    x_fp = x_q = X
    codes = [c.copy() for c in qparams.codes]
    n = len(params.layers)
    for k, (W, b) in enumerate(params.layers):
        W0, b0 = base.layers[k] if base is not None else (np.zeros_like(W), np.zeros_like(b))
        target = x_fp @ (W0 + W).T + (b0 + b)
        b_eff = b0 + dequantize(codes[2 * k + 1], qparams.grids[2 * k + 1])
        res = adaround_detail(W, x_q, qparams.grids[2 * k], iters, reg,
                              target=target, base=W0, bias=b_eff)
        codes[2 * k] = res.codes
        if k < n - 1:
            z_q = x_q @ (W0 + dequantize(res.codes, qparams.grids[2 * k])).T + b_eff
            x_q = _activate(z_q, config)
            x_fp = _activate(target, config)
    return qparams.with_codes(codes)
