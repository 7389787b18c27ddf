"""Forward and first-order backward passes of the coordinate MLP.

Hidden layers apply ``sin(omega * (W x + b))`` (or ReLU); the output layer is
affine. Gradients are written out by hand for this fixed topology, which is
much faster than going through :mod:`inrc.nn.tape`.
"""

from __future__ import annotations

import math

import numpy as np

from .. import rng as _rng
from .config import ModelConfig
from .params import ParamSet


class ContractError(ValueError):
    """Inputs violate a shape or range contract."""


class DivergedError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


def init_bounds(config: ModelConfig) -> list[float]:
    bounds = []
    for k, (_, fan_in) in enumerate(config.layer_sizes):
        if config.activation == "relu":
            bounds.append(math.sqrt(6.0 / fan_in))
        elif k == 0:
            bounds.append(1.0 / fan_in)
        else:
            bounds.append(math.sqrt(6.0 / fan_in) / config.omega)
    return bounds


def init_siren(config: ModelConfig, seed: int) -> ParamSet:
    """SIREN initialization; weights and biases share their layer's bound."""
    g = _rng.generator(seed, _rng.INIT)
    tensors = []
    for (fan_out, fan_in), bound in zip(config.layer_sizes, init_bounds(config)):
        tensors.append(g.uniform(-bound, bound, size=(fan_out, fan_in)))
        tensors.append(g.uniform(-bound, bound, size=fan_out))
    return ParamSet.from_tensors(tensors, role="full")


def _check(params: ParamSet, config: ModelConfig, inputs: np.ndarray) -> None:
    expected = config.layer_sizes
    got = [W.shape for W, _ in params.layers]
    if got != expected:
        raise ContractError(f"params {got} do not match config layers {expected}")
    if inputs.ndim != 2 or inputs.shape[1] != config.enc_dim:
        raise ContractError(f"inputs {inputs.shape} do not have width {config.enc_dim}")


def _linear(h, W, b, base):
    if base is None:
        return h @ W.T + b
    # split form: frozen base branch plus update branch
    W0, b0 = base
    return (h @ W0.T + b0) + (h @ W.T + b)


def forward_trace(params: ParamSet, config: ModelConfig, inputs: np.ndarray,
                  base: ParamSet | None = None):
    """Forward pass keeping what the backward pass needs.

    Returns ``(output, layer_inputs, preacts)`` where ``layer_inputs[k]`` feeds
    layer ``k`` and ``preacts[k]`` is its affine output.
    """
    _check(params, config, inputs)
    if base is not None:
        base.check_compatible(params)
    n = len(params.layers)
    h = inputs
    layer_inputs, preacts = [], []
    for k, (W, b) in enumerate(params.layers):
        layer_inputs.append(h)
        z = _linear(h, W, b, None if base is None else base.layers[k])
        preacts.append(z)
        if k == n - 1:
            h = z
        elif config.activation == "sine":
            h = np.sin(config.omega * z)
        else:
            h = np.maximum(z, 0.0)
    return h, layer_inputs, preacts


def forward(params: ParamSet, config: ModelConfig, inputs: np.ndarray,
            base: ParamSet | None = None) -> np.ndarray:
    return forward_trace(params, config, inputs, base)[0]


def backward(params: ParamSet, config: ModelConfig, trace, dout: np.ndarray,
             base: ParamSet | None = None) -> ParamSet:
    _, layer_inputs, preacts = trace
    grads = [None] * (2 * len(params.layers))
    dz = dout
    for k in range(len(params.layers) - 1, -1, -1):
        W = params.layers[k][0]
        grads[2 * k] = dz.T @ layer_inputs[k]
        grads[2 * k + 1] = dz.sum(axis=0)
        if k == 0:
            break
        dh = dz @ W if base is None else dz @ base.layers[k][0] + dz @ W
        z = preacts[k - 1]
        if config.activation == "sine":
            dz = dh * (config.omega * np.cos(config.omega * z))
        else:
            dz = dh * (z > 0)
    return ParamSet.from_tensors(grads, role="full")


def mse(pred: np.ndarray, targets: np.ndarray) -> float:
    """Mean over rows of the squared error vector norm."""
    d = pred - targets
    return float(np.sum(d * d) / pred.shape[0])


def loss_and_grad(params: ParamSet, config: ModelConfig, inputs: np.ndarray,
                  targets: np.ndarray, lam: float = 0.0, ref: ParamSet | None = None,
                  base: ParamSet | None = None) -> tuple[float, ParamSet]:
    """Regularized MSE and its exact gradient.

    ``loss = mean_rows(||f(x) - t||^2) + lam * ||params - ref||_1``; ``ref``
    defaults to zero. ``base`` selects the split forward used for delta
    parameters, in which case ``params`` is the update only.
    """
    if targets.shape != (inputs.shape[0], config.out_dim):
        raise ContractError(f"targets {targets.shape} do not match batch of {inputs.shape[0]}")
    if ref is not None:
        ref.check_compatible(params)
    trace = forward_trace(params, config, inputs, base)
    out = trace[0]
    diff = out - targets
    B = inputs.shape[0]
    loss = float(np.sum(diff * diff) / B)
    grads = backward(params, config, trace, (2.0 / B) * diff, base)
    if lam:
        off = params if ref is None else params - ref
        loss += lam * off.l1()
        grads = grads.zip_map(off, lambda g, o: g + lam * np.sign(o))
    if not math.isfinite(loss):
        raise DivergedError("non-finite training loss")
    return loss, grads


def predict(params: ParamSet, config: ModelConfig, coords: np.ndarray,
            chunk: int = 65536) -> np.ndarray:
    """Encode raw coordinates and evaluate the network, chunking large grids."""
    from ..encoding import encode

    outs = [forward(params, config, encode(coords[s:s + chunk], config))
            for s in range(0, len(coords), chunk)]
    return np.concatenate(outs) if outs else np.zeros((0, config.out_dim))
