from __future__ import annotations

import math

import numpy as np

from . import tape
from .config import ModelConfig
from .mlp import ContractError, DivergedError
from .params import ParamSet


def _tape_forward(vars_: list[tape.Var], config: ModelConfig, x: tape.Var) -> tape.Var:
    n = len(vars_) // 2
    h = x
    for k in range(n):
        W, b = vars_[2 * k], vars_[2 * k + 1]
        z = h @ W.T + b
        if k == n - 1:
            h = z
        elif config.activation == "sine":
            h = tape.sin(z * config.omega)
        else:
            h = tape.relu(z)
    return h


def _tape_mse(out: tape.Var, targets: np.ndarray) -> tape.Var:
    d = out - targets
    return tape.total(d * d) * (1.0 / out.shape[0])


def meta_grad(theta0: ParamSet, alphas: list[ParamSet], config: ModelConfig,
              inputs: np.ndarray, targets: np.ndarray, k: int | None = None):
    """Outer loss after ``k`` inner SGD steps and its exact derivatives.

    The inner loop is ``phi_{j+1} = phi_j - alpha_j * grad MSE(phi_j)`` starting
    from ``theta0``. Returns ``(outer_loss, d_theta0, d_alphas)`` where the
    derivatives differentiate through every inner step (second order).
    """
    k = len(alphas) if k is None else k
    if k < 0 or len(alphas) < k:
        raise ContractError(f"need {k} learning-rate sets, got {len(alphas)}")
    for a in alphas[:k]:
        a.check_compatible(theta0)
    x = tape.const(inputs)
    theta_vars = [tape.Var(t) for t in theta0.tensors()]
    alpha_vars = [[tape.Var(t) for t in a.tensors()] for a in alphas[:k]]
    phi = theta_vars
    for j in range(k):
        inner = _tape_mse(_tape_forward(phi, config, x), targets)
        if not math.isfinite(float(inner.value)):
            raise DivergedError("non-finite inner-loop loss", step=j)
        g = tape.grad(inner, phi)
        phi = [p - a * gp for p, a, gp in zip(phi, alpha_vars[j], g)]
    outer = _tape_mse(_tape_forward(phi, config, x), targets)
    loss = float(outer.value)
    if not math.isfinite(loss):
        raise DivergedError("non-finite outer loss", step=k)
    flat_alpha = [v for step in alpha_vars for v in step]
    grads = tape.grad(outer, theta_vars + flat_alpha)
    n = len(theta_vars)
    d_theta = ParamSet.from_tensors([g.value for g in grads[:n]], role="init")
    d_alphas = [
        ParamSet.from_tensors([g.value for g in grads[n + j * n:n + (j + 1) * n]], role="full")
        for j in range(k)
    ]
    return loss, d_theta, d_alphas
