from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ParamSet


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: ParamSet | list[np.ndarray], **kw) -> "AdamState":
        tensors = params.tensors() if isinstance(params, ParamSet) else params
        return cls([np.zeros_like(t) for t in tensors], [np.zeros_like(t) for t in tensors], **kw)


def adam_update(state: AdamState, tensors: list[np.ndarray], grads: list[np.ndarray],
                lr: float) -> list[np.ndarray]:
    """One bias-corrected Adam step on a flat tensor list; mutates ``state``."""
    if len(tensors) != len(state.m):
        raise ValueError("Adam state does not match parameter count")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    out = []
    for i, (p, g) in enumerate(zip(tensors, grads)):
        if p.shape != g.shape or p.shape != state.m[i].shape:
            raise ValueError(f"shape mismatch at tensor {i}")
        m = state.m[i] = b1 * state.m[i] + (1 - b1) * g
        v = state.v[i] = b2 * state.v[i] + (1 - b2) * (g * g)
        out.append(p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
    return out


def adam_step(state: AdamState, params: ParamSet, grads: ParamSet,
              lr: float) -> tuple[ParamSet, AdamState]:
    params.check_compatible(grads)
    new = adam_update(state, params.tensors(), grads.tensors(), lr)
    return ParamSet.from_tensors(new, params.role), state
