"""Tiny reverse-mode tape whose backward pass is itself recorded.

Only the handful of operations the MLP needs are supported. Every vector-
Jacobian product is written in terms of :class:`Var` operations, so the
result of :func:`grad` can be differentiated again; this is what lets the
meta-learning code backpropagate through unrolled inner-loop gradient steps.
"""

from __future__ import annotations

import numpy as np


class Var:
    __slots__ = ("value", "parents", "vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, _lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), neg(self))

    def __mul__(self, other):
        return mul(self, _lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return f"Var(shape={self.shape})"


def _lift(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def const(x) -> Var:
    return Var(x)


def _sum_to(g: Var, shape) -> Var:
    if g.shape == shape:
        return g
    return sum_to(g, shape)


def add(a: Var, b: Var) -> Var:
    return Var(a.value + b.value, (a, b),
               lambda g, need: (need[0] and _sum_to(g, a.shape), need[1] and _sum_to(g, b.shape)))


def neg(a: Var) -> Var:
    return Var(-a.value, (a,), lambda g, need: (neg(g),))


def mul(a: Var, b: Var) -> Var:
    return Var(a.value * b.value, (a, b),
               lambda g, need: (need[0] and _sum_to(g * b, a.shape),
                                 need[1] and _sum_to(g * a, b.shape)))


def matmul(a: Var, b: Var) -> Var:
    return Var(a.value @ b.value, (a, b), lambda g, need: (need[0] and g @ b.T, need[1] and a.T @ g))


def transpose(a: Var) -> Var:
    return Var(a.value.T, (a,), lambda g, need: (transpose(g),))


def sin(a: Var) -> Var:
    return Var(np.sin(a.value), (a,), lambda g, need: (g * cos(a),))


def cos(a: Var) -> Var:
    return Var(np.cos(a.value), (a,), lambda g, need: (neg(g * sin(a)),))


def relu(a: Var) -> Var:
    mask = (a.value > 0).astype(np.float64)
    return Var(a.value * mask, (a,), lambda g, need: (g * mask,))


def total(a: Var) -> Var:
    return Var(np.sum(a.value), (a,), lambda g, need: (broadcast_to(g, a.shape),))


def sum_to(a: Var, shape) -> Var:
    """Sum a broadcast result back down to ``shape`` (numpy broadcasting rules)."""
    value = a.value
    lead = value.ndim - len(shape)
    axes = tuple(range(lead)) + tuple(
        lead + i for i, s in enumerate(shape) if s == 1 and value.shape[lead + i] != 1)
    out = value.sum(axis=axes, keepdims=True)
    out = out.reshape(shape)
    return Var(out, (a,), lambda g, need: (broadcast_to(g, a.shape),))


def broadcast_to(a: Var, shape) -> Var:
    src = a.shape
    return Var(np.broadcast_to(a.value, shape).copy(), (a,), lambda g, need: (_sum_to(g, src),))


def _toposort(root: Var) -> list[Var]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def grad(y: Var, xs: list[Var]) -> list[Var]:
    """Gradients of scalar ``y`` w.r.t. ``xs`` as differentiable Vars.

    Branches of the graph that do not lead to any of ``xs`` are skipped.
    """
    if y.value.shape != ():
        raise ValueError("grad needs a scalar output")
    order = _toposort(y)
    targets = {id(x) for x in xs}
    needed = set()
    for node in order:
        if id(node) in targets or any(id(p) in needed for p in node.parents):
            needed.add(id(node))
    grads: dict[int, Var] = {id(y): Var(1.0)}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None or node.vjp is None:
            continue
        need = tuple(id(p) in needed for p in node.parents)
        if not any(need):
            continue
        for p, gp in zip(node.parents, node.vjp(g, need)):
            if gp is None or gp is False or id(p) not in needed:
                continue
            prev = grads.get(id(p))
            grads[id(p)] = gp if prev is None else add(prev, gp)
    return [grads.get(id(x), Var(np.zeros_like(x.value))) for x in xs]
