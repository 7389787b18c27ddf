from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

ROLES = ("full", "delta", "init")


@dataclass(frozen=True)
class ParamSet:
    """Per-layer ``(W, b)`` pairs, input layer first.

    ``W`` has shape ``(fan_out, fan_in)`` and ``b`` shape ``(fan_out,)``. The
    flat tensor order used everywhere else (quantization, bitstream, meta
    learning rates) is ``W0, b0, W1, b1, ...``.
    """

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    role: str = field(default="full")

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown ParamSet role {self.role!r}")
        layers = tuple((np.asarray(W), np.asarray(b)) for W, b in self.layers)
        for k, (W, b) in enumerate(layers):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValueError(f"layer {k}: bad shapes W{W.shape} b{b.shape}")
            if k and W.shape[1] != layers[k - 1][0].shape[0]:
                raise ValueError(f"layer {k}: fan_in {W.shape[1]} does not chain")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_tensors(cls, tensors: Iterable[np.ndarray], role: str = "full") -> "ParamSet":
        t = list(tensors)
        if len(t) % 2:
            raise ValueError("tensor list must alternate W, b")
        return cls(tuple(zip(t[0::2], t[1::2])), role)

    @classmethod
    def zeros_like(cls, other: "ParamSet", role: str | None = None) -> "ParamSet":
        return other.map(np.zeros_like, role=role)

    def tensors(self) -> list[np.ndarray]:
        return [t for pair in self.layers for t in pair]

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        return [t.shape for t in self.tensors()]

    @property
    def dtype(self):
        return self.layers[0][0].dtype

    def map(self, fn: Callable[[np.ndarray], np.ndarray], role: str | None = None) -> "ParamSet":
        return ParamSet.from_tensors([fn(t) for t in self.tensors()], role or self.role)

    def zip_map(self, other: "ParamSet", fn, role: str | None = None) -> "ParamSet":
        self.check_compatible(other)
        return ParamSet.from_tensors(
            [fn(a, b) for a, b in zip(self.tensors(), other.tensors())], role or self.role
        )

    def check_compatible(self, other: "ParamSet") -> None:
        if self.shapes != other.shapes:
            raise ValueError(f"ParamSet shape mismatch: {self.shapes} vs {other.shapes}")

    def __add__(self, other: "ParamSet") -> "ParamSet":
        return self.zip_map(other, np.add, role="full")

    def __sub__(self, other: "ParamSet") -> "ParamSet":
        return self.zip_map(other, np.subtract, role="delta")

    def astype(self, dtype) -> "ParamSet":
        return self.map(lambda t: t.astype(dtype))

    def copy(self) -> "ParamSet":
        return self.map(np.copy)

    def flat(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors()])

    def unflatten(self, vec: np.ndarray, role: str | None = None) -> "ParamSet":
        out, pos = [], 0
        for t in self.tensors():
            out.append(np.asarray(vec[pos:pos + t.size]).reshape(t.shape))
            pos += t.size
        if pos != len(vec):
            raise ValueError("vector length does not match ParamSet size")
        return ParamSet.from_tensors(out, role or self.role)

    @property
    def size(self) -> int:
        return sum(t.size for t in self.tensors())

    def l1(self) -> float:
        return float(sum(np.abs(t).sum() for t in self.tensors()))

    def max_abs(self) -> float:
        return float(max(np.abs(t).max() for t in self.tensors()))

    def equals(self, other: "ParamSet") -> bool:
        """Bit-exact equality (shapes, dtypes and values)."""
        if self.shapes != other.shapes:
            return False
        return all(
            a.dtype == b.dtype and a.tobytes() == b.tobytes()
            for a, b in zip(self.tensors(), other.tensors())
        )
