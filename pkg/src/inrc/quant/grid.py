from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn import ParamSet


@dataclass(frozen=True)
class QuantGrid:
    """Uniform grid ``min + c * step`` for integer codes ``c`` in ``[0, 2^bits - 1]``."""

    min: float
    step: float
    bits: int

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if not 1 <= self.bits <= 16:
            raise ValueError("bitwidth must be in [1, 16]")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def max(self) -> float:
        return self.min + (self.levels - 1) * self.step

    def storable(self, hi: float | None = None) -> "QuantGrid":
        """Snap ``min``/``step`` to float32 while still covering ``[min, hi]``.

        The container stores grids as float32; snapping before any rounding
        decision keeps encoder and decoder on exactly the same grid.
        """
        hi = self.max if hi is None else hi
        lo32 = np.float32(self.min)
        if float(lo32) > self.min:
            lo32 = np.nextafter(lo32, np.float32(-np.inf))
        step32 = np.float32(self.step)
        top = self.levels - 1
        while float(lo32) + top * float(step32) < hi or not step32 > 0:
            step32 = np.nextafter(step32, np.float32(np.inf))
        return QuantGrid(float(lo32), float(step32), self.bits)


def fit_grid(tensor: np.ndarray, bits: int) -> QuantGrid:
    t = np.asarray(tensor)
    if t.size == 0:
        raise ValueError("cannot fit a grid to an empty tensor")
    if not 2 <= bits <= 16:
        raise ValueError("bitwidth must be in [2, 16]")
    lo, hi = float(t.min()), float(t.max())
    if hi == lo:
        return QuantGrid(lo, 1.0, bits)
    return QuantGrid(lo, (hi - lo) / ((1 << bits) - 1), bits)


def fit_storable_grid(tensor: np.ndarray, bits: int) -> QuantGrid:
    g = fit_grid(tensor, bits)
    return g.storable(float(np.max(tensor)))


def quantize(x: np.ndarray, grid: QuantGrid) -> np.ndarray:
    # np.rint rounds half to even
    c = np.rint((np.asarray(x, dtype=np.float64) - grid.min) / grid.step)
    return np.clip(c, 0, grid.levels - 1).astype(np.int64)


def dequantize(codes: np.ndarray, grid: QuantGrid) -> np.ndarray:
    return grid.min + np.asarray(codes, dtype=np.float64) * grid.step


@dataclass
class QuantizedParams:
    """Integer codes and grids for every tensor of a ParamSet (``W0, b0, ...``)."""

    codes: list[np.ndarray]
    grids: list[QuantGrid]
    mode: str = "full"
    init_hash: bytes | None = field(default=None)

    def __post_init__(self):
        if self.mode not in ("full", "delta"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.codes) != len(self.grids):
            raise ValueError("one grid per tensor required")
        for c, g in zip(self.codes, self.grids):
            if c.size and (c.min() < 0 or c.max() > g.levels - 1):
                raise ValueError("codes outside grid range")

    def dequantize(self) -> ParamSet:
        role = "delta" if self.mode == "delta" else "full"
        return ParamSet.from_tensors([dequantize(c, g) for c, g in zip(self.codes, self.grids)], role)

    def reconstruct(self, init: ParamSet | None = None) -> ParamSet:
        """Parameters the decoder evaluates: the codes, plus ``init`` in delta mode."""
        q = self.dequantize()
        if self.mode == "full":
            return q
        if init is None:
            raise ValueError("delta parameters need their initialization")
        return init + q

    def with_codes(self, codes: list[np.ndarray]) -> "QuantizedParams":
        return QuantizedParams([np.asarray(c, dtype=np.int64) for c in codes], self.grids,
                               self.mode, self.init_hash)


def quantize_params(params: ParamSet, bits: int, mode: str = "full",
                    init_hash: bytes | None = None, storable: bool = True) -> QuantizedParams:
    """Per-tensor min/max grids with nearest rounding."""
    fitter = fit_storable_grid if storable else fit_grid
    grids = [fitter(t, bits) for t in params.tensors()]
    codes = [quantize(t, g) for t, g in zip(params.tensors(), grids)]
    return QuantizedParams(codes, grids, mode, init_hash)
