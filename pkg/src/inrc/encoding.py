"""Coordinate grids and input encodings.

Pixel order is fixed: the width index ``i`` is the outer loop and the height
index ``j`` the inner one, so row ``i * H + j`` of a grid holds pixel
``(i, j)``. An image stored as an ``(H, W, C)`` array maps to targets with
:func:`image_to_targets`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .nn.config import ModelConfig


class DegenerateGridError(ValueError):
    pass


@dataclass(frozen=True)
class CoordGrid:
    shape: tuple[int, ...]  # (W, H) or (W, H, D)
    coords: np.ndarray

    @property
    def n(self) -> int:
        return self.coords.shape[0]


def _axis(n: int) -> np.ndarray:
    if n < 2:
        raise DegenerateGridError(f"grid dimension {n} < 2")
    # 2i/(n-1) - 1 evaluated as written so both endpoints are exact
    return 2.0 * np.arange(n) / (n - 1) - 1.0


def make_grid(W: int, H: int) -> CoordGrid:
    x, y = _axis(W), _axis(H)
    coords = np.stack(np.meshgrid(x, y, indexing="ij"), axis=-1).reshape(-1, 2)
    return CoordGrid((W, H), coords)


def make_grid_3d(W: int, H: int | None = None, D: int | None = None) -> CoordGrid:
    H = W if H is None else H
    D = W if D is None else D
    axes = [_axis(W), _axis(H), _axis(D)]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    return CoordGrid((W, H, D), coords)


def image_to_targets(img: np.ndarray) -> np.ndarray:
    """(H, W, C) image -> (W*H, C) targets in grid order."""
    H, W = img.shape[:2]
    return np.ascontiguousarray(np.transpose(img, (1, 0, 2))).reshape(W * H, -1)


def targets_to_image(values: np.ndarray, W: int, H: int) -> np.ndarray:
    return np.ascontiguousarray(values.reshape(W, H, -1).transpose(1, 0, 2))


def positional_encode(coords: np.ndarray, L: int, sigma: float) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.float64)
    B, d = coords.shape
    freqs = (sigma ** np.arange(L)) * np.pi
    out = np.empty((B, d, 1 + 2 * L))
    out[:, :, 0] = coords
    arg = coords[:, :, None] * freqs
    out[:, :, 1::2] = np.sin(arg)
    out[:, :, 2::2] = np.cos(arg)
    return out.reshape(B, d * (1 + 2 * L))


def gaussian_frequencies(in_dim: int, L: int, sigma: float, seed: int) -> np.ndarray:
    """(L, in_dim) matrix of N(0, sigma^2) frequency rows."""
    g = _rng.generator(seed, _rng.GAUSSIAN_ENCODING)
    return sigma * _rng.box_muller(g, (L, in_dim))


def gaussian_encode(coords: np.ndarray, L: int, sigma: float, seed: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.float64)
    Bf = gaussian_frequencies(coords.shape[1], L, sigma, seed)
    arg = 2 * np.pi * coords @ Bf.T
    out = np.empty((coords.shape[0], 2 * L))
    out[:, 0::2] = np.sin(arg)
    out[:, 1::2] = np.cos(arg)
    return out


def encode(coords: np.ndarray, config: ModelConfig) -> np.ndarray:
    if coords.shape[1] != config.in_dim:
        raise ValueError(f"coords have {coords.shape[1]} columns, config expects {config.in_dim}")
    if config.encoding == "positional":
        return positional_encode(coords, config.n_freqs, config.sigma)
    if config.encoding == "gaussian":
        return gaussian_encode(coords, config.n_freqs, config.sigma, config.enc_seed)
    return np.array(coords, dtype=np.float64)
