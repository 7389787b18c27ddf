"""8-bit RGB image files: binary PPM (P6) natively, PNG through Pillow if installed."""

from __future__ import annotations

import io
import re
from pathlib import Path

import numpy as np


class ImageReadError(ValueError):
    pass


_HEADER = re.compile(rb"P6\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+"
                     rb"(?:#[^\n]*\n\s*)*(\d+)\s")


def read_ppm(data: bytes) -> np.ndarray:
    m = _HEADER.match(data)
    if m is None:
        raise ImageReadError("not a binary PPM (P6) file")
    W, H, maxval = (int(g) for g in m.groups())
    if W < 1 or H < 1 or maxval != 255:
        raise ImageReadError(f"unsupported PPM: {W}x{H}, maxval {maxval} (need 8-bit)")
    body = data[m.end():m.end() + 3 * W * H]
    if len(body) != 3 * W * H:
        raise ImageReadError("truncated PPM pixel data")
    return np.frombuffer(body, np.uint8).reshape(H, W, 3).copy()


def write_ppm(img: np.ndarray) -> bytes:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    H, W = img.shape[:2]
    return f"P6\n{W} {H}\n255\n".encode() + img.reshape(H, W, 3).tobytes()


def _pil():
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ImageReadError("PNG support requires Pillow; use PPM instead") from exc
    return Image


def load_image(path) -> np.ndarray:
    """Read an image as ``uint8`` array of shape ``(H, W, 3)``."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageReadError(f"cannot read {path}: {exc}") from exc
    if data[:2] == b"P6":
        return read_ppm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        with _pil().open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    raise ImageReadError(f"{path}: unrecognised image format (expected PPM P6 or PNG)")


def save_image(path, img: np.ndarray) -> Path:
    path = Path(path)
    if path.suffix.lower() == ".png":
        _pil().fromarray(np.asarray(img, dtype=np.uint8)).save(path)
    else:
        path.write_bytes(write_ppm(img))
    return path


def to_unit(img: np.ndarray) -> np.ndarray:
    return np.asarray(img, dtype=np.float64) / 255.0


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and round to 8 bits (half-to-even)."""
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def box_resize(img: np.ndarray, factor: int) -> np.ndarray:
    """Downsample by an integer factor by averaging ``factor x factor`` blocks.

    Trailing rows/columns that do not fill a whole block are cropped.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    H, W = img.shape[:2]
    h, w = H // factor, W // factor
    if h < 1 or w < 1:
        raise ValueError(f"image {W}x{H} too small for factor {factor}")
    blocks = np.asarray(img[:h * factor, :w * factor], dtype=np.float64)
    blocks = blocks.reshape(h, factor, w, factor, -1).mean(axis=(1, 3))
    return np.rint(blocks).astype(np.uint8) if img.dtype == np.uint8 else blocks
