"""Rate-distortion and training-curve figures written straight to files."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RD_COLUMNS = ("instance", "method", "width", "b", "bpp", "psnr")


@dataclass(frozen=True)
class RDPoint:
    instance: str
    method: str
    bpp: float
    psnr: float
    width: int | None = None
    b: int | None = None

    def __post_init__(self):
        if not self.bpp > 0:
            raise ValueError(f"bpp must be positive, got {self.bpp}")
        if not math.isfinite(self.psnr):
            raise ValueError("psnr must be finite")

    def row(self) -> dict:
        d = asdict(self)
        return {k: ("" if d[k] is None else d[k]) for k in RD_COLUMNS}


def write_rd_csv(path, points: Iterable[RDPoint]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=RD_COLUMNS)
        w.writeheader()
        for p in points:
            w.writerow(p.row())
    return path


def read_rd_csv(path) -> list[RDPoint]:
    """Read RD points. ``instance``, ``method``, ``bpp`` and ``psnr`` are required."""
    out = []
    with Path(path).open(newline="") as f:
        reader = csv.DictReader(f)
        missing = {"instance", "method", "bpp", "psnr"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            width = row.get("width") or None
            b = row.get("b") or None
            out.append(RDPoint(row["instance"], row["method"], float(row["bpp"]),
                               float(row["psnr"]), int(width) if width else None,
                               int(b) if b else None))
    return out


def method_curves(points: Sequence[RDPoint]) -> dict[str, list[tuple[float, float]]]:
    """Average (bpp, psnr) per method and operating point, sorted by bpp.

    Operating points are keyed by ``(width, b)`` when present, otherwise each
    point stands alone.
    """
    groups: dict[str, dict] = defaultdict(lambda: defaultdict(list))
    for i, p in enumerate(points):
        key = (p.width, p.b) if p.width is not None else ("pt", i)
        groups[p.method][key].append(p)
    curves = {}
    for method, ops in groups.items():
        pts = [(sum(q.bpp for q in v) / len(v), sum(q.psnr for q in v) / len(v))
               for v in ops.values()]
        curves[method] = sorted(pts)
    return curves


def rd_plot(points: Sequence[RDPoint], path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.6), dpi=150)
    for method, pts in sorted(method_curves(points).items()):
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", ms=4, lw=1.2, label=method)
    ax.set_xlabel("bits per pixel")
    ax.set_ylabel("PSNR (dB)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def curve_plot(curves: dict[str, Sequence[float]], path, ylabel: str = "PSNR (dB)",
               logx: bool = True) -> Path:
    """One line per named per-epoch series."""
    fig, ax = plt.subplots(figsize=(5, 3.6), dpi=150)
    for name, ys in curves.items():
        xs = range(1, len(ys) + 1)
        ax.plot(xs, ys, lw=1.2, label=name)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
