"""Meta-learned initializations.

:func:`train_init` learns an initialization ``theta0`` and per-parameter,
per-step inner learning rates ``alpha`` by backpropagating through ``k``
unrolled SGD steps on one image at a time. :func:`overfit_meta` runs those
``k`` steps on a new image and continues with the regular Adam overfit, with
the L1 penalty applied to the distance from ``theta0``.

``.inri`` files (little-endian)::

    "INRI" magic, u8 version, config (as in .inrc), u16 k,
    16-byte content hash, u16 len + utf-8 dataset id, u64 training steps,
    float64 tensors: theta0 (W0, b0, ...) then alpha step-major.

The content hash is BLAKE2b-128 over the config, k and tensor bytes; it is
what delta-mode containers reference.
"""

from __future__ import annotations

import hashlib
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng as _rng
from .bitstream.container import pack_config, unpack_config
from .bitstream.rangecoder import CodecError
from .encoding import encode, image_to_targets, make_grid
from .nn import (AdamState, DivergedError, ModelConfig, ParamSet, adam_update, init_siren,
                 loss_and_grad, meta_grad, mse)
from .nn.mlp import forward
from .training import FitResult, OverfitConfig, PlateauSchedule, fit

log = logging.getLogger(__name__)

MAGIC = b"INRI"
VERSION = 1


@dataclass
class MetaTrainConfig:
    outer_lr: float = 5e-5
    alpha_init: float = 1e-5
    k: int = 3
    steps_per_val: int = 500
    val_size: int = 100
    lr_patience: int = 10
    lr_factor: float = 0.5
    epochs: int = 30
    max_steps: int | None = None

    def __post_init__(self):
        if self.k < 1 or self.steps_per_val < 1 or self.val_size < 1 or self.epochs < 1:
            raise ValueError("k, steps_per_val, val_size and epochs must be positive")
        if not self.outer_lr > 0 or self.lr_patience < 1 or not 0 < self.lr_factor < 1:
            raise ValueError("invalid outer learning-rate schedule")


@dataclass
class MetaInit:
    theta0: ParamSet
    alphas: list[ParamSet]
    config: ModelConfig
    dataset_id: str = ""
    steps: int = 0
    val_loss: float = math.nan
    val_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.alphas:
            raise ValueError("a meta initialization needs k >= 1 learning-rate sets")
        for a in self.alphas:
            a.check_compatible(self.theta0)

    @property
    def k(self) -> int:
        return len(self.alphas)

    def _tensor_bytes(self) -> bytes:
        parts = [t.astype("<f8").tobytes() for t in self.theta0.tensors()]
        for a in self.alphas:
            parts += [t.astype("<f8").tobytes() for t in a.tensors()]
        return b"".join(parts)

    @property
    def content_hash(self) -> bytes:
        h = hashlib.blake2b(digest_size=16)
        h.update(pack_config(self.config))
        h.update(struct.pack("<H", self.k))
        h.update(self._tensor_bytes())
        return h.digest()

    def to_bytes(self) -> bytes:
        ds = self.dataset_id.encode("utf-8")
        out = bytearray(MAGIC)
        out += struct.pack("<B", VERSION)
        out += pack_config(self.config)
        out += struct.pack("<H", self.k)
        out += self.content_hash
        out += struct.pack("<H", len(ds)) + ds
        out += struct.pack("<Q", self.steps)
        out += self._tensor_bytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "MetaInit":
        if data[:4] != MAGIC:
            raise CodecError("not an INRI initialization file")
        if data[4] != VERSION:
            raise CodecError(f"unsupported initialization version {data[4]}")
        config, pos = unpack_config(data, 5)
        (k,) = struct.unpack_from("<H", data, pos)
        stored_hash = data[pos + 2:pos + 18]
        pos += 18
        (n,) = struct.unpack_from("<H", data, pos)
        dataset_id = data[pos + 2:pos + 2 + n].decode("utf-8")
        pos += 2 + n
        (steps,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        shapes = []
        for out_f, in_f in config.layer_sizes:
            shapes += [(out_f, in_f), (out_f,)]
        tensors = []
        for _ in range(k + 1):
            for s in shapes:
                size = int(np.prod(s))
                if pos + 8 * size > len(data):
                    raise CodecError("truncated initialization file")
                tensors.append(np.frombuffer(data, "<f8", size, pos).reshape(s).astype(np.float64))
                pos += 8 * size
        if pos != len(data):
            raise CodecError("trailing bytes in initialization file")
        m = len(shapes)
        minit = cls(ParamSet.from_tensors(tensors[:m], "init"),
                    [ParamSet.from_tensors(tensors[m * (j + 1):m * (j + 2)]) for j in range(k)],
                    config, dataset_id, steps)
        if minit.content_hash != stored_hash:
            raise CodecError("initialization content hash mismatch")
        return minit

    def save(self, path) -> Path:
        path = Path(path)
        path.write_bytes(self.to_bytes())
        return path

    @classmethod
    def load(cls, path) -> "MetaInit":
        return cls.from_bytes(Path(path).read_bytes())


class _GridCache:
    def __init__(self, config: ModelConfig):
        self.config = config
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def __call__(self, image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        H, W = image.shape[:2]
        if (W, H) not in self._cache:
            self._cache[(W, H)] = encode(make_grid(W, H).coords, self.config)
        return self._cache[(W, H)], image_to_targets(np.asarray(image, dtype=np.float64))


def inner_loop(theta0: ParamSet, alphas: Sequence[ParamSet], config: ModelConfig,
               inputs: np.ndarray, targets: np.ndarray):
    """Inner SGD steps without a second-order graph.

    Returns ``(phi_k, losses, phis)`` with the MSE at and the parameters of
    ``phi_0 .. phi_{k-1}``.
    """
    phi, losses, phis = theta0, [], []
    for a in alphas:
        loss, g = loss_and_grad(phi, config, inputs, targets)
        losses.append(loss)
        phis.append(phi)
        phi = ParamSet.from_tensors(
            [p - at * gt for p, at, gt in zip(phi.tensors(), a.tensors(), g.tensors())], "full")
    return phi, losses, phis


def validation_loss(theta0, alphas, config, images, grids: _GridCache) -> float:
    total = 0.0
    for img in images:
        x, t = grids(img)
        phi = inner_loop(theta0, alphas, config, x, t)[0]
        total += mse(forward(phi, config, x), t)
    return total / len(images)


def train_init(dataset: Sequence[np.ndarray], mcfg: MetaTrainConfig, config: ModelConfig,
               seed: int = 0, val_images: Sequence[np.ndarray] | None = None,
               dataset_id: str = "") -> MetaInit:
    """Learn ``theta0`` and ``alpha`` with an Adam outer loop (batch size 1).

    Validation runs every ``steps_per_val`` outer steps (and after the last
    one) on a fixed subset: ``val_images`` if given, otherwise ``val_size``
    images drawn once from ``dataset``. The initialization with the lowest
    validation loss is returned.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("meta-training dataset is empty")
    if val_images is None:
        g = _rng.generator(seed, _rng.VALIDATION)
        idx = np.sort(g.choice(n, min(mcfg.val_size, n), replace=False))
        val_images = [dataset[i] for i in idx]
    else:
        val_images = list(val_images)[:mcfg.val_size]
    grids = _GridCache(config)

    theta = init_siren(config, seed).tensors()
    alphas = [[np.full_like(t, mcfg.alpha_init) for t in theta] for _ in range(mcfg.k)]
    n_theta = len(theta)
    state = AdamState.fresh(theta + [a for step in alphas for a in step])
    sched = PlateauSchedule(mcfg.outer_lr, mcfg.lr_patience, mcfg.lr_factor)
    lr = mcfg.outer_lr

    def snapshot():
        return (ParamSet.from_tensors(theta, "init"),
                [ParamSet.from_tensors(a) for a in alphas])

    best = None
    best_val = math.inf
    history: list[float] = []
    shuffle = _rng.generator(seed, _rng.SHUFFLE)
    total = mcfg.epochs * n if mcfg.max_steps is None else min(mcfg.max_steps, mcfg.epochs * n)
    step = 0
    while step < total:
        for i in shuffle.permutation(n):
            if step >= total:
                break
            x, t = grids(dataset[i])
            th, al = snapshot()
            try:
                loss, d_theta, d_alpha = meta_grad(th, al, config, x, t, mcfg.k)
            except DivergedError as exc:
                raise DivergedError("meta-training diverged", step=step) from exc
            flat = theta + [a for s in alphas for a in s]
            grads = d_theta.tensors() + [g for d in d_alpha for g in d.tensors()]
            flat = adam_update(state, flat, grads, lr)
            theta = flat[:n_theta]
            alphas = [flat[n_theta + j * n_theta:n_theta + (j + 1) * n_theta]
                      for j in range(mcfg.k)]
            step += 1
            if step % mcfg.steps_per_val == 0 or step == total:
                th, al = snapshot()
                val = validation_loss(th, al, config, val_images, grids)
                history.append(val)
                log.info("meta step %d: train %.4g val %.4g lr %.3g", step, loss, val, lr)
                if val < best_val:
                    best_val, best = val, (th, al, step)
                lr = sched.step(val)
    th, al, at = best
    return MetaInit(th, al, config, dataset_id, at, best_val, history)


@dataclass
class MetaFitResult:
    params: ParamSet
    delta: ParamSet
    fit: FitResult
    inner_losses: list[float]
    inner_mse: list[float]

    @property
    def trace(self) -> list[float]:
        """Loss after 0, 1, ... updates, counting each inner step as an epoch."""
        return self.inner_losses + self.fit.trace

    @property
    def mse_trace(self) -> list[float]:
        return self.inner_mse + self.fit.mse_trace


def overfit_meta(image: np.ndarray, minit: MetaInit, ocfg: OverfitConfig | None = None,
                 callback=None) -> MetaFitResult:
    """Inner steps with the stored rates, then Adam with warmup and delta-L1."""
    if ocfg is None:
        ocfg = OverfitConfig(warmup_epochs=100)
    config = minit.config
    H, W = image.shape[:2]
    x = encode(make_grid(W, H).coords, config)
    t = image_to_targets(np.asarray(image, dtype=np.float64))
    theta0 = minit.theta0
    phi, inner_mse, phis = inner_loop(theta0, minit.alphas, config, x, t)
    inner = [m + ocfg.lam * (p - theta0).l1() for m, p in zip(inner_mse, phis)]
    res = fit(phi, config, x, t, ocfg, ref=theta0, callback=callback)
    delta = res.params - theta0
    # theta* is recomputed from the delta so theta0 + delta == theta* holds exactly
    return MetaFitResult(theta0 + delta, delta, res, inner, inner_mse)
