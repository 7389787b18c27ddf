"""Signed-distance-field compression: overfit, quantize, code, reconstruct."""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .. import rng as _rng
from ..bitstream import CodecContainer, parse_container, serialize_container
from ..encoding import encode
from ..nn import AdamState, DivergedError, ModelConfig, ParamSet, adam_update, init_siren, loss_and_grad, mse
from ..nn.mlp import forward
from ..quant import adaround_network, qat, quantize_params
from ..training import FitResult, PlateauSchedule
from .mesh import Mesh, normalize
from .sampling import SampledSDF, sample_sdf
from .surface import reconstruct

log = logging.getLogger(__name__)


def sdf_model_config(width: int = 32, hidden_layers: int = 3, n_freqs: int = 16,
                     sigma: float = 1.4, **kw) -> ModelConfig:
    return ModelConfig(in_dim=3, out_dim=1, hidden_layers=hidden_layers, width=width,
                       n_freqs=n_freqs, sigma=sigma, **kw)


@dataclass
class SDFHyper:
    n_samples: int = 100_000
    epochs: int = 500
    lr: float = 5e-5
    batch: int = 10_000
    plateau_patience: int = 500
    plateau_factor: float = 0.5
    bits: int = 8
    adaround_iters: int = 2000
    adaround_reg: float = 1e-4
    qat_epochs: int = 50
    qat_lr: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch < 1 or self.n_samples < 1:
            raise ValueError("epochs, batch and n_samples must be valid counts")


def overfit_sdf(samples: SampledSDF, config: ModelConfig, hyper: SDFHyper | None = None,
                init: ParamSet | None = None) -> FitResult:
    """Minibatch Adam on (point, distance) pairs, no L1 term.

    One epoch is one shuffled pass over all samples. ``trace[e]`` is the
    full-sample MSE before epoch ``e`` (the last entry is after the final
    epoch); the parameters with the lowest such value are returned.
    """
    hyper = hyper or SDFHyper()
    if config.in_dim != 3 or config.out_dim != 1:
        raise ValueError("SDF networks map 3D points to one distance")
    x = encode(samples.points, config)
    t = samples.distances[:, None]
    params = init if init is not None else init_siren(config, hyper.seed)
    tensors = params.tensors()
    state = AdamState.fresh(params)
    sched = PlateauSchedule(hyper.lr, hyper.plateau_patience, hyper.plateau_factor)
    shuffle = _rng.generator(hyper.seed, _rng.SHUFFLE)
    best = FitResult(params)
    lr = hyper.lr
    n = len(samples)
    for epoch in range(hyper.epochs + 1):
        current = ParamSet.from_tensors(tensors)
        loss = mse(forward(current, config, x), t)
        if not math.isfinite(loss):
            raise DivergedError("SDF overfitting diverged", step=epoch)
        best.trace.append(loss)
        best.mse_trace.append(loss)
        if loss < best.best_loss:
            best.params, best.best_loss, best.best_epoch = current, loss, epoch
        if epoch == hyper.epochs:
            break
        lr = sched.step(loss)
        order = shuffle.permutation(n)
        for s in range(0, n, hyper.batch):
            idx = order[s:s + hyper.batch]
            _, grads = loss_and_grad(ParamSet.from_tensors(tensors), config, x[idx], t[idx])
            tensors = adam_update(state, tensors, grads.tensors(), lr)
    return best


@dataclass
class SDFEncodeResult:
    data: bytes
    report: dict
    params: ParamSet
    mesh: Mesh
    samples: SampledSDF


def encode_sdf(mesh: Mesh, config: ModelConfig | None = None,
               hyper: SDFHyper | None = None) -> SDFEncodeResult:
    """Normalize, sample, overfit, quantize (nearest, AdaRound, QAT) and serialize."""
    t0 = time.perf_counter()
    config = config or sdf_model_config()
    hyper = hyper or SDFHyper()
    mesh = normalize(mesh)
    samples = sample_sdf(mesh, hyper.n_samples, hyper.seed)
    fit = overfit_sdf(samples, config, hyper)
    x = encode(samples.points, config)
    t = samples.distances[:, None]
    qp = quantize_params(fit.params, hyper.bits)
    stage = {"float": fit.best_loss, "nearest": mse(forward(qp.reconstruct(), config, x), t)}
    qp = adaround_network(fit.params, qp, config, x, iters=hyper.adaround_iters,
                          reg=hyper.adaround_reg, seed=hyper.seed)
    stage["adaround"] = mse(forward(qp.reconstruct(), config, x), t)
    qres = qat(qp, config, x, t, hyper.qat_epochs, hyper.qat_lr)
    qp = qres.qparams
    stage["adaround+qat"] = mse(forward(qp.reconstruct(), config, x), t)
    data = serialize_container(CodecContainer.from_quantized(config, qp, sdf=True))
    report = {
        "bytes": len(data),
        "sample_mse": stage,
        "epochs_run": fit.epochs_run - 1,
        "best_epoch": fit.best_epoch,
        "qat_diverged": qres.diverged,
        "sampling": {"n": hyper.n_samples, "split": [0.2, 0.4, 0.4], "sigmas": [0.01, 0.1]},
        "config": config.to_dict(),
        "hyper": dataclasses.asdict(hyper),
        "wall_time_s": time.perf_counter() - t0,
    }
    return SDFEncodeResult(data, report, qp.reconstruct(), mesh, samples)


def decode_sdf_params(data: bytes) -> tuple[ParamSet, ModelConfig]:
    c = parse_container(data)
    if not c.sdf:
        raise ValueError("container holds an image, not a signed-distance field")
    return c.quantized().reconstruct(), c.config


def decode_sdf(data: bytes, R: int = 128) -> Mesh:
    params, config = decode_sdf_params(data)
    return reconstruct(params, config, R)


def sphere_validation_mse(params: ParamSet, config: ModelConfig, radius: float = 0.5,
                          n: int = 20_000, seed: int = 1) -> float:
    """MSE against the analytic sphere SDF on uniform cube points."""
    g = _rng.generator(seed, _rng.SDF_SAMPLING)
    p = g.uniform(-1, 1, (n, 3))
    d = np.linalg.norm(p, axis=1, keepdims=True) - radius
    return mse(forward(params, config, encode(p, config)), d)
