"""Image encode/decode: overfit, quantize, AdaRound, QAT, entropy-code.

Everything here is deterministic for fixed inputs and seeds; the reported
PSNR is computed from the bytes that were written, via :func:`decode_image`.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from .bitstream import CodecContainer, MissingInitializationError, parse_container, serialize_container
from .encoding import encode, image_to_targets, make_grid, targets_to_image
from .imageio import to_uint8, to_unit
from .meta import MetaInit, overfit_meta
from .nn import ModelConfig, ParamSet, init_siren, predict
from .quant import QuantizedParams, adaround_network, qat, quantize_params
from .training import OverfitConfig, bitrate, image_mse, overfit, psnr

QUANTIZERS = ("nearest", "adaround", "adaround+qat")


@dataclass
class EncodeConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    overfit: OverfitConfig = field(default_factory=OverfitConfig)
    bits: int | None = None  # 8 basic, 7 meta
    quantizer: str = "adaround+qat"
    adaround_iters: int = 1000
    adaround_reg: float = 1e-4
    qat_epochs: int = 300
    qat_lr: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.quantizer not in QUANTIZERS:
            raise ValueError(f"quantizer must be one of {QUANTIZERS}")

    def resolved_bits(self, meta: bool) -> int:
        if self.bits is not None:
            return self.bits
        return 7 if meta else 8

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["model"] = self.model.to_dict()
        return d


@dataclass
class EncodeResult:
    data: bytes
    report: dict
    params: ParamSet
    qparams: QuantizedParams
    stage_mse: dict[str, float]
    trace: list[float]
    mse_trace: list[float]


def render(params: ParamSet, config: ModelConfig, W: int, H: int) -> np.ndarray:
    """Evaluate on the ``W x H`` grid and return an 8-bit ``(H, W, C)`` image."""
    values = predict(params, config, make_grid(W, H).coords)
    return to_uint8(targets_to_image(values, W, H))


def container_params(c: CodecContainer, init: MetaInit | None = None) -> ParamSet:
    q = c.quantized()
    if not c.delta:
        return q.reconstruct()
    if init is None or init.content_hash != c.init_hash:
        raise MissingInitializationError(
            f"container needs initialization {c.init_hash.hex()}")
    if init.config != c.config:
        raise MissingInitializationError("initialization config differs from the container's")
    return q.reconstruct(init.theta0)


def decode_image(data: bytes, init=None, width: int | None = None,
                 height: int | None = None) -> np.ndarray:
    """Decode a container to ``uint8``. ``init`` may be a MetaInit or a registry.

    ``width``/``height`` override the stored resolution.
    """
    lookup = init if (init is not None and not isinstance(init, MetaInit)) else None
    c = parse_container(data, known_hashes=lookup)
    if c.sdf:
        raise ValueError("container holds a signed-distance field; use the SDF decoder")
    if c.delta and lookup is not None:
        init = lookup.get(c.init_hash)
    params = container_params(c, init)
    return render(params, c.config, width or c.width, height or c.height)


def decoded_mse(original_u8: np.ndarray, params: ParamSet, config: ModelConfig) -> float:
    H, W = original_u8.shape[:2]
    return image_mse(to_unit(render(params, config, W, H)), to_unit(original_u8))


def encode_image(image: np.ndarray, ecfg: EncodeConfig, minit: MetaInit | None = None,
                 callback=None) -> EncodeResult:
    """Encode an 8-bit ``(H, W, 3)`` image into container bytes plus a report."""
    t0 = time.perf_counter()
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise TypeError("encode_image expects an 8-bit image")
    H, W = image.shape[:2]
    target = to_unit(image)
    meta = minit is not None
    if meta:
        config, base = minit.config, minit.theta0
        ocfg = ecfg.overfit
        res = overfit_meta(target, minit, ocfg, callback)
        floats, mode, ihash = res.delta, "delta", minit.content_hash
        fit_res = res.fit
        trace, mse_trace = res.trace, res.mse_trace
    else:
        config, base = ecfg.model, None
        res = overfit(target, config, init_siren(config, ecfg.seed), ecfg.overfit, callback=callback)
        floats, mode, ihash = res.params, "full", None
        fit_res = res
        trace, mse_trace = res.trace, res.mse_trace
    t_fit = time.perf_counter()

    bits = ecfg.resolved_bits(meta)
    x = encode(make_grid(W, H).coords, config)
    t = image_to_targets(target)

    def full(q: QuantizedParams) -> ParamSet:
        return q.reconstruct(base)

    qp = quantize_params(floats, bits, mode, ihash)
    stage = {"float": decoded_mse(image, floats if base is None else base + floats, config),
             "nearest": decoded_mse(image, full(qp), config)}
    if ecfg.quantizer != "nearest":
        qp = adaround_network(floats, qp, config, x, base=base, iters=ecfg.adaround_iters,
                              reg=ecfg.adaround_reg, seed=ecfg.seed)
        stage["adaround"] = decoded_mse(image, full(qp), config)
    qat_diverged = False
    if ecfg.quantizer == "adaround+qat":
        qres = qat(qp, config, x, t, ecfg.qat_epochs, ecfg.qat_lr, base=base)
        qp, qat_diverged = qres.qparams, qres.diverged
        stage["adaround+qat"] = decoded_mse(image, full(qp), config)

    container = CodecContainer.from_quantized(config, qp, width=W, height=H)
    data = serialize_container(container)
    decoded = decode_image(data, minit)
    mse = image_mse(to_unit(decoded), target)
    t_end = time.perf_counter()
    report = {
        "mode": "meta" if meta else "basic",
        "width": W, "height": H,
        "bytes": len(data),
        "bpp": bitrate(8 * len(data), W, H),
        "psnr": psnr(mse),
        "mse": mse,
        "bits": bits,
        "epochs_run": fit_res.epochs_run,
        "best_epoch": fit_res.best_epoch,
        "best_loss": fit_res.best_loss,
        "stage_mse": stage,
        "qat_diverged": qat_diverged,
        "init_hash": ihash.hex() if ihash else None,
        "config": ecfg.to_dict() | {"model": config.to_dict()},
        "wall_time_s": {"overfit": t_fit - t0, "total": t_end - t0},
    }
    return EncodeResult(data, report, full(qp), qp, stage, trace, mse_trace)


def deterministic_report(report: dict) -> dict:
    """The report without timing fields (which are the only run-dependent ones)."""
    return {k: v for k, v in report.items() if k != "wall_time_s"}


def psnr_of(a_u8: np.ndarray, b_u8: np.ndarray) -> float:
    return psnr(image_mse(to_unit(a_u8), to_unit(b_u8)))


__all__ = ["EncodeConfig", "EncodeResult", "QUANTIZERS", "container_params", "decode_image",
           "decoded_mse", "deterministic_report", "encode_image", "psnr_of", "render"]
