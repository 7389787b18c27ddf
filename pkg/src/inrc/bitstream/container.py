"""The ``.inrc`` container.

Little-endian layout::

    "INRC"  magic
    u8      version (1)
    u8      flags: bit0 delta mode, bit1 signed-distance field
    config  in_dim u8, out_dim u8, hidden_layers u8, width u16, activation u8,
            omega f64, encoding u8, n_freqs u16, sigma f64, enc_seed u64
    u32 W, u32 H                 (images only)
    per tensor: u8 bits, f32 min, f32 step     (W0, b0, W1, b1, ...)
    16 bytes initialization hash (delta only)
    u32     payload length in bits
    payload arithmetic-coded codes
    u32     CRC-32 of everything above

Every byte counts towards the reported bitrate.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..nn.config import ACTIVATIONS, ENCODINGS, ConfigError, ModelConfig
from ..quant.grid import QuantGrid, QuantizedParams
from .rangecoder import CodecError, TruncatedStreamError, decode_codes, encode_codes

MAGIC = b"INRC"
VERSION = 1
FLAG_DELTA = 1
FLAG_SDF = 2
HASH_BYTES = 16

_CONFIG = struct.Struct("<BBBHBdBHdQ")
_DIMS = struct.Struct("<II")
_GRID = struct.Struct("<Bff")


class BadMagicError(CodecError):
    code = 2


class UnsupportedVersionError(CodecError):
    code = 3


class ChecksumError(CodecError):
    code = 4


class MissingInitializationError(CodecError):
    code = 5


class HeaderError(CodecError):
    code = 6


def pack_config(cfg: ModelConfig) -> bytes:
    return _CONFIG.pack(cfg.in_dim, cfg.out_dim, cfg.hidden_layers, cfg.width,
                        ACTIVATIONS.index(cfg.activation), cfg.omega,
                        ENCODINGS.index(cfg.encoding), cfg.n_freqs, cfg.sigma, cfg.enc_seed)


def unpack_config(data: bytes, offset: int = 0) -> tuple[ModelConfig, int]:
    if len(data) < offset + _CONFIG.size:
        raise HeaderError("truncated model configuration")
    (in_dim, out_dim, hidden, width, act, omega, enc, n_freqs, sigma,
     seed) = _CONFIG.unpack_from(data, offset)
    if act >= len(ACTIVATIONS) or enc >= len(ENCODINGS):
        raise HeaderError("unknown activation or encoding tag")
    try:
        cfg = ModelConfig(in_dim, out_dim, hidden, width, ACTIVATIONS[act], omega,
                          ENCODINGS[enc], n_freqs, sigma, seed)
    except ConfigError as exc:
        raise HeaderError(f"invalid model configuration: {exc}") from exc
    return cfg, offset + _CONFIG.size


@dataclass
class CodecContainer:
    config: ModelConfig
    grids: list[QuantGrid]
    payload: bytes
    delta: bool = False
    sdf: bool = False
    width: int = 0
    height: int = 0
    init_hash: bytes | None = None
    version: int = field(default=VERSION)

    @classmethod
    def from_quantized(cls, config: ModelConfig, qparams: QuantizedParams, *,
                       width: int = 0, height: int = 0, sdf: bool = False) -> "CodecContainer":
        for g in qparams.grids:
            if np.float32(g.min) != g.min or np.float32(g.step) != g.step:
                raise ValueError("grids must be float32-representable; use storable grids")
        payload = encode_codes([(c, g.bits) for c, g in zip(qparams.codes, qparams.grids)])
        delta = qparams.mode == "delta"
        return cls(config, list(qparams.grids), payload, delta=delta, sdf=sdf,
                   width=width, height=height, init_hash=qparams.init_hash if delta else None)

    def tensor_shapes(self) -> list[tuple[int, ...]]:
        shapes = []
        for out_f, in_f in self.config.layer_sizes:
            shapes += [(out_f, in_f), (out_f,)]
        return shapes

    def quantized(self) -> QuantizedParams:
        specs = [(s, g.bits) for s, g in zip(self.tensor_shapes(), self.grids)]
        codes = decode_codes(self.payload, specs)
        return QuantizedParams(codes, list(self.grids), "delta" if self.delta else "full",
                               self.init_hash)


def serialize_container(c: CodecContainer) -> bytes:
    n_tensors = 2 * len(c.config.layer_sizes)
    if len(c.grids) != n_tensors:
        raise ValueError(f"expected {n_tensors} grids, got {len(c.grids)}")
    flags = (FLAG_DELTA if c.delta else 0) | (FLAG_SDF if c.sdf else 0)
    out = bytearray(MAGIC)
    out += struct.pack("<BB", c.version, flags)
    out += pack_config(c.config)
    if not c.sdf:
        out += _DIMS.pack(c.width, c.height)
    for g in c.grids:
        out += _GRID.pack(g.bits, g.min, g.step)
    if c.delta:
        if c.init_hash is None or len(c.init_hash) != HASH_BYTES:
            raise ValueError("delta container needs a 16-byte initialization hash")
        out += c.init_hash
    out += struct.pack("<I", 8 * len(c.payload))
    out += c.payload
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def parse_container(data: bytes, known_hashes=None) -> CodecContainer:
    """Parse and validate a container.

    ``known_hashes`` (any container supporting ``in``) enables the delta-mode
    check that the referenced initialization is available locally.
    """
    data = bytes(data)
    if data[:4] != MAGIC:
        raise BadMagicError("not an INRC container")
    if len(data) < 6:
        raise TruncatedStreamError(len(data))
    version, flags = data[4], data[5]
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    if len(data) < 10 or zlib.crc32(data[:-4]) != struct.unpack("<I", data[-4:])[0]:
        raise ChecksumError("container checksum mismatch")
    if flags & ~(FLAG_DELTA | FLAG_SDF):
        raise HeaderError(f"unknown flags {flags:#x}")
    body = data[:-4]
    config, pos = unpack_config(body, 6)
    delta, sdf = bool(flags & FLAG_DELTA), bool(flags & FLAG_SDF)
    width = height = 0
    if not sdf:
        width, height = _DIMS.unpack_from(body, pos)
        pos += _DIMS.size
    grids = []
    for _ in range(2 * len(config.layer_sizes)):
        if pos + _GRID.size > len(body):
            raise TruncatedStreamError(pos)
        bits, lo, step = _GRID.unpack_from(body, pos)
        pos += _GRID.size
        try:
            grids.append(QuantGrid(lo, step, bits))
        except ValueError as exc:
            raise HeaderError(str(exc)) from exc
    init_hash = None
    if delta:
        init_hash = body[pos:pos + HASH_BYTES]
        pos += HASH_BYTES
        if known_hashes is not None and init_hash not in known_hashes:
            raise MissingInitializationError(
                f"initialization {init_hash.hex()} not found in the local registry")
    if pos + 4 > len(body):
        raise TruncatedStreamError(pos)
    (nbits,) = struct.unpack_from("<I", body, pos)
    pos += 4
    payload = body[pos:]
    if nbits != 8 * len(payload):
        raise HeaderError(f"payload length {len(payload)} bytes != declared {nbits} bits")
    return CodecContainer(config, grids, payload, delta=delta, sdf=sdf, width=width,
                          height=height, init_hash=init_hash, version=version)
