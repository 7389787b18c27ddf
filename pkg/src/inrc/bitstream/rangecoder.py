"""Adaptive binary range coder.

Registers are 32 bit. ``range`` is renormalized to stay >= 2**24 by shifting
out one byte at a time; carries out of ``low`` are propagated into bytes that
are still pending (the scheme used by LZMA's range coder). Probabilities are
12-bit estimates of P(bit = 1), starting at 2048, and adapt with a shift of 5.

The leading byte such coders emit is always zero, so it is not written; the
decoder starts from four bytes instead of five.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

PROB_BITS = 12
PROB_ONE = 1 << PROB_BITS
PROB_INIT = PROB_ONE // 2
ADAPT_SHIFT = 5
TOP = 1 << 24
MASK32 = 0xFFFFFFFF


class CodecError(ValueError):
    """Base class for bitstream errors."""


class TruncatedStreamError(CodecError):
    def __init__(self, offset: int):
        super().__init__(f"payload truncated: needed byte at offset {offset}")
        self.offset = offset


class BinaryEncoder:
    def __init__(self):
        self.low = 0
        self.range = MASK32
        self.cache = 0
        self.pending = 1
        self.first = True
        self.out = bytearray()

    def _shift_low(self) -> None:
        low = self.low
        if low < 0xFF000000 or low > MASK32:
            carry = low >> 32
            byte = self.cache
            while True:
                if self.first:
                    self.first = False  # provably zero, dropped
                else:
                    self.out.append((byte + carry) & 0xFF)
                byte = 0xFF
                self.pending -= 1
                if not self.pending:
                    break
            self.cache = (low >> 24) & 0xFF
        self.pending += 1
        self.low = (low & 0x00FFFFFF) << 8

    def encode(self, bit: int, prob: int) -> int:
        """Code one bit with P(1) = prob / 4096; returns the adapted prob."""
        bound = (self.range >> PROB_BITS) * prob
        if bit:
            self.range = bound
            prob += (PROB_ONE - prob) >> ADAPT_SHIFT
        else:
            self.low += bound
            self.range -= bound
            prob -= prob >> ADAPT_SHIFT
        while self.range < TOP:
            self.range <<= 8
            self._shift_low()
        return prob

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self.out)


class BinaryDecoder:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset
        self.range = MASK32
        self.code = 0
        for _ in range(4):
            self.code = (self.code << 8) | self._next()

    def _next(self) -> int:
        if self.pos >= len(self.data):
            raise TruncatedStreamError(self.pos)
        b = self.data[self.pos]
        self.pos += 1
        return b

    def decode(self, prob: int) -> tuple[int, int]:
        bound = (self.range >> PROB_BITS) * prob
        if self.code < bound:
            self.range = bound
            bit = 1
            prob += (PROB_ONE - prob) >> ADAPT_SHIFT
        else:
            self.code -= bound
            self.range -= bound
            bit = 0
            prob -= prob >> ADAPT_SHIFT
        while self.range < TOP:
            self.range <<= 8
            self.code = ((self.code << 8) | self._next()) & MASK32
        return bit, prob


def encode_bits(bits: Sequence[int], contexts: Sequence[int] | None = None) -> bytes:
    """Code a bit sequence; ``contexts[i]`` selects the adaptive model of bit i."""
    enc = BinaryEncoder()
    probs: dict[int, int] = {}
    if contexts is None:
        p = PROB_INIT
        for bit in bits:
            p = enc.encode(bit, p)
    else:
        for bit, c in zip(bits, contexts):
            probs[c] = enc.encode(bit, probs.get(c, PROB_INIT))
    return enc.finish()


def decode_bits(data: bytes, n: int, contexts: Sequence[int] | None = None) -> list[int]:
    dec = BinaryDecoder(data)
    out = []
    if contexts is None:
        p = PROB_INIT
        for _ in range(n):
            bit, p = dec.decode(p)
            out.append(bit)
    else:
        probs: dict[int, int] = {}
        for i in range(n):
            c = contexts[i]
            bit, probs[c] = dec.decode(probs.get(c, PROB_INIT))
            out.append(bit)
    return out


def encode_codes(tensors: Sequence[tuple[np.ndarray, int]]) -> bytes:
    """Code integer tensors as fixed-width MSB-first bits.

    Each (tensor, bit position) pair owns one adaptive probability model.
    """
    enc = BinaryEncoder()
    for t, (codes, b) in enumerate(tensors):
        codes = np.asarray(codes).ravel()
        if not 1 <= b <= 32:
            raise ValueError(f"tensor {t}: bitwidth {b} out of range")
        if codes.size and (codes.min() < 0 or codes.max() >= (1 << b)):
            raise ValueError(f"tensor {t}: codes outside [0, 2^{b}-1]")
        probs = [PROB_INIT] * b
        shifts = range(b - 1, -1, -1)
        for c in codes.tolist():
            for pos, s in enumerate(shifts):
                probs[pos] = enc.encode((c >> s) & 1, probs[pos])
    return enc.finish()


def decode_codes(data: bytes, specs: Sequence[tuple[tuple[int, ...], int]],
                 offset: int = 0) -> list[np.ndarray]:
    """Inverse of :func:`encode_codes`; ``specs`` lists (shape, bitwidth)."""
    dec = BinaryDecoder(data, offset)
    out = []
    for shape, b in specs:
        n = int(np.prod(shape))
        probs = [PROB_INIT] * b
        vals = []
        for _ in range(n):
            c = 0
            for pos in range(b):
                bit, probs[pos] = dec.decode(probs[pos])
                c = (c << 1) | bit
            vals.append(c)
        out.append(np.array(vals, dtype=np.int64).reshape(shape))
    return out
