"""Binary arithmetic coder: 64-bit integer state, bit-at-a-time renormalization.

Probabilities enter as 32-bit fixed-point counts c1 = P(bit=1) * 2^32,
clamped one quantum away from 0 and 1.  Carries are handled with the
classic pending-bit (underflow) counter, so identical inputs produce
identical bytes on every platform.
"""

from __future__ import annotations

__all__ = ["TOTAL", "quantize_p1", "BitWriter", "BitReader", "Encoder", "Decoder"]

STATE_BITS = 64
MASK = (1 << STATE_BITS) - 1
TOP = 1 << (STATE_BITS - 1)
SECOND = TOP >> 1

TOTAL_BITS = 32
TOTAL = 1 << TOTAL_BITS


def quantize_p1(p1: float) -> int:
    """Round P(bit=1) to a fixed-point count in [1, TOTAL-1]."""
    c = int(p1 * TOTAL + 0.5)
    if c < 1:
        return 1
    if c > TOTAL - 1:
        return TOTAL - 1
    return c


class BitWriter:
    """Accumulates bits MSB-first into bytes."""

    def __init__(self) -> None:
        self._bytes = bytearray()
        self._acc = 0
        self._fill = 0
        self.bits_written = 0

    def write(self, bit: int) -> None:
        self._acc = (self._acc << 1) | bit
        self._fill += 1
        self.bits_written += 1
        if self._fill == 8:
            self._bytes.append(self._acc)
            self._acc = 0
            self._fill = 0

    def getvalue(self) -> bytes:
        out = bytes(self._bytes)
        if self._fill:
            out += bytes(((self._acc << (8 - self._fill)) & 0xFF,))
        return out


class BitReader:
    """Reads bits MSB-first; past the end it yields zeros forever."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def read(self) -> int:
        i, r = divmod(self._pos, 8)
        self._pos += 1
        if i >= len(self._data):
            return 0
        return (self._data[i] >> (7 - r)) & 1


class Encoder:
    def __init__(self) -> None:
        self._low = 0
        self._high = MASK
        self._pending = 0
        self._out = BitWriter()

    def encode(self, c1: int, bit: int) -> None:
        low, high = self._low, self._high
        span = high - low + 1
        c0 = TOTAL - c1
        if bit:
            low, high = low + span * c0 // TOTAL, high
        else:
            low, high = low, low + span * c0 // TOTAL - 1
        # Renormalize: shift out agreed leading bits, count squeezed middles.
        while ((low ^ high) & TOP) == 0:
            b = low >> (STATE_BITS - 1)
            self._out.write(b)
            inv = b ^ 1
            while self._pending:
                self._out.write(inv)
                self._pending -= 1
            low = (low << 1) & MASK
            high = ((high << 1) & MASK) | 1
        while low & ~high & SECOND:
            self._pending += 1
            low = (low << 1) & (MASK >> 1)
            high = ((high << 1) & (MASK >> 1)) | TOP | 1
        self._low, self._high = low, high

    def finish(self) -> tuple[bytes, int]:
        # Two-bit termination: low < HALF <= high always holds here, so the
        # dyadic value selected by '01' (one quarter) or '10' (one half) plus
        # the decoder's implicit trailing zeros lies inside the final
        # interval.  Together with the renormalization bits this keeps the
        # payload within (ideal, ideal + 2] bits of the quantized-model
        # codelength.
        self._pending += 1
        bit = 0 if self._low < SECOND else 1
        self._out.write(bit)
        inv = bit ^ 1
        while self._pending:
            self._out.write(inv)
            self._pending -= 1
        return self._out.getvalue(), self._out.bits_written


class Decoder:
    def __init__(self, payload: bytes) -> None:
        self._in = BitReader(payload)
        self._low = 0
        self._high = MASK
        self._code = 0
        for _ in range(STATE_BITS):
            self._code = (self._code << 1) | self._in.read()

    def decode(self, c1: int) -> int:
        low, high, code = self._low, self._high, self._code
        span = high - low + 1
        c0 = TOTAL - c1
        value = ((code - low + 1) * TOTAL - 1) // span
        bit = 1 if value >= c0 else 0
        if bit:
            low, high = low + span * c0 // TOTAL, high
        else:
            low, high = low, low + span * c0 // TOTAL - 1
        while ((low ^ high) & TOP) == 0:
            low = (low << 1) & MASK
            high = ((high << 1) & MASK) | 1
            code = ((code << 1) & MASK) | self._in.read()
        while low & ~high & SECOND:
            low = (low << 1) & (MASK >> 1)
            high = ((high << 1) & (MASK >> 1)) | TOP | 1
            code = (code & TOP) | ((code << 1) & (MASK >> 1)) | self._in.read()
        self._low, self._high, self._code = low, high, code
        return bit
