"""Codelength functionals and the end-to-end lossless compressor.

Real-valued ("ideal") codelengths are the measurement surface used by the
experiments; the integer-valued arithmetic coder realizes them to within two
bits plus a fixed-size header and is kept behind ``arith_encode`` /
``arith_decode``.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import arith
from .models import MarkovModel, stationary
from .specfn import binary_kl

__all__ = [
    "FrozenModel",
    "CodeStream",
    "frozen_codelength",
    "kt_codelength_iid",
    "kt_codelength_markov",
    "redundancy_markov",
    "arith_encode",
    "arith_decode",
    "ADAPTIVE_MODES",
]

_LN2 = math.log(2.0)
_LGAMMA_HALF = math.lgamma(0.5)

ADAPTIVE_MODES = ("kt-iid", "kt-markov")


@dataclass(frozen=True)
class FrozenModel:
    """A trained model whose parameters are never updated on test data."""

    kind: str                      # 'iid' or 'markov'
    params: tuple[float, ...]      # (p,) or (p0, p1)

    def __post_init__(self) -> None:
        if self.kind == "iid":
            want = 1
        elif self.kind == "markov":
            want = 2
        else:
            raise ValueError(f"unknown frozen model kind {self.kind!r}")
        params = tuple(float(v) for v in self.params)
        if len(params) != want:
            raise ValueError(f"{self.kind} model needs {want} parameter(s), got {len(params)}")
        for v in params:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"parameters must lie in [0, 1], got {v!r}")
        object.__setattr__(self, "params", params)


def _neglog2(p: float) -> float:
    return math.inf if p <= 0.0 else -math.log2(p)


def _bit_counts(x: np.ndarray) -> tuple[int, int]:
    k = int(x.sum())
    return k, x.size - k


def _transition_counts(x: np.ndarray) -> tuple[int, int, int, int]:
    orig, dest = x[:-1], x[1:]
    same = orig == dest
    m1 = int(orig.sum())
    m0 = orig.size - m1
    k11 = int((same & (orig == 1)).sum())
    k00 = int(same.sum()) - k11
    return k00, m0, k11, m1


def _frozen_stationary(p0: float, p1: float) -> tuple[float, float]:
    try:
        return stationary(MarkovModel(p0, p1))
    except ValueError:
        return 0.5, 0.5  # degenerate absorbing pair: charge one bit


def frozen_codelength(model: FrozenModel, x) -> float:
    """Ideal codelength -log2 P_model(x) in bits; +inf on impossible events.

    For the chain model the first symbol is charged by the frozen model's own
    stationary distribution, an O(1) choice that does not affect per-symbol
    redundancy.
    """
    x = np.asarray(x, dtype=np.uint8)
    if x.size == 0:
        return 0.0
    if model.kind == "iid":
        p = model.params[0]
        k, z = _bit_counts(x)
        return (k * _neglog2(p) if k else 0.0) + (z * _neglog2(1.0 - p) if z else 0.0)
    p0, p1 = model.params
    pi0, pi1 = _frozen_stationary(p0, p1)
    total = _neglog2(pi1 if x[0] else pi0)
    if x.size == 1:
        return total
    k00, m0, k11, m1 = _transition_counts(x)
    for stays, visits, p in ((k00, m0, p0), (k11, m1, p1)):
        leaves = visits - stays
        if stays:
            total += stays * _neglog2(p)
        if leaves:
            total += leaves * _neglog2(1.0 - p)
    return total


def _kt_block_bits(k: int, m: int) -> float:
    """-log2 of the product of add-1/2 conditionals over m outcomes with k ones.

    The sequential product telescopes to Gamma(k+1/2)Gamma(m-k+1/2) /
    (Gamma(1/2)^2 Gamma(m+1)), which only depends on the counts.
    """
    if m == 0:
        return 0.0
    ln_prob = (math.lgamma(k + 0.5) + math.lgamma(m - k + 0.5)
               - math.lgamma(m + 1.0) - 2.0 * _LGAMMA_HALF)
    return -ln_prob / _LN2


def kt_codelength_iid(x) -> float:
    """Codelength of the add-1/2 sequential estimator on memoryless counts."""
    x = np.asarray(x, dtype=np.uint8)
    k, z = _bit_counts(x)
    return _kt_block_bits(k, k + z)


def kt_codelength_markov(x) -> float:
    """Per-state add-1/2 coding: one bit for the first symbol, then each
    state's transitions are coded with that state's own running counts."""
    x = np.asarray(x, dtype=np.uint8)
    if x.size == 0:
        raise ValueError("kt_codelength_markov needs at least one symbol")
    if x.size == 1:
        return 1.0
    k00, m0, k11, m1 = _transition_counts(x)
    return 1.0 + _kt_block_bits(k00, m0) + _kt_block_bits(k11, m1)


def redundancy_markov(true_model: MarkovModel, frozen: FrozenModel) -> float:
    """Stationary-weighted divergence pi0*D(p0||p0^) + pi1*D(p1||p1^), bits/symbol."""
    if frozen.kind != "markov":
        raise ValueError("redundancy_markov needs a frozen chain model")
    pi0, pi1 = stationary(true_model)
    ph0, ph1 = frozen.params
    return pi0 * binary_kl(true_model.p0, ph0) + pi1 * binary_kl(true_model.p1, ph1)


# ---------------------------------------------------------------------------
# Sequential probability drivers feeding the arithmetic coder.
# ---------------------------------------------------------------------------

class _FrozenIIDDriver:
    def __init__(self, p: float) -> None:
        self._c1 = arith.quantize_p1(p)

    def next_c1(self) -> int:
        return self._c1

    def observe(self, bit: int) -> None:
        pass


class _FrozenMarkovDriver:
    def __init__(self, p0: float, p1: float) -> None:
        pi0, pi1 = _frozen_stationary(p0, p1)
        self._first = arith.quantize_p1(pi1)
        # P(next=1 | state): state 0 leaves with 1-p0, state 1 stays with p1.
        self._c1 = (arith.quantize_p1(1.0 - p0), arith.quantize_p1(p1))
        self._state: int | None = None

    def next_c1(self) -> int:
        if self._state is None:
            return self._first
        return self._c1[self._state]

    def observe(self, bit: int) -> None:
        self._state = bit


class _KTIIDDriver:
    def __init__(self) -> None:
        self._k = 0
        self._t = 0

    def next_c1(self) -> int:
        return arith.quantize_p1((self._k + 0.5) / (self._t + 1.0))

    def observe(self, bit: int) -> None:
        self._k += bit
        self._t += 1


class _KTMarkovDriver:
    def __init__(self) -> None:
        self._state: int | None = None
        self._ones = [0, 0]   # transitions from state s into symbol 1
        self._total = [0, 0]  # transitions out of state s

    def next_c1(self) -> int:
        if self._state is None:
            return arith.TOTAL // 2
        s = self._state
        return arith.quantize_p1((self._ones[s] + 0.5) / (self._total[s] + 1.0))

    def observe(self, bit: int) -> None:
        if self._state is not None:
            s = self._state
            self._ones[s] += bit
            self._total[s] += 1
        self._state = bit


_STREAM_CLASSES = {"iid": 0, "markov": 1, "kt-iid": 2, "kt-markov": 3}
_STREAM_NAMES = {code: name for name, code in _STREAM_CLASSES.items()}
_STREAM_MAGIC = b"LSC1"
_STREAM_VERSION = 1


@dataclass(frozen=True)
class CodeStream:
    """Compressed container: header identifying the model, then coder output.

    ``payload_bits`` is the exact number of coder bits before byte padding;
    it is an in-memory measurement aid and is not serialized.
    """

    kind: str
    params: tuple[float, ...]
    nbits: int
    payload: bytes
    payload_bits: int = field(default=-1, compare=False)

    def to_bytes(self) -> bytes:
        body = _STREAM_MAGIC + struct.pack("<BB", _STREAM_VERSION, _STREAM_CLASSES[self.kind])
        body += struct.pack(f"<{len(self.params)}d", *self.params)
        body += struct.pack("<Q", self.nbits)
        body += self.payload
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CodeStream":
        if len(blob) < 18 or blob[:4] != _STREAM_MAGIC:
            raise ValueError("not a code stream: bad magic")
        if zlib.crc32(blob[:-4]) != struct.unpack("<I", blob[-4:])[0]:
            raise ValueError("code stream CRC mismatch")
        version, code = struct.unpack_from("<BB", blob, 4)
        if version != _STREAM_VERSION:
            raise ValueError(f"unsupported code stream version {version}")
        if code not in _STREAM_NAMES:
            raise ValueError(f"unknown model class {code}")
        kind = _STREAM_NAMES[code]
        nparams = {"iid": 1, "markov": 2}.get(kind, 0)
        offset = 6
        params = struct.unpack_from(f"<{nparams}d", blob, offset)
        offset += 8 * nparams
        (nbits,) = struct.unpack_from("<Q", blob, offset)
        offset += 8
        payload = blob[offset:-4]
        return cls(kind, params, nbits, payload, payload_bits=8 * len(payload))


def _make_driver(kind: str, params: tuple[float, ...]):
    if kind == "iid":
        return _FrozenIIDDriver(params[0])
    if kind == "markov":
        return _FrozenMarkovDriver(*params)
    if kind == "kt-iid":
        return _KTIIDDriver()
    if kind == "kt-markov":
        return _KTMarkovDriver()
    raise ValueError(f"unknown coder mode {kind!r}")


def _check_encodable(model: FrozenModel, x: np.ndarray) -> None:
    # A boundary parameter is only fatal if the zero-probability event occurs.
    if model.kind == "iid":
        p = model.params[0]
        k, z = _bit_counts(x)
        if (p == 0.0 and k) or (p == 1.0 and z):
            raise ValueError(f"frozen parameter {p} assigns zero probability to the input")
        return
    if x.size == 0:
        return
    p0, p1 = model.params
    pi0, pi1 = _frozen_stationary(p0, p1)
    if (pi1 == 0.0 and x[0] == 1) or (pi0 == 0.0 and x[0] == 0):
        raise ValueError("frozen stationary law assigns zero probability to the first symbol")
    k00, m0, k11, m1 = _transition_counts(x)
    bad = ((p0 == 1.0 and m0 > k00) or (p0 == 0.0 and k00)
           or (p1 == 1.0 and m1 > k11) or (p1 == 0.0 and k11))
    if bad:
        raise ValueError("frozen chain parameters assign zero probability to an observed transition")


def arith_encode(model, x) -> CodeStream:
    """Compress a bit sequence under a frozen model or an adaptive mode.

    ``model`` is a FrozenModel, or one of the strings in ADAPTIVE_MODES for
    the add-1/2 sequential estimators.
    """
    x = np.asarray(x, dtype=np.uint8).ravel()
    if x.size and x.max() > 1:
        raise ValueError("input must be a bit sequence")
    if isinstance(model, FrozenModel):
        _check_encodable(model, x)
        kind, params = model.kind, model.params
    elif model in ADAPTIVE_MODES:
        kind, params = model, ()
    else:
        raise ValueError(f"unknown coder mode {model!r}")
    driver = _make_driver(kind, params)
    if x.size == 0:
        return CodeStream(kind, tuple(params), 0, b"", payload_bits=0)
    enc = arith.Encoder()
    bits = x.tolist()
    for bit in bits:
        enc.encode(driver.next_c1(), bit)
        driver.observe(bit)
    payload, nbits_payload = enc.finish()
    return CodeStream(kind, tuple(params), x.size, payload, payload_bits=nbits_payload)


def arith_decode(cs: CodeStream) -> np.ndarray:
    """Invert ``arith_encode``; returns the original bit sequence."""
    if cs.nbits == 0:
        return np.zeros(0, dtype=np.uint8)
    driver = _make_driver(cs.kind, tuple(cs.params))
    dec = arith.Decoder(cs.payload)
    out = np.empty(cs.nbits, dtype=np.uint8)
    for i in range(cs.nbits):
        bit = dec.decode(driver.next_c1())
        driver.observe(bit)
        out[i] = bit
    return out
