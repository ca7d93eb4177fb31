"""Binary sources: parameter containers, seeded sampling, exact statistics.

Random streams are counter-based (Philox).  A stream is addressed by
``(seed, block)``; its output never depends on which other blocks were
consumed, so generation parallelized across sequences is bit-identical to
serial generation.  ``sample_markov`` gives sequence ``i`` block ``i`` of the
key derived from ``seed``.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .specfn import binary_entropy

__all__ = [
    "BernoulliModel",
    "MarkovModel",
    "TrainingSet",
    "stream",
    "sample_iid",
    "sample_markov",
    "stationary",
    "entropy_rate",
    "pack_bits",
    "unpack_bits",
    "write_bit_file",
    "read_bit_file",
    "write_atomic",
]

_U64_MASK = (1 << 64) - 1


def _check_prob(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class BernoulliModel:
    """Memoryless binary source with P(X = 1) = p."""

    p: float

    def __post_init__(self) -> None:
        _check_prob(self.p, "p")


@dataclass(frozen=True)
class MarkovModel:
    """Two-state binary chain; p0 and p1 are the self-transition (stay) probabilities."""

    p0: float
    p1: float

    def __post_init__(self) -> None:
        _check_prob(self.p0, "p0")
        _check_prob(self.p1, "p1")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """n equal-length bit sequences stored as an (n, l) uint8 array."""

    sequences: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.sequences, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("sequences must be a 2-D (n, l) array")
        if arr.size and arr.max() > 1:
            raise ValueError("sequences must contain only bits")
        object.__setattr__(self, "sequences", arr)

    @property
    def n(self) -> int:
        return self.sequences.shape[0]

    @property
    def l(self) -> int:
        return self.sequences.shape[1]

    @property
    def m(self) -> int:
        return self.n * self.l


def _philox_key(seed: int) -> np.ndarray:
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed!r}")
    return np.array([seed & _U64_MASK, (seed >> 64) & _U64_MASK], dtype=np.uint64)


def _block_counter(block: int) -> np.ndarray:
    return np.array([0, int(block), 0, 0], dtype=np.uint64)


def stream(seed: int, block: int = 0) -> np.random.Generator:
    """Generator for counter block ``block`` of the Philox family keyed by ``seed``."""
    bg = np.random.Philox(counter=_block_counter(block), key=_philox_key(seed))
    return np.random.Generator(bg)


def _uniform_bank(key: np.ndarray, n: int, l: int, first_block: int = 0) -> np.ndarray:
    """(n, l) uniforms; row i is bit-identical to stream(seed, first_block+i).random(l).

    Reuses one Philox object across blocks (state reassignment) because
    constructing n generator objects dominates small-sequence sampling.
    """
    bg = np.random.Philox(key=key)
    gen = np.random.Generator(bg)
    out = np.empty((n, l), dtype=np.float64)
    zeros4 = np.zeros(4, dtype=np.uint64)
    for i in range(n):
        bg.state = {
            "bit_generator": "Philox",
            "state": {"counter": _block_counter(first_block + i), "key": key},
            "buffer": zeros4,
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        out[i] = gen.random(l)
    return out


def sample_iid(model: BernoulliModel, length: int, seed: int) -> np.ndarray:
    """Length-`length` vector of i.i.d. bits with P(1) = model.p."""
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length!r}")
    u = stream(seed).random(length)
    return (u < model.p).astype(np.uint8)


def stationary(model: MarkovModel) -> tuple[float, float]:
    """Stationary distribution (pi0, pi1) of the two-state chain.

    Solves global balance pi0*(1-p0) = pi1*(1-p1); rejects the doubly
    absorbing chain p0 = p1 = 1, which has no unique stationary law.
    """
    a = 1.0 - model.p0
    b = 1.0 - model.p1
    if a == 0.0 and b == 0.0:
        raise ValueError("p0 = p1 = 1 has no unique stationary distribution")
    pi0 = b / (a + b)
    return pi0, 1.0 - pi0


def _evolve_paths(u: np.ndarray, p0: float, p1: float, pi0: float) -> np.ndarray:
    """Drive chains with a bank of uniforms; column 0 draws the initial state."""
    n, l = u.shape
    # Transposed copies so the per-step slices are contiguous.
    stay0 = np.ascontiguousarray((u < p0).T)
    stay1 = np.ascontiguousarray((u < p1).T)
    path = np.empty((l, n), dtype=bool)
    state = u[:, 0] >= pi0  # True = state 1
    path[0] = state
    for t in range(1, l):
        stay = np.where(state, stay1[t], stay0[t])
        state = state ^ ~stay
        path[t] = state
    return np.ascontiguousarray(path.T).astype(np.uint8)


def sample_markov(model: MarkovModel, n: int, l: int, seed: int) -> TrainingSet:
    """n independent length-l sequences, each started from the stationary law.

    Sequence i consumes only stream (seed, block=i), so any subset can be
    regenerated independently and in parallel.
    """
    if n < 1 or l < 1:
        raise ValueError(f"need n >= 1 and l >= 1, got n={n!r}, l={l!r}")
    pi0, _ = stationary(model)
    u = _uniform_bank(_philox_key(seed), n, l)
    return TrainingSet(_evolve_paths(u, model.p0, model.p1, pi0))


def entropy_rate(model) -> float:
    """Source entropy in bits per symbol."""
    if isinstance(model, BernoulliModel):
        return binary_entropy(model.p)
    if isinstance(model, MarkovModel):
        pi0, pi1 = stationary(model)
        return pi0 * binary_entropy(model.p0) + pi1 * binary_entropy(model.p1)
    raise TypeError(f"unsupported model type {type(model).__name__}")


# ---------------------------------------------------------------------------
# Corpus files: 8-byte little-endian bit count, then bits packed LSB-first.
# ---------------------------------------------------------------------------

def pack_bits(bits) -> bytes:
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit sequence must contain only 0s and 1s")
    return struct.pack("<Q", arr.size) + np.packbits(arr, bitorder="little").tobytes()


def unpack_bits(blob: bytes) -> np.ndarray:
    if len(blob) < 8:
        raise ValueError("truncated bit stream: missing length prefix")
    (count,) = struct.unpack_from("<Q", blob, 0)
    body = np.frombuffer(blob, dtype=np.uint8, offset=8)
    if body.size * 8 < count:
        raise ValueError("truncated bit stream: fewer bits than the prefix declares")
    return np.unpackbits(body, bitorder="little", count=count) if count else np.zeros(0, np.uint8)


def write_atomic(path: str, data: bytes) -> None:
    """Write bytes via a sibling temp file + rename so failures leave no partial file."""
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bit_file(path: str, bits) -> None:
    write_atomic(path, pack_bits(bits))


def read_bit_file(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return unpack_bits(fh.read())
