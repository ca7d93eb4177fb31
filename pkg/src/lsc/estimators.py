"""Estimators that map training counts to frozen model parameters.

Covers the plain empirical estimator, the additive (smoothed) family, the
per-state transition counting for chains, and the budget-inhibited training
procedure whose shortfall event is bounded by Hoeffding's inequality.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .models import MarkovModel, TrainingSet, stationary, stream, write_atomic
from .specfn import q_inv

__all__ = [
    "EstimatorSpec",
    "CountStatistic",
    "GenieResult",
    "estimate",
    "alpha_range",
    "markov_counts",
    "genie_inhibit",
    "genie_budgets",
    "p_e2_hoeffding",
    "save_frozen_model",
    "load_frozen_model",
]

MLE = "mle"
ADD_ALPHA = "add-alpha"
ADD_BETA = "add-beta"


@dataclass(frozen=True)
class EstimatorSpec:
    """Which rule maps a count statistic to a probability estimate.

    kind 'mle' ignores param; 'add-alpha' adds a fixed pseudo-count alpha to
    each symbol; 'add-beta' adds a pseudo-count proportional to the sample
    size (beta * m per symbol).
    """

    kind: str
    param: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in (MLE, ADD_ALPHA, ADD_BETA):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind != MLE and self.param < 0.0:
            raise ValueError(f"{self.kind} parameter must be >= 0, got {self.param!r}")

    @classmethod
    def mle(cls) -> "EstimatorSpec":
        return cls(MLE)

    @classmethod
    def add_alpha(cls, alpha: float) -> "EstimatorSpec":
        return cls(ADD_ALPHA, alpha)

    @classmethod
    def add_beta(cls, beta: float) -> "EstimatorSpec":
        return cls(ADD_BETA, beta)

    def describe(self) -> str:
        return self.kind if self.kind == MLE else f"{self.kind}:{self.param:g}"


@dataclass(frozen=True)
class CountStatistic:
    """k successes out of m observations."""

    k: int
    m: int

    def __post_init__(self) -> None:
        if not 0 <= self.k <= self.m:
            raise ValueError(f"need 0 <= k <= m, got k={self.k!r}, m={self.m!r}")


@dataclass(frozen=True)
class GenieResult:
    """Per-state budgeted counts plus the shortfall flag (event E2)."""

    counts0: CountStatistic
    counts1: CountStatistic
    invalid: bool


def _estimate_km(k, m, spec: EstimatorSpec):
    """Vector-friendly core of ``estimate``; no domain checks."""
    if spec.kind == MLE:
        return k / m
    if spec.kind == ADD_ALPHA:
        return (k + spec.param) / (m + 2.0 * spec.param)
    return (k + spec.param * m) / (m + 2.0 * spec.param * m)


def estimate(stat: CountStatistic, spec: EstimatorSpec) -> float:
    """Probability estimate for the given counts under the given rule."""
    if stat.m == 0:
        if spec.kind == ADD_ALPHA and spec.param > 0.0:
            return 0.5  # alpha/(2*alpha): the rule's symmetric fallback
        raise ValueError(f"{spec.describe()} is undefined for m = 0")
    return float(_estimate_km(stat.k, stat.m, spec))


def alpha_range(pe: float) -> tuple[float, float]:
    """Interval of additive weights tuned for tail error probability pe.

    Centered at q_inv(pe/2)^2 / 6 with unit half-width.  The working default
    throughout this package is the lower endpoint, which concentrates the
    achievable-bound slack in the lower tail (see bounds.b_upper).
    """
    if not 0.0 < pe < 1.0:
        raise ValueError(f"pe must lie in (0, 1), got {pe!r}")
    center = q_inv(pe / 2.0) ** 2 / 6.0
    return center - 1.0, center + 1.0


def markov_counts(ts: TrainingSet) -> tuple[CountStatistic, CountStatistic]:
    """Per-state visit and self-transition counts over a training set.

    Each sequence's final position is not a transition origin, so the visit
    totals satisfy m0 + m1 = n*(l-1).
    """
    if ts.l < 2:
        raise ValueError(f"sequences must have length >= 2, got l={ts.l}")
    orig = ts.sequences[:, :-1]
    dest = ts.sequences[:, 1:]
    same = orig == dest
    m1 = int(orig.sum())
    m0 = orig.size - m1
    k11 = int((same & (orig == 1)).sum())
    k00 = int(same.sum()) - k11
    return CountStatistic(k00, m0), CountStatistic(k11, m1)


def genie_budgets(model: MarkovModel, n: int, l: int, eps: float | None = None) -> tuple[int, int]:
    """Per-state training budgets m_i = floor((pi_i - eps) * (m - n)).

    The default eps = n**(-1/3) vanishes with n while n*eps^2 grows, which is
    what drives the Hoeffding bound on the shortfall event to zero.
    """
    if eps is None:
        eps = float(n) ** (-1.0 / 3.0)
    elif eps < 0.0:
        raise ValueError(f"eps must be >= 0, got {eps!r}")
    pi0, pi1 = stationary(model)
    budget = n * l - n
    m0 = max(0, math.floor((pi0 - eps) * budget))
    m1 = max(0, math.floor((pi1 - eps) * budget))
    return m0, m1


def genie_inhibit(ts: TrainingSet, m0: int, m1: int, model: MarkovModel,
                  seed: int) -> GenieResult:
    """Inhibit training to exactly m_i observations of each state.

    Visits are taken in global (sequence index, position) order.  States with
    more visits than their budget are truncated to the first m_i; states with
    fewer get synthetic transitions drawn from the true model until the
    budget is met, and the result is flagged invalid (event E2).
    """
    if m0 < 0 or m1 < 0:
        raise ValueError("budgets must be >= 0")
    if m0 + m1 > ts.m - ts.n:
        raise ValueError(f"budget m0+m1={m0 + m1} exceeds available transitions {ts.m - ts.n}")
    orig = ts.sequences[:, :-1].ravel()
    stays = (ts.sequences[:, :-1] == ts.sequences[:, 1:]).ravel()
    gen = None
    invalid = False
    counts = []
    for state, budget, p_stay in ((0, m0, model.p0), (1, m1, model.p1)):
        visits = np.flatnonzero(orig == state)
        if visits.size >= budget:
            k = int(stays[visits[:budget]].sum())
        else:
            invalid = True
            k = int(stays[visits].sum())
            if gen is None:
                gen = stream(seed)
            k += int(gen.binomial(budget - visits.size, p_stay))
        counts.append(CountStatistic(k, budget))
    return GenieResult(counts[0], counts[1], invalid)


def p_e2_hoeffding(n: int, eps: float) -> float:
    """Hoeffding bound min(1, 2*exp(-2*n*eps^2)) on the shortfall probability."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps!r}")
    return min(1.0, 2.0 * math.exp(-2.0 * n * eps * eps))


# ---------------------------------------------------------------------------
# Frozen model files: magic "LSCM", version, class byte, parameters as
# little-endian doubles, CRC32 of everything preceding it.
# ---------------------------------------------------------------------------

_MODEL_MAGIC = b"LSCM"
_MODEL_VERSION = 1
_CLASS_CODES = {"iid": 0, "markov": 1}
_CLASS_NAMES = {code: name for name, code in _CLASS_CODES.items()}


def save_frozen_model(path: str, model) -> None:
    from .coders import FrozenModel

    if not isinstance(model, FrozenModel):
        raise TypeError("save_frozen_model expects a FrozenModel")
    body = _MODEL_MAGIC + struct.pack("<BB", _MODEL_VERSION, _CLASS_CODES[model.kind])
    body += struct.pack(f"<{len(model.params)}d", *model.params)
    write_atomic(path, body + struct.pack("<I", zlib.crc32(body)))


def load_frozen_model(path: str):
    from .coders import FrozenModel

    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 10 or blob[:4] != _MODEL_MAGIC:
        raise ValueError(f"{path}: not a frozen model file")
    if zlib.crc32(blob[:-4]) != struct.unpack("<I", blob[-4:])[0]:
        raise ValueError(f"{path}: CRC mismatch")
    version, code = struct.unpack_from("<BB", blob, 4)
    if version != _MODEL_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if code not in _CLASS_NAMES:
        raise ValueError(f"{path}: unknown model class {code}")
    kind = _CLASS_NAMES[code]
    nparams = 1 if kind == "iid" else 2
    params = struct.unpack_from(f"<{nparams}d", blob, 6)
    return FrozenModel(kind, params)
