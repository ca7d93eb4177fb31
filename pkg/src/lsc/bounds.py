"""Tail and average redundancy bounds for trained coders, plus the universal
coding baselines and the training-size thresholds that compare the two.

Conventions used throughout:

* ``a`` values are redundancy levels in bits per source symbol.
* ``gamma_t`` ("gamma tilde") is the Poisson-regime mean normalized by
  q_inv(pe/2)^2; kappa values are normalized the same way.
* The additive estimator weight defaults to the lower endpoint of
  ``alpha_range(pe)``, which pushes all of the achievable-bound slack into
  the lower-tail bump (see ``b_upper``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .estimators import alpha_range
from .specfn import chi2_2_quantile, lambert_w, poisson_cdf, poisson_div, q_inv

__all__ = [
    "ALPHA0",
    "LAMBDA_SPLIT",
    "TailBoundResult",
    "NormalizedPoissonPoint",
    "iid_converse_a",
    "iid_achievable_a",
    "kappa_tilde",
    "normalized_point",
    "b_upper",
    "universal_redundancy",
    "training_threshold",
    "markov_achievable_a",
    "markov_converse_a",
    "markov_avg_bounds",
    "exact_kappa",
    "figure1_data",
    "figure2_data",
]

_LN2 = math.log(2.0)

# Optimal weight of the additive estimator under the average-redundancy
# criterion (Krichevsky's constant).
ALPHA0 = 0.50922

# Split of the error budget between the lower and upper tails.  The
# symmetric split is optimal, so it is a fixed constant rather than a knob.
LAMBDA_SPLIT = 0.5


@dataclass(frozen=True)
class TailBoundResult:
    """A redundancy level in bits/symbol with the constants that produced it."""

    a: float
    kind: str            # 'converse' or 'achievable'
    pe: float
    m: int
    alpha: float | None = None
    b: float | None = None


@dataclass(frozen=True)
class NormalizedPoissonPoint:
    """One abscissa of the normalized tail geometry.

    kappa_minus_t/kappa_plus_t solve d(kappa - alpha_t, gamma_t) = 1/2 on
    their respective sides of gamma_t, with alpha_minus_t = (alpha-1)/Q^2 and
    alpha_plus_t = (alpha+1)/Q^2.
    """

    gamma_t: float
    kappa_minus_t: float
    kappa_plus_t: float
    alpha_minus_t: float
    alpha_plus_t: float


def _check_tail_args(m: int, pe: float) -> None:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m!r}")
    if not 0.0 < pe < 0.5:
        raise ValueError(f"pe must lie in (0, 1/2), got {pe!r}")


def iid_converse_a(m: int, pe: float) -> TailBoundResult:
    """Smallest redundancy level any estimator can guarantee with error pe."""
    _check_tail_args(m, pe)
    a = q_inv(pe / 2.0) ** 2 / (2.0 * m * _LN2)
    return TailBoundResult(a, "converse", pe, m)


def _ratio(side: str, gamma_t: float) -> float:
    """Common factor r(gamma_t) = (1/(2g) - 1) / W((1/e)(1/(2g) - 1))."""
    c = 1.0 / (2.0 * gamma_t) - 1.0
    arg = c / math.e
    if side == "minus":
        if gamma_t <= 0.5:
            raise ValueError(
                f"lower-tail solution needs gamma_t > 1/2, got gamma_t={gamma_t!r}")
        w = lambert_w(-1, arg)
    else:
        if gamma_t <= 0.0:
            raise ValueError(f"gamma_t must be > 0, got {gamma_t!r}")
        if arg == 0.0:
            return math.e  # limit of c / W0(c/e) as c -> 0
        w = lambert_w(0, arg)
    return c / w


def kappa_tilde(side: str, gamma_t: float, pe: float, alpha: float) -> float:
    """Normalized tail solution kappa for the given side of gamma_t.

    Satisfies poisson_div(kappa - alpha_side, gamma_t) = 1/2 where
    alpha_side is (alpha -/+ 1) normalized by q_inv(pe/2)^2.
    """
    if side not in ("minus", "plus"):
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    q2 = q_inv(pe / 2.0) ** 2
    shift = (alpha - 1.0) / q2 if side == "minus" else (alpha + 1.0) / q2
    return _ratio(side, gamma_t) * gamma_t + shift


def normalized_point(gamma_t: float, pe: float, alpha: float) -> NormalizedPoissonPoint:
    q2 = q_inv(pe / 2.0) ** 2
    return NormalizedPoissonPoint(
        gamma_t=gamma_t,
        kappa_minus_t=kappa_tilde("minus", gamma_t, pe, alpha),
        kappa_plus_t=kappa_tilde("plus", gamma_t, pe, alpha),
        alpha_minus_t=(alpha - 1.0) / q2,
        alpha_plus_t=(alpha + 1.0) / q2,
    )


def _minus_domain_start(pe: float, alpha: float) -> float:
    """Smallest gamma_t whose lower-tail solution maps to a realizable count.

    The lower-tail bump is traced by integer counts k with k + alpha > 0;
    below the first such solution the lower tail carries no probability and
    the continuous curve has no meaning (it diverges once kappa <= 0).
    """
    q2 = q_inv(pe / 2.0) ** 2
    k_min = 0 if alpha > 0.0 else math.floor(-alpha) + 1
    target = (k_min + 1.0) / q2
    lo, hi = 0.5 + 1e-12, 1.0
    while _ratio("minus", hi) * hi < target:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("could not bracket the lower-tail domain edge")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _ratio("minus", mid) * mid < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return hi


def _minus_bump(gamma_t: float, pe: float, alpha: float) -> float:
    return poisson_div(gamma_t, kappa_tilde("minus", gamma_t, pe, alpha))


def _golden_max(fn, lo: float, hi: float, tol: float) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = c if fc > fd else d
    return x, max(fc, fd)


@lru_cache(maxsize=256)
def _b_upper_cached(pe: float) -> float:
    alpha = alpha_range(pe)[0]
    start = _minus_domain_start(pe, alpha)
    grid = np.geomspace(1e-3, 1e3, 2048)
    grid = grid[grid > start]
    grid = np.concatenate(([start], grid))
    vals = np.array([_minus_bump(g, pe, alpha) for g in grid])
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if hi <= lo:
        return 2.0 * float(vals[i])
    _, best = _golden_max(lambda g: _minus_bump(g, pe, alpha), lo, hi, 1e-10)
    return 2.0 * max(best, float(vals[i]))


def b_upper(pe: float, gamma_grid=None) -> float:
    """Upper bound on the achievable/converse gap factor b(pe).

    Maximizes twice the lower-tail bump 2*d(gamma_t, kappa_minus_t) with the
    additive weight at the lower endpoint of ``alpha_range(pe)``, over the
    gamma_t domain where the solution corresponds to a realizable count.
    Grid scan plus golden-section refinement of the best bracket; exceeds 1
    for every pe and tends to 1 as pe -> 0.
    """
    if not 0.0 < pe < 0.5:
        raise ValueError(f"pe must lie in (0, 1/2), got {pe!r}")
    if gamma_grid is None:
        return _b_upper_cached(float(pe))
    alpha = alpha_range(pe)[0]
    start = _minus_domain_start(pe, alpha)
    grid = np.asarray(gamma_grid, dtype=float)
    grid = grid[grid > start]
    grid = np.concatenate(([start], grid))
    vals = np.array([_minus_bump(g, pe, alpha) for g in grid])
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if hi <= lo:
        return 2.0 * float(vals[i])
    _, best = _golden_max(lambda g: _minus_bump(g, pe, alpha), lo, hi, 1e-10)
    return 2.0 * max(best, float(vals[i]))


def iid_achievable_a(m: int, pe: float) -> TailBoundResult:
    """Redundancy level the tuned additive estimator guarantees with error pe."""
    _check_tail_args(m, pe)
    b = b_upper(pe)
    alpha = alpha_range(pe)[0]
    a = b * q_inv(pe / 2.0) ** 2 / (2.0 * m * _LN2)
    return TailBoundResult(a, "achievable", pe, m, alpha=alpha, b=b)


def universal_redundancy(l: int, cls: str) -> float:
    """Leading-order minimax redundancy of a universal coder, bits/symbol."""
    if l < 2:
        raise ValueError(f"l must be >= 2, got {l!r}")
    if cls == "iid":
        return math.log2(l) / (2.0 * l)
    if cls == "markov":
        return math.log2(l) / l
    raise ValueError(f"cls must be 'iid' or 'markov', got {cls!r}")


def training_threshold(l: int, mode: str, cls: str, pe: float | None = None) -> int:
    """Training samples needed for a trained coder to match the universal one.

    'average' compares mean redundancy against log(l)/(2l) (IID) or log(l)/l
    (chains, whose universal penalty and trained constant both double);
    'tail' compares the guaranteed level at error pe, where both source
    classes give the same threshold to leading order.
    """
    if l < 2:
        raise ValueError(f"l must be >= 2, got {l!r}")
    if cls not in ("iid", "markov"):
        raise ValueError(f"cls must be 'iid' or 'markov', got {cls!r}")
    log2l = math.log2(l)
    if mode == "average":
        scale = 1.0 if cls == "iid" else 2.0 * ALPHA0
        return math.ceil(scale * l / (_LN2 * log2l))
    if mode == "tail":
        if pe is None:
            raise ValueError("tail mode needs pe")
        _check_tail_args(1, pe)
        return math.ceil(q_inv(pe / 2.0) ** 2 / (2.0 * _LN2) * l / log2l)
    raise ValueError(f"mode must be 'average' or 'tail', got {mode!r}")


def markov_converse_a(m: int, pe: float) -> TailBoundResult:
    """Two-parameter converse: the chi-square(2) quantile replaces the squared
    normal quantile because both states' estimates must land simultaneously."""
    _check_tail_args(m, pe)
    a = chi2_2_quantile(1.0 - pe) / (2.0 * m * _LN2)
    return TailBoundResult(a, "converse", pe, m)


def markov_achievable_a(m: int, pe: float) -> TailBoundResult:
    """Achievable level for chains via a per-state error budget.

    Requiring each state to stay within its half of the redundancy with
    probability sqrt(1-pe) maps the two-state problem onto two single-state
    problems at the transformed level pe' = 1 - sqrt(1-pe); the bump factor
    is evaluated at that same transformed level.
    """
    _check_tail_args(m, pe)
    pe_t = 1.0 - math.sqrt(1.0 - pe)
    b = b_upper(pe_t)
    alpha = alpha_range(pe_t)[0]
    a = 2.0 * b * q_inv(pe_t / 2.0) ** 2 / (2.0 * m * _LN2)
    return TailBoundResult(a, "achievable", pe, m, alpha=alpha, b=b)


def markov_avg_bounds(m: int) -> tuple[float, float]:
    """(achievable, converse) mean redundancy for chains, bits/symbol."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m!r}")
    return 2.0 * ALPHA0 / (m * _LN2), 1.0 / (m * _LN2)


# ---------------------------------------------------------------------------
# Exact tail solutions by inverting the Poisson CDF, and figure data.
# ---------------------------------------------------------------------------

def exact_kappa(side: str, gamma: float, pe: float, alpha: float) -> float:
    """Unnormalized exact tail count solution kappa for mean gamma.

    Solves P_gamma(x) = pe/2 (side 'minus', below gamma) or 1 - pe/2 (side
    'plus', above gamma) for real x via bisection on the continued Poisson
    CDF, then returns kappa = x + alpha.  Returns NaN when the lower tail
    carries less mass than pe/2 even at x = 0 (no constraint).
    """
    if side not in ("minus", "plus"):
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    if side == "minus":
        target = pe / 2.0
        if poisson_cdf(0.0, gamma) <= target:
            lo, hi = 0.0, gamma
        else:
            return math.nan
    else:
        target = 1.0 - pe / 2.0
        lo = gamma
        hi = gamma + 20.0 * math.sqrt(gamma) + 50.0
        while poisson_cdf(hi, gamma) < target:
            hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if poisson_cdf(mid, gamma) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi) + alpha


def figure1_data(pe: float, alpha: float | None = None, gamma_grid=None):
    """Normalized tail-bump curves: Lambert-solution bounds and exact values.

    Returns (header, rows); columns are gamma_t, the two bound curves
    d(gamma_t, kappa_minus_t) / d(gamma_t, kappa_plus_t), and their exact
    counterparts from Poisson CDF inversion.  NaN marks abscissas outside a
    curve's domain.
    """
    if alpha is None:
        alpha = alpha_range(pe)[0]
    q2 = q_inv(pe / 2.0) ** 2
    if gamma_grid is None:
        gamma_grid = np.geomspace(0.02, 1e3, 400)
    start = _minus_domain_start(pe, alpha)
    rows = []
    for gt in np.asarray(gamma_grid, dtype=float):
        if gt > start:
            d_minus = _minus_bump(gt, pe, alpha)
        else:
            d_minus = math.nan
        d_plus = poisson_div(gt, kappa_tilde("plus", gt, pe, alpha))
        gamma = gt * q2
        km = exact_kappa("minus", gamma, pe, alpha)
        d_minus_exact = poisson_div(gt, km / q2) if km == km and km > 0.0 else math.nan
        kp = exact_kappa("plus", gamma, pe, alpha)
        d_plus_exact = poisson_div(gt, kp / q2)
        rows.append((gt, d_minus, d_plus, d_minus_exact, d_plus_exact))
    header = ("gamma_t", "d_minus_bound", "d_plus_bound", "d_minus_exact", "d_plus_exact")
    return header, rows


def figure2_data(pe_grid=None):
    """Gap curves versus error probability: bump factor and the ratios of the
    chain bounds to the memoryless converse (the 1/m scale cancels)."""
    if pe_grid is None:
        pe_grid = np.geomspace(1e-12, 1e-2, 41)
    rows = []
    for pe in np.asarray(pe_grid, dtype=float):
        base = iid_converse_a(1, pe).a
        rows.append((
            pe,
            b_upper(pe),
            markov_achievable_a(1, pe).a / base,
            markov_converse_a(1, pe).a / base,
        ))
    header = ("pe", "b_upper", "markov_achievable_ratio", "markov_converse_ratio")
    return header, rows
