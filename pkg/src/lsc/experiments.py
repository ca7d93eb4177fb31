"""Exact enumeration oracles and Monte Carlo harnesses.

Exact quantities sum over the count statistic (the training data enters only
through it); Monte Carlo quantities simulate seeded training sets.  Every
randomized routine is deterministic given (seed, config): points of a sweep
and trials within a point consume disjoint, individually addressed random
streams, so results do not depend on execution order or thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bounds import ALPHA0, training_threshold
from .coders import (FrozenModel, frozen_codelength, kt_codelength_iid,
                     kt_codelength_markov)
from .estimators import (CountStatistic, EstimatorSpec, _estimate_km,
                         alpha_range, estimate, genie_budgets)
from .models import (BernoulliModel, MarkovModel, _evolve_paths, _philox_key,
                     _uniform_bank, entropy_rate, sample_iid, sample_markov,
                     stationary, stream)

__all__ = [
    "TailEstimate",
    "MeanEstimate",
    "SweepConfig",
    "MarkovPoint",
    "BeatReport",
    "default_p_grid",
    "exact_tail_iid",
    "exact_avg_redundancy_iid",
    "mc_tail_iid",
    "mc_avg_redundancy_iid",
    "mc_markov",
    "beat_universal_experiment",
]

_LN2 = math.log(2.0)
_EXACT_BUDGET = 10 ** 6
_DIRECT_SUM_MAX = 64  # below this, binomial terms come from exact integer coefficients


@dataclass(frozen=True)
class TailEstimate:
    """An exceedance probability with its uncertainty."""

    value: float
    ci_halfwidth: float
    trials: int
    method: str  # 'exact' or 'montecarlo'


@dataclass(frozen=True)
class MeanEstimate:
    """A mean redundancy in bits with its uncertainty."""

    value: float
    ci_halfwidth: float
    trials: int
    method: str


@dataclass(frozen=True)
class SweepConfig:
    """Grid sweep description for the IID and chain harnesses."""

    p_grid: tuple
    m: int
    spec: EstimatorSpec
    a: float | None
    trials: int = 10 ** 5
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.p_grid:
            raise ValueError("p_grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class MarkovPoint:
    p0: float
    p1: float
    estimate: TailEstimate | MeanEstimate
    e2_rate: TailEstimate | None = None


@dataclass(frozen=True)
class BeatReport:
    """Outcome of one trained-versus-universal comparison."""

    cls: str
    l: int
    m: int
    mode: str
    learned_excess: float
    universal_excess: float
    learned_ci: float
    universal_ci: float
    trials: int
    winner: str  # 'learned', 'universal', or 'inconclusive'


def default_p_grid(m: int) -> tuple[float, ...]:
    """Worst-case search grid: geometric sweep of (0, 1/2] plus the band of
    means gamma/m where the binomial tail behaves like a Poisson tail."""
    base = np.geomspace(1.0 / (10.0 * m), 0.5, 200)
    poisson = np.geomspace(0.05, 50.0, 64) / m
    grid = np.unique(np.concatenate([base, poisson]))
    return tuple(float(p) for p in grid if 0.0 < p <= 0.5)


@lru_cache(maxsize=8)
def _logfact(m: int) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, m + 1)))))


def _kl_bits_vec(p: float, ph: np.ndarray) -> np.ndarray:
    """D(p || ph) in bits for scalar p against a vector of estimates."""
    out = np.zeros_like(ph, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if p > 0.0:
            out = out + p * (math.log2(p) - np.log2(ph))
        if p < 1.0:
            out = out + (1.0 - p) * (math.log2(1.0 - p) - np.log2(1.0 - ph))
    out = np.where(np.isnan(ph), np.inf, out)
    return np.maximum(out, 0.0)


def _binom_pmf(m: int, p: float) -> np.ndarray:
    lf = _logfact(m)
    k = np.arange(m + 1)
    logpmf = lf[m] - lf - lf[::-1] + k * math.log(p) + (m - k) * math.log1p(-p)
    return np.exp(logpmf)


def _check_exact_args(m: int, p: float, spec: EstimatorSpec) -> None:
    if not 1 <= m <= _EXACT_BUDGET:
        raise ValueError(f"exact summation supports 1 <= m <= {_EXACT_BUDGET}, got {m!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")


def exact_tail_iid(m: int, p: float, a: float, spec: EstimatorSpec) -> TailEstimate:
    """P(D(p || estimate) > a) by exact summation over the count statistic.

    Infinite divergence (an estimate of 0 or 1 contradicted by p) exceeds
    every finite level.  For small m each binomial term is the exact integer
    coefficient times powers, so the value is bit-identical to brute-force
    enumeration of all 2^m training sequences.
    """
    _check_exact_args(m, p, spec)
    ks = np.arange(m + 1)
    ph = _estimate_km(ks, m, spec)
    exceed = _kl_bits_vec(p, np.asarray(ph, dtype=float)) > a
    if p == 0.0 or p == 1.0:
        value = 1.0 if exceed[0 if p == 0.0 else m] else 0.0
    elif m <= _DIRECT_SUM_MAX:
        q = 1.0 - p
        value = 0.0
        for k in range(m + 1):
            if exceed[k]:
                value += float(math.comb(m, k)) * p ** k * q ** (m - k)
    else:
        value = float(_binom_pmf(m, p)[exceed].sum())
    return TailEstimate(min(value, 1.0), 0.0, 0, "exact")


def exact_avg_redundancy_iid(m: int, p: float, spec: EstimatorSpec) -> float:
    """E[D(p || estimate)] in bits by exact summation over the count statistic."""
    _check_exact_args(m, p, spec)
    ks = np.arange(m + 1)
    divs = _kl_bits_vec(p, np.asarray(_estimate_km(ks, m, spec), dtype=float))
    if p == 0.0 or p == 1.0:
        return float(divs[0 if p == 0.0 else m])
    pmf = _binom_pmf(m, p)
    infinite = np.isinf(divs) & (pmf > 0.0)
    if infinite.any():
        return math.inf
    finite = np.isfinite(divs)
    return float(pmf[finite] @ divs[finite])


def _rate_ci(count: int, trials: int) -> float:
    # Normal approximation with a rule-of-three guard at the boundaries.
    if count == 0 or count == trials:
        return 3.0 / trials
    v = count / trials
    return 1.96 * math.sqrt(v * (1.0 - v) / trials)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LSC_THREADS", "1")))
    except ValueError:
        return 1


def _map_points(fn, items: list):
    workers = _thread_count()
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _point_key(seed: int, point_index: int, tag: int) -> np.ndarray:
    words = np.random.SeedSequence((int(seed), int(point_index), int(tag))).generate_state(2, np.uint64)
    return words.astype(np.uint64)


def _mc_tail_point(args) -> TailEstimate:
    p, m, spec, a, trials, seed, index = args
    key = _point_key(seed, index, 0)
    count = 0
    chunk = max(1, min(trials, (1 << 22) // max(m, 1)))
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        u = _uniform_bank(key, b, m, first_block=done)
        ks = (u < p).sum(axis=1)
        ph = np.asarray(_estimate_km(ks, m, spec), dtype=float)
        count += int((_kl_bits_vec(p, ph) > a).sum())
        done += b
    value = count / trials
    return TailEstimate(value, _rate_ci(count, trials), trials, "montecarlo")


def mc_tail_iid(cfg: SweepConfig) -> tuple[list[TailEstimate], TailEstimate]:
    """Monte Carlo tail exceedance per grid point, plus the grid supremum.

    Trial t of point i draws its training set from stream block t of a key
    derived from (cfg.seed, i), so any subset of points or trials can be
    recomputed independently with identical results.
    """
    if cfg.a is None:
        raise ValueError("mc_tail_iid needs a redundancy level cfg.a")
    items = [(float(p), cfg.m, cfg.spec, cfg.a, cfg.trials, cfg.seed, i)
             for i, p in enumerate(cfg.p_grid)]
    points = _map_points(_mc_tail_point, items)
    sup = max(points, key=lambda est: est.value)
    return points, sup


def _mc_avg_point(args) -> MeanEstimate:
    p, m, spec, trials, seed, index = args
    if m <= 20:
        return MeanEstimate(exact_avg_redundancy_iid(m, p, spec), 0.0, 0, "exact")
    key = _point_key(seed, index, 0)
    total = 0.0
    total_sq = 0.0
    chunk = max(1, min(trials, (1 << 22) // max(m, 1)))
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        u = _uniform_bank(key, b, m, first_block=done)
        ks = (u < p).sum(axis=1)
        ph = np.asarray(_estimate_km(ks, m, spec), dtype=float)
        divs = _kl_bits_vec(p, ph)
        total += float(divs.sum())
        total_sq += float((divs * divs).sum())
        done += b
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return MeanEstimate(mean, 1.96 * math.sqrt(var / trials), trials, "montecarlo")


def mc_avg_redundancy_iid(m: int, p_grid, spec: EstimatorSpec, trials: int,
                          seed: int) -> tuple[list[MeanEstimate], MeanEstimate]:
    """Mean divergence per grid point (exact summation for m <= 20), plus sup."""
    items = [(float(p), m, spec, trials, seed, i) for i, p in enumerate(p_grid)]
    points = _map_points(_mc_avg_point, items)
    sup = max(points, key=lambda est: est.value)
    return points, sup


# ---------------------------------------------------------------------------
# Chain harness
# ---------------------------------------------------------------------------

def _genie_counts_trial(orig_flat: np.ndarray, stay_flat: np.ndarray,
                        budgets: tuple[int, int], model: MarkovModel,
                        genie_seed: int) -> tuple[int, int, bool]:
    """First-m_i-visit counts with synthetic top-up on shortfall."""
    gen = None
    ks = []
    invalid = False
    is0 = orig_flat == 0
    for state, budget, p_stay in ((0, budgets[0], model.p0), (1, budgets[1], model.p1)):
        mask = is0 if state == 0 else ~is0
        visits = np.flatnonzero(mask)
        if visits.size >= budget:
            k = int(stay_flat[visits[:budget]].sum())
        else:
            invalid = True
            k = int(stay_flat[visits].sum())
            if gen is None:
                gen = stream(genie_seed)
            k += int(gen.binomial(budget - visits.size, p_stay))
        ks.append(k)
    return ks[0], ks[1], invalid


def _mc_markov_point(args) -> MarkovPoint:
    (p0, p1, n, l, spec, a, trials, seed, index, genie, eps) = args
    model = MarkovModel(p0, p1)
    pi0, pi1 = stationary(model)
    budgets = genie_budgets(model, n, l, eps) if genie else None
    seeds = np.random.SeedSequence((int(seed), int(index), 1)).generate_state(
        2 * trials, np.uint64)
    sample_seeds = seeds[0::2]
    genie_seeds = seeds[1::2]

    reds = np.empty(trials)
    invalid = np.zeros(trials, dtype=bool)
    batch = max(1, (1 << 21) // max(n * l, 1))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        banks = np.empty((b * n, l))
        for j in range(b):
            banks[j * n:(j + 1) * n] = _uniform_bank(
                _philox_key(int(sample_seeds[done + j])), n, l)
        paths = _evolve_paths(banks, p0, p1, pi0).reshape(b, n, l)
        orig = paths[:, :, :-1]
        stay = orig == paths[:, :, 1:]
        m1_b = orig.sum(axis=(1, 2), dtype=np.int64)
        k11_b = (stay & (orig == 1)).sum(axis=(1, 2), dtype=np.int64)
        k00_b = stay.sum(axis=(1, 2), dtype=np.int64) - k11_b
        m0_b = n * (l - 1) - m1_b
        if genie:
            for j in range(b):
                of = orig[j].ravel()
                sf = stay[j].ravel()
                k0, k1, bad = _genie_counts_trial(
                    of, sf, budgets, model, int(genie_seeds[done + j]))
                k00_b[j], k11_b[j] = k0, k1
                invalid[done + j] = bad
            m0_vec = np.full(b, budgets[0])
            m1_vec = np.full(b, budgets[1])
        else:
            m0_vec, m1_vec = m0_b, m1_b
        with np.errstate(divide="ignore", invalid="ignore"):
            ph0 = np.asarray(_estimate_km(k00_b, m0_vec, spec), dtype=float)
            ph1 = np.asarray(_estimate_km(k11_b, m1_vec, spec), dtype=float)
        reds[done:done + b] = (pi0 * _kl_bits_vec(p0, ph0)
                               + pi1 * _kl_bits_vec(p1, ph1))
        done += b

    if a is not None:
        count = int((reds > a).sum())
        est = TailEstimate(count / trials, _rate_ci(count, trials), trials, "montecarlo")
    else:
        mean = float(reds.mean())
        sd = float(reds.std())
        est = MeanEstimate(mean, 1.96 * sd / math.sqrt(trials), trials, "montecarlo")
    e2 = None
    if genie:
        bad = int(invalid.sum())
        e2 = TailEstimate(bad / trials, _rate_ci(bad, trials), trials, "montecarlo")
    return MarkovPoint(p0, p1, est, e2)


def mc_markov(cfg: SweepConfig, n: int, l: int, genie: bool = False,
              eps: float | None = None) -> tuple[list[MarkovPoint], MarkovPoint]:
    """Simulate chain training over a grid of (p0, p1) pairs.

    Trial t of a point regenerates exactly the training set that
    ``sample_markov(model, n, l, seed_t)`` produces for that trial's derived
    seed; batches only change how many chains are evolved at once, not the
    streams they consume.  Tail mode (cfg.a set) counts exceedances of a;
    average mode reports the mean redundancy.  With ``genie`` set, training
    is budget-inhibited (budgets from ``genie_budgets`` with the given eps)
    and the shortfall rate is reported per point.
    """
    if l < 2 or n < 1:
        raise ValueError(f"need n >= 1 and l >= 2, got n={n!r}, l={l!r}")
    if cfg.m != n * l:
        raise ValueError(f"cfg.m={cfg.m} disagrees with n*l={n * l}")
    items = [(float(p0), float(p1), n, l, cfg.spec, cfg.a, cfg.trials, cfg.seed,
              i, genie, eps) for i, (p0, p1) in enumerate(cfg.p_grid)]
    points = _map_points(_mc_markov_point, items)
    sup = max(points, key=lambda pt: pt.estimate.value)
    return points, sup


# ---------------------------------------------------------------------------
# Trained coder versus universal coder
# ---------------------------------------------------------------------------

def _train_frozen_iid(model: BernoulliModel, m: int, spec: EstimatorSpec,
                      seed: int) -> FrozenModel:
    x = sample_iid(model, m, seed)
    return FrozenModel("iid", (estimate(CountStatistic(int(x.sum()), m), spec),))


def _train_frozen_markov(model: MarkovModel, n: int, l: int, spec: EstimatorSpec,
                         seed: int) -> FrozenModel:
    from .estimators import markov_counts

    c0, c1 = markov_counts(sample_markov(model, n, l, seed))
    return FrozenModel("markov", (estimate(c0, spec), estimate(c1, spec)))


def beat_universal_experiment(l: int, source, mode: str = "average",
                              trials: int = 32, seed: int = 0,
                              pe: float | None = None,
                              spec: EstimatorSpec | None = None,
                              frozen: FrozenModel | None = None) -> BeatReport:
    """Train a frozen coder with twice the threshold sample budget and compare
    its per-symbol excess codelength against the add-1/2 universal coder on
    shared test sequences.

    Each trial draws a fresh training set (unless ``frozen`` pins the coder)
    and a fresh test sequence of length l; the excess is measured over the
    true entropy rate.  Average mode compares means, tail mode compares
    (1-pe)-quantiles.  Very short targets (l <= 2) are reported inconclusive
    rather than picking a winner from degenerate thresholds.
    """
    cls = "iid" if isinstance(source, BernoulliModel) else "markov"
    if l <= 2:
        return BeatReport(cls, l, 0, mode, math.nan, math.nan, math.nan,
                          math.nan, 0, "inconclusive")
    if mode == "tail" and pe is None:
        raise ValueError("tail mode needs pe")
    m = 2 * training_threshold(l, mode, cls, pe)
    if spec is None:
        if mode == "average":
            spec = EstimatorSpec.add_alpha(ALPHA0)
        else:
            lo = alpha_range(pe)[0]
            spec = EstimatorSpec.add_alpha(lo if lo > 0.0 else ALPHA0)
    h = entropy_rate(source)
    seeds = np.random.SeedSequence((int(seed), 2)).generate_state(2 * trials, np.uint64)

    learned = np.empty(trials)
    universal = np.empty(trials)
    n_train = max(1, math.ceil(m / l))
    for t in range(trials):
        train_seed = int(seeds[2 * t])
        test_seed = int(seeds[2 * t + 1])
        if frozen is not None:
            coder = frozen
        elif cls == "iid":
            coder = _train_frozen_iid(source, m, spec, train_seed)
        else:
            coder = _train_frozen_markov(source, n_train, l, spec, train_seed)
        if cls == "iid":
            x = sample_iid(source, l, test_seed)
            universal_bits = kt_codelength_iid(x)
        else:
            x = sample_markov(source, 1, l, test_seed).sequences[0]
            universal_bits = kt_codelength_markov(x)
        learned[t] = (frozen_codelength(coder, x) - l * h) / l
        universal[t] = (universal_bits - l * h) / l

    if mode == "average":
        stat_l, stat_u = float(learned.mean()), float(universal.mean())
    else:
        stat_l = float(np.quantile(learned, 1.0 - pe))
        stat_u = float(np.quantile(universal, 1.0 - pe))
    winner = "learned" if stat_l < stat_u else "universal"
    ci = 1.96 / math.sqrt(trials)
    return BeatReport(cls, l, m, mode, stat_l, stat_u,
                      ci * float(learned.std()), ci * float(universal.std()),
                      trials, winner)
