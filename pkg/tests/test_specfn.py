"""Special-function contracts, checked against independent oracles.

The oracles here deliberately avoid the implementation's code paths:
the normal quantile is bisected on a series-based CDF, Lambert W values
come from fixed-point iteration, Poisson CDFs from partial sums.
"""

import math

import numpy as np
import pytest

from lsc.specfn import (binary_entropy, binary_kl, chi2_2_quantile, lambert_w,
                        poisson_cdf, poisson_div, poisson_sf, q_function, q_inv)

LN2 = math.log(2.0)


# --- independent oracles ----------------------------------------------------

def erf_series(x: float) -> float:
    # All-positive-term expansion: erf(x) = 2/sqrt(pi) e^{-x^2} sum (2x^2)^n x / (2n+1)!!
    total = 0.0
    term = x
    for n in range(0, 400):
        if n:
            term *= 2.0 * x * x / (2.0 * n + 1.0)
        total += term
        if term < total * 1e-18:
            break
    return 2.0 / math.sqrt(math.pi) * math.exp(-x * x) * total


def phi_oracle(x: float) -> float:
    if x >= 0:
        return 0.5 * (1.0 + erf_series(x / math.sqrt(2.0)))
    return 0.5 * (1.0 - erf_series(-x / math.sqrt(2.0)))


def q_oracle(x: float) -> float:
    # Upper tail without cancellation: Laplace continued fraction for x >= 3,
    # series CDF otherwise.
    if x < 3.0:
        return 1.0 - phi_oracle(x)
    cf = 0.0
    for n in range(300, 0, -1):
        cf = n / (x + cf)
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return pdf / (x + cf)


def q_inv_oracle(u: float) -> float:
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if q_oracle(mid) > u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def poisson_cdf_oracle(k: int, gamma: float) -> float:
    term = math.exp(-gamma)
    total = term
    for j in range(1, k + 1):
        term *= gamma / j
        total += term
    return total


# --- binary_kl / poisson_div -----------------------------------------------

def test_binary_kl_identity_and_examples():
    assert binary_kl(0.5, 0.5) == 0.0
    assert binary_kl(0.5, 0.25) == pytest.approx(0.2075187496394219, rel=1e-12)
    assert binary_kl(0.1, 0.0) == math.inf
    assert binary_kl(0.3, 1.0) == math.inf
    assert binary_kl(0.0, 0.0) == 0.0
    assert binary_kl(1.0, 1.0) == 0.0
    assert binary_kl(0.0, 0.3) == pytest.approx(-math.log2(0.7), rel=1e-12)


def test_binary_kl_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        binary_kl(-0.1, 0.5)
    with pytest.raises(ValueError):
        binary_kl(0.5, 1.5)


def test_poisson_div_examples():
    assert poisson_div(2.0, 2.0) == 0.0
    assert poisson_div(0.0, 3.0) == 3.0
    assert poisson_div(1.0, 2.0) == pytest.approx(2.0 - 1.0 + math.log(0.5), rel=1e-14)
    with pytest.raises(ValueError):
        poisson_div(1.0, 0.0)
    with pytest.raises(ValueError):
        poisson_div(-1.0, 1.0)


def test_poisson_div_nonnegative_grid():
    xs = np.geomspace(1e-6, 50, 40)
    ys = np.geomspace(1e-6, 50, 40)
    for x in xs:
        for y in ys:
            assert poisson_div(float(x), float(y)) >= 0.0


def test_pinsker_and_chi2_sandwich():
    # (2/ln2)(p-q)^2 <= D(p||q) <= (p-q)^2 / (q(1-q) ln2) on a dense grid
    grid = np.linspace(0.02, 0.98, 33)
    for p in grid:
        for q in grid:
            d = binary_kl(float(p), float(q))
            gap = (p - q) ** 2
            assert d >= 2.0 / LN2 * gap - 1e-12
            assert d <= gap / (q * (1.0 - q) * LN2) + 1e-12


# --- normal tail ------------------------------------------------------------

def test_q_function_basics():
    assert q_function(0.0) == pytest.approx(0.5, abs=1e-15)
    assert q_function(8.0) < 1e-15
    assert q_function(-8.0) > 1.0 - 1e-15


def test_q_inv_against_bisection_oracle():
    for u in (0.025, 0.3, 0.5, 0.9, 1e-4, 1e-8):
        assert q_inv(u) == pytest.approx(q_inv_oracle(u), abs=1e-9)
    assert q_inv(0.025) == pytest.approx(1.959964, abs=1e-6)
    assert q_inv(0.5) == pytest.approx(0.0, abs=1e-12)


def test_q_inv_roundtrip_identity():
    # On the negative axis Q(x) saturates toward 1.0, so the composition can
    # only recover x up to the float64 resolution ulp(1)/pdf(x); the 1e-10
    # target applies wherever that resolution supports it.
    for x in np.linspace(-8.0, 8.0, 161):
        x = float(x)
        floor = 3.0 * 1.2e-16 * math.exp(0.5 * x * x) * math.sqrt(2.0 * math.pi)
        assert q_inv(q_function(x)) == pytest.approx(x, abs=max(1e-10, floor))
    for x in np.linspace(-4.5, 8.0, 126):
        assert q_inv(q_function(float(x))) == pytest.approx(float(x), abs=1e-10)


def test_q_inv_domain():
    for u in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            q_inv(u)


# --- Lambert W --------------------------------------------------------------

def test_lambert_w_examples():
    assert lambert_w(0, 0.0) == 0.0
    assert lambert_w(-1, -math.exp(-1.0)) == -1.0
    assert lambert_w(0, -math.exp(-1.0)) == -1.0
    # fixed-point oracle for w e^w = 1: w = e^{-w}
    w = 0.5
    for _ in range(200):
        w = math.exp(-w)
    assert lambert_w(0, 1.0) == pytest.approx(w, abs=1e-12)
    assert lambert_w(0, 1.0) == pytest.approx(0.567143, abs=1e-6)


def test_lambert_w_residual_and_branch_order():
    xs0 = list(np.geomspace(1e-9, 1e6, 60)) + list(-np.geomspace(1e-9, math.exp(-1.0) * 0.999999, 60))
    for x in xs0:
        w = lambert_w(0, float(x))
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))
        assert w >= -1.0 - 1e-12
    for x in -np.geomspace(1e-12, math.exp(-1.0) * 0.999999, 60):
        wm = lambert_w(-1, float(x))
        assert abs(wm * math.exp(wm) - x) <= 1e-12 * max(1.0, abs(x))
        assert wm <= -1.0 + 1e-12
        assert wm <= lambert_w(0, float(x)) + 1e-12


def test_lambert_w_domain_errors():
    with pytest.raises(ValueError):
        lambert_w(0, -1.0)
    with pytest.raises(ValueError):
        lambert_w(-1, 0.5)
    with pytest.raises(ValueError):
        lambert_w(-1, -1.0)
    with pytest.raises(ValueError):
        lambert_w(1, 1.0)


# --- Poisson CDF ------------------------------------------------------------

def test_poisson_cdf_examples():
    assert poisson_cdf(0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-13)
    assert poisson_cdf(5, 1.0) == pytest.approx(poisson_cdf_oracle(5, 1.0), rel=1e-12)
    assert poisson_cdf(5, 1.0) == pytest.approx(0.999406, abs=1e-6)
    assert poisson_cdf(0, 1e-12) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        poisson_cdf(1, 0.0)
    with pytest.raises(ValueError):
        poisson_cdf(-1, 1.0)


def test_poisson_cdf_matches_partial_sums():
    for gamma in (0.05, 0.7, 3.0, 17.5, 120.0):
        for k in (0, 1, 2, 5, 20, 50):
            assert poisson_cdf(k, gamma) == pytest.approx(
                poisson_cdf_oracle(k, gamma), rel=1e-11, abs=1e-280)


def test_poisson_cdf_monotone_and_continuous_at_integers():
    gammas = np.geomspace(0.1, 40.0, 25)
    for k in (0.0, 1.0, 3.5, 7.0):
        vals = [poisson_cdf(k, float(g)) for g in gammas]
        assert all(a >= b - 1e-13 for a, b in zip(vals, vals[1:]))  # nonincreasing in gamma
    for gamma in (0.5, 4.0, 28.0):
        ks = np.linspace(0.0, 12.0, 241)
        vals = [poisson_cdf(float(k), gamma) for k in ks]
        assert all(b >= a - 1e-13 for a, b in zip(vals, vals[1:]))  # nondecreasing in k
        for k in (1, 2, 5, 9):
            below = poisson_cdf(k - 1e-9, gamma)
            above = poisson_cdf(k + 1e-9, gamma)
            assert above - below < 1e-6


def test_poisson_sf_complements_cdf():
    for gamma in (0.3, 2.0, 30.0):
        for k in (0, 1, 4, 10):
            assert poisson_sf(k, gamma) == pytest.approx(1.0 - poisson_cdf(k, gamma), abs=1e-12)


def assert_short_sandwich(k: int, gamma: float, margin: float = 1e-12) -> None:
    """Phi(sign(k-g)sqrt(2d(k,g))) < P(k,g) < Phi(sign(k+1-g)sqrt(2d(k+1,g))),
    compared in the tail domain so float saturation at 1.0 cannot mask it."""
    lo_arg = math.copysign(math.sqrt(2.0 * poisson_div(k, gamma)), k - gamma)
    hi_arg = math.copysign(math.sqrt(2.0 * poisson_div(k + 1, gamma)), k + 1 - gamma)
    lo, lo_sf = q_function(-lo_arg), q_function(lo_arg)
    hi, hi_sf = q_function(-hi_arg), q_function(hi_arg)
    cdf = poisson_cdf(k, gamma)
    sf = poisson_sf(k, gamma)
    if lo <= 0.5:
        assert cdf - lo > margin * max(lo, 1e-300)
    else:
        assert lo_sf - sf > margin * max(sf, 1e-300)
    if hi <= 0.5:
        assert hi - cdf > margin * max(cdf, 1e-300)
    else:
        assert sf - hi_sf > margin * max(hi_sf, 1e-300)


def test_short_bounds_sandwich_small():
    for k in range(0, 26):
        for gamma in np.geomspace(0.08, 40.0, 40):
            assert_short_sandwich(k, float(gamma))


# --- chi-square(2) quantile -------------------------------------------------

def test_chi2_quantile_values():
    assert chi2_2_quantile(0.0) == 0.0
    assert chi2_2_quantile(0.95) == pytest.approx(-2.0 * math.log(0.05), rel=1e-14)
    assert chi2_2_quantile(0.95) == pytest.approx(5.991465, abs=1e-6)
    assert chi2_2_quantile(1.0 - 1e-6) == pytest.approx(27.631021, abs=1e-5)
    with pytest.raises(ValueError):
        chi2_2_quantile(1.0)
    with pytest.raises(ValueError):
        chi2_2_quantile(-0.1)


def test_chi2_quantile_inverts_cdf():
    for u in (0.1, 0.5, 0.9, 0.999):
        x = chi2_2_quantile(u)
        assert 1.0 - math.exp(-x / 2.0) == pytest.approx(u, abs=1e-12)


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.1) == pytest.approx(0.4689955935892812, rel=1e-12)
