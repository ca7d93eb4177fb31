"""Scalar special functions shared by the bound evaluators and simulators.

Units are part of each contract: binary relative entropy is reported in
bits, the Poisson-style divergence ``poisson_div`` in nats.  Everything in
this module is a pure function of its arguments and safe to call from any
number of threads.
"""

from __future__ import annotations

import math

__all__ = [
    "binary_kl",
    "binary_entropy",
    "poisson_div",
    "q_function",
    "q_inv",
    "lambert_w",
    "poisson_cdf",
    "chi2_2_quantile",
]

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_BRANCH_POINT = -math.exp(-1.0)  # -1/e, left edge of both real W branches


def _check_prob(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def binary_kl(p: float, phat: float) -> float:
    """Relative entropy D(p || phat) between Bernoulli(p) and Bernoulli(phat), in bits.

    Uses the convention 0*log(0/x) = 0.  Returns +inf when ``phat`` puts zero
    mass on an outcome that has positive probability under ``p``; infinity is
    a value here, not an error.
    """
    _check_prob(p, "p")
    _check_prob(phat, "phat")
    total = 0.0
    if p > 0.0:
        if phat == 0.0:
            return math.inf
        total += p * (math.log2(p) - math.log2(phat))
    if p < 1.0:
        if phat == 1.0:
            return math.inf
        total += (1.0 - p) * (math.log2(1.0 - p) - math.log2(1.0 - phat))
    # Tiny negative round-off is possible when p ~ phat.
    return max(total, 0.0)


def binary_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) source in bits per symbol."""
    _check_prob(p, "p")
    if p == 0.0 or p == 1.0:
        return 0.0
    q = 1.0 - p
    return -p * math.log2(p) - q * math.log2(q)


def poisson_div(x: float, y: float) -> float:
    """Divergence d(x, y) = y - x + x*ln(x/y) in nats, with 0*ln(0) = 0.

    Nonnegative for x >= 0, y > 0; zero exactly when x == y.
    """
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    if y <= 0.0:
        raise ValueError(f"y must be > 0, got {y!r}")
    if x == 0.0:
        return y
    return max(y - x + x * math.log(x / y), 0.0)


def q_function(x: float) -> float:
    """Standard normal upper tail Q(x) = P(N(0,1) > x)."""
    return 0.5 * math.erfc(x / _SQRT2)


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


# Acklam's rational approximation to the standard normal quantile,
# accurate to ~1.15e-9; used as the initial guess for q_inv.
_ACK_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACK_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)


def _norm_ppf_approx(p: float) -> float:
    a, b, c, d = _ACK_A, _ACK_B, _ACK_C, _ACK_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    q = math.sqrt(-2.0 * math.log(1.0 - p))
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)


def q_inv(u: float) -> float:
    """Inverse of ``q_function``: the x with Q(x) = u, for 0 < u < 1.

    Rational initial guess refined with two Newton steps on Q itself;
    relative accuracy is ~1e-15 over the usable range.
    """
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u!r}")
    x = -_norm_ppf_approx(u)
    for _ in range(2):
        pdf = _norm_pdf(x)
        if pdf <= 0.0:
            break
        x += (q_function(x) - u) / pdf
    return x


def lambert_w(branch: int, x: float) -> float:
    """Real Lambert W: the w with w*exp(w) = x on branch 0 or -1.

    Branch 0 is defined for x >= -1/e and returns w >= -1; branch -1 for
    -1/e <= x < 0 and returns w <= -1.  Halley iteration from branch-specific
    initial guesses; the residual |w*exp(w) - x| is at most
    1e-12 * max(1, |x|).
    """
    if branch not in (0, -1):
        raise ValueError(f"branch must be 0 or -1, got {branch!r}")
    # t = e*x + 1 measures the distance to the branch point -1/e.
    t = math.e * x + 1.0
    if t < 0.0:
        if t < -1e-12:
            raise ValueError(f"x={x!r} is below the branch point -1/e")
        t = 0.0
    if branch == -1 and x >= 0.0:
        raise ValueError(f"branch -1 requires x < 0, got {x!r}")
    if t == 0.0:
        return -1.0
    if branch == 0 and x == 0.0:
        return 0.0

    p = math.sqrt(2.0 * t)
    if branch == 0:
        if x > 3.0:
            w = math.log(x) - math.log(math.log(x))
        elif x < 0.0:
            # series around the branch point
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        else:
            w = math.log1p(x)
    else:
        if t < 0.5:
            w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p ** 3
        else:
            lx = math.log(-x)
            w = lx - math.log(-lx)

    tol = 1e-13 * max(1.0, abs(x))
    for _ in range(80):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        w -= f / denom

    if abs(w * math.exp(w) - x) > 1e-12 * max(1.0, abs(x)):
        raise ArithmeticError(f"lambert_w failed to converge for branch={branch}, x={x!r}")
    return w


def _gamma_p_series(a: float, x: float) -> float:
    # Lower regularized gamma P(a, x) by series, valid for x < a + 1.
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(1000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # Upper regularized gamma Q(a, x) by modified Lentz continued fraction,
    # valid for x >= a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _reg_gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) for a > 0, x >= 0."""
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return min(max(1.0 - _gamma_p_series(a, x), 0.0), 1.0)
    return min(max(_gamma_q_contfrac(a, x), 0.0), 1.0)


def poisson_cdf(k: float, gamma: float) -> float:
    """P(N <= k) for N ~ Poisson(gamma), continued to real k >= 0.

    For integer k this equals sum_{j<=k} exp(-gamma) gamma^j / j!; the
    continuation to non-integer k is the regularized upper incomplete gamma
    Q(k+1, gamma), which interpolates the partial sums monotonically.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    if k < 0.0:
        raise ValueError(f"k must be >= 0, got {k!r}")
    return _reg_gamma_q(k + 1.0, gamma)


def poisson_sf(k: float, gamma: float) -> float:
    """Survival function 1 - poisson_cdf(k, gamma), computed without cancellation."""
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    if k < 0.0:
        raise ValueError(f"k must be >= 0, got {k!r}")
    a = k + 1.0
    if gamma < a + 1.0:
        return min(max(_gamma_p_series(a, gamma), 0.0), 1.0)
    return min(max(1.0 - _gamma_q_contfrac(a, gamma), 0.0), 1.0)


def chi2_2_quantile(u: float) -> float:
    """Quantile of the chi-square law with two degrees of freedom.

    The CDF is F(x) = 1 - exp(-x/2), so the inverse is exactly -2*ln(1-u).
    """
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u!r}")
    return -2.0 * math.log1p(-u)
