"""Regularized lower incomplete gamma, without a scipy runtime dependency.

P(a, x) = gamma(a, x) / Gamma(a).  Series expansion for x < a + 1, Lentz
continued fraction for the upper tail otherwise; both converge to near
machine precision for the argument ranges used here (a up to a few thousand,
x >= 0).  scipy.special.gammainc serves as the test oracle only.
"""

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _gamma_series(a: float, x: float) -> float:
    # sum_{k>=0} x^k / (a (a+1) ... (a+k)), times x^a e^-x / Gamma(a)
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(a * math.log(x) - x - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # Q(a, x) via modified Lentz; returns the upper tail
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(a * math.log(x) - x - math.lgamma(a))


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0.0:
        raise ValueError("shape parameter must be positive")
    if x < 0.0:
        raise ValueError("argument must be nonnegative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return min(1.0, max(0.0, 1.0 - _gamma_cf(a, x)))
