"""Regularized incomplete Beta function and its inverse."""

import math

from .errors import EstimationError

_EPS = 3.0e-16
_TINY = 1.0e-300
_MAX_ITER = 500


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b), modified Lentz method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise EstimationError("no-convergence", f"betainc a={a} b={b} x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete Beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise EstimationError("bad-parameter", "Beta shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # The fraction converges fast for x < (a+1)/(a+b+2); use symmetry otherwise.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def betaincinv(a: float, b: float, p: float, tol: float = 1e-10) -> float:
    """Inverse of :func:`betainc` in x, by bisection on [0, 1].

    Stops when the bracket is narrower than ``tol`` relative to its
    midpoint, so steep tails near 0 still resolve p accurately.
    """
    if not 0.0 <= p <= 1.0:
        raise EstimationError("bad-probability", f"p={p}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol * max(lo, 1e-300) and hi - lo > 1e-300:
        mid = 0.5 * (lo + hi)
        if betainc(a, b, mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
