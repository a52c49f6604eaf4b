"""F-test tail probabilities and false-discovery-rate correction.

Both are self-contained: the F upper tail goes through a regularized
incomplete beta evaluated by continued fraction, and the BH correction is
the plain step-up rule.
"""

from __future__ import annotations

import math
from typing import List, Sequence

from .errors import InvalidDf, InvalidP

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_upper_tail(f: float, ndf: float, ddf: float) -> float:
    """P(F_{ndf, ddf} > f), the upper tail of the F distribution.

    Uses 1 - CDF = I_x(ddf/2, ndf/2) with x = ddf / (ddf + ndf * f).
    """
    if (
        not math.isfinite(ndf)
        or not math.isfinite(ddf)
        or ndf <= 0.0
        or ddf <= 0.0
    ):
        raise InvalidDf(f"degrees of freedom must be finite and positive: {ndf}, {ddf}")
    if math.isnan(f) or f < 0.0 or math.isinf(f):
        raise ValueError(f"F statistic must be a finite value >= 0, got {f!r}")
    x = ddf / (ddf + ndf * f)
    p = _reg_inc_beta(ddf / 2.0, ndf / 2.0, x)
    return min(1.0, max(0.0, p))


def bh_adjust(pvals: Sequence[float]) -> List[float]:
    """Benjamini-Hochberg adjusted p-values, original order preserved.

    Step-up: adjusted_(i) = min_{j >= i} (m * p_(j) / j) over the ascending
    sort, capped at 1.
    """
    for p in pvals:
        if math.isnan(p) or p < 0.0 or p > 1.0:
            raise InvalidP(f"p-value {p!r} outside [0, 1]")
    m = len(pvals)
    if m == 0:
        return []
    order = sorted(range(m), key=lambda i: pvals[i])
    adjusted = [0.0] * m
    running = 1.0
    for rank in range(m, 0, -1):
        i = order[rank - 1]
        running = min(running, m * pvals[i] / rank)
        # m*p/rank can round an ulp below p; the adjustment never shrinks p
        adjusted[i] = max(running, pvals[i])
    return adjusted
