"""Outward-rounded interval arithmetic on ``(lo, hi)`` float pairs.

Every operation rounds its lower bound toward -inf and its upper bound toward
+inf with :func:`math.nextafter`, so results enclose the exact real-number
image.  Transcendental functions are additionally widened by a few ulps to
absorb libm error.
"""

from __future__ import annotations

import math

Interval = tuple[float, float]

_INF = math.inf
TWO_PI = 2.0 * math.pi
_HALF_PI: Interval = (math.nextafter(math.pi / 2, -_INF), math.nextafter(math.pi / 2, _INF))


def dn(x: float) -> float:
    return math.nextafter(x, -_INF)


def up(x: float) -> float:
    return math.nextafter(x, _INF)


def point(x: float) -> Interval:
    return (x, x)


def iadd(a: Interval, b: Interval) -> Interval:
    return (dn(a[0] + b[0]), up(a[1] + b[1]))


def isub(a: Interval, b: Interval) -> Interval:
    return (dn(a[0] - b[1]), up(a[1] - b[0]))


def ineg(a: Interval) -> Interval:
    return (-a[1], -a[0])


def imul(a: Interval, b: Interval) -> Interval:
    p1 = a[0] * b[0]
    p2 = a[0] * b[1]
    p3 = a[1] * b[0]
    p4 = a[1] * b[1]
    return (dn(min(p1, p2, p3, p4)), up(max(p1, p2, p3, p4)))


def iscale(c: float, a: Interval) -> Interval:
    if c >= 0.0:
        return (dn(c * a[0]), up(c * a[1]))
    return (dn(c * a[1]), up(c * a[0]))


def isq(a: Interval) -> Interval:
    lo, hi = a
    if lo >= 0.0:
        return (max(dn(lo * lo), 0.0), up(hi * hi))
    if hi <= 0.0:
        return (max(dn(hi * hi), 0.0), up(lo * lo))
    return (0.0, up(max(lo * lo, hi * hi)))


def isqrt(a: Interval) -> Interval:
    lo = max(a[0], 0.0)
    hi = max(a[1], 0.0)
    return (max(dn(math.sqrt(lo)), 0.0), up(math.sqrt(hi)))


def _widen(lo: float, hi: float, k: int = 2) -> Interval:
    for _ in range(k):
        lo = dn(lo)
        hi = up(hi)
    return (lo, hi)


def icos(a: Interval) -> Interval:
    lo, hi = a
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi - lo >= TWO_PI:
        return (-1.0, 1.0)
    c1 = math.cos(lo)
    c2 = math.cos(hi)
    rlo, rhi = _widen(min(c1, c2), max(c1, c2))
    # critical points m*pi inside [lo, hi]; the slack only ever adds points
    m_lo = math.ceil(lo / math.pi - 1e-12)
    m_hi = math.floor(hi / math.pi + 1e-12)
    for m in range(m_lo, m_hi + 1):
        if m % 2 == 0:
            rhi = 1.0
        else:
            rlo = -1.0
    return (max(rlo, -1.0), min(rhi, 1.0))


def isin(a: Interval) -> Interval:
    return icos(isub(a, _HALF_PI))


def iatan2_halfplane(y: Interval, x: Interval) -> Interval:
    """atan2 over a box with ``x >= 0``; monotone per argument, so corners bound it."""
    xlo = max(x[0], 0.0)
    xhi = max(x[1], 0.0)
    vals = [math.atan2(yy, xx) for yy in y for xx in (xlo, xhi)]
    if xlo == 0.0 and y[0] < 0.0 < y[1]:
        vals.extend((-math.pi / 2, math.pi / 2))
    lo, hi = _widen(min(vals), max(vals), 3)
    return (max(lo, -math.pi / 2 - 1e-15), min(hi, math.pi / 2 + 1e-15))


def iclamp(a: Interval, lo: float, hi: float) -> Interval:
    return (min(max(a[0], lo), hi), min(max(a[1], lo), hi))


def hull(a: Interval, b: Interval) -> Interval:
    return (min(a[0], b[0]), max(a[1], b[1]))


def contains(a: Interval, x: float) -> bool:
    return a[0] <= x <= a[1]


def contains_angle(a: Interval, x: float) -> bool:
    """True if some ``x + 2*pi*k`` lies in ``a`` (intervals on angles are never wrapped)."""
    k = math.floor((a[0] - x) / TWO_PI)
    for j in (k, k + 1, k + 2):
        y = x + TWO_PI * j
        if a[0] - 1e-12 <= y <= a[1] + 1e-12:
            return True
    return False
