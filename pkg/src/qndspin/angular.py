"""Wigner 3-j / 6-j symbols and Clebsch-Gordan coefficients.

Exact Racah-formula evaluation using integer arithmetic (angular momenta
are passed as floats but must be integer or half-integer).  Only small
momenta appear in the D2-line calculations, so no asymptotic care is
needed; results are exact to double precision.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache


def _two(j: float) -> int:
    tj = round(2 * j)
    if abs(2 * j - tj) > 1e-9:
        raise ValueError(f"angular momentum {j} is not integer or half-integer")
    return tj


def _triangle_ok(tj1: int, tj2: int, tj3: int) -> bool:
    return (
        abs(tj1 - tj2) <= tj3 <= tj1 + tj2
        and (tj1 + tj2 + tj3) % 2 == 0
    )


def _fact(n: int) -> int:
    if n < 0:
        raise ValueError("negative factorial")
    return math.factorial(n)


def _delta(tj1: int, tj2: int, tj3: int) -> Fraction:
    """Squared triangle coefficient Delta^2 as an exact fraction."""
    return Fraction(
        _fact((tj1 + tj2 - tj3) // 2)
        * _fact((tj1 - tj2 + tj3) // 2)
        * _fact((-tj1 + tj2 + tj3) // 2),
        _fact((tj1 + tj2 + tj3) // 2 + 1),
    )


@lru_cache(maxsize=None)
def _wigner_3j_cached(tj1, tj2, tj3, tm1, tm2, tm3):
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if not _triangle_ok(tj1, tj2, tj3):
        return 0.0
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if abs(tm) > tj or (tj - tm) % 2 != 0:
            return 0.0

    # Racah sum over k; all arguments of the factorials are integers.
    kmin = max(0, (tj2 - tj3 - tm1) // 2, (tj1 - tj3 + tm2) // 2)
    kmax = min(
        (tj1 + tj2 - tj3) // 2,
        (tj1 - tm1) // 2,
        (tj2 + tm2) // 2,
    )
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            _fact(k)
            * _fact((tj1 + tj2 - tj3) // 2 - k)
            * _fact((tj1 - tm1) // 2 - k)
            * _fact((tj2 + tm2) // 2 - k)
            * _fact((tj3 - tj2 + tm1) // 2 + k)
            * _fact((tj3 - tj1 - tm2) // 2 + k)
        )
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    norm = _delta(tj1, tj2, tj3) * Fraction(
        _fact((tj1 + tm1) // 2)
        * _fact((tj1 - tm1) // 2)
        * _fact((tj2 + tm2) // 2)
        * _fact((tj2 - tm2) // 2)
        * _fact((tj3 + tm3) // 2)
        * _fact((tj3 - tm3) // 2)
    )
    phase = (-1) ** ((tj1 - tj2 - tm3) // 2)
    sign = 1 if total > 0 else -1
    return phase * sign * math.sqrt(float(norm * total * total))


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    return _wigner_3j_cached(
        _two(j1), _two(j2), _two(j3), _two(m1), _two(m2), _two(m3)
    )


@lru_cache(maxsize=None)
def _wigner_6j_cached(tj1, tj2, tj3, tj4, tj5, tj6):
    triads = (
        (tj1, tj2, tj3),
        (tj1, tj5, tj6),
        (tj4, tj2, tj6),
        (tj4, tj5, tj3),
    )
    for t in triads:
        if not _triangle_ok(*t):
            return 0.0

    def f(ta, tb, tc):
        return _delta(ta, tb, tc)

    norm = f(*triads[0]) * f(*triads[1]) * f(*triads[2]) * f(*triads[3])

    kmin = max(
        (tj1 + tj2 + tj3) // 2,
        (tj1 + tj5 + tj6) // 2,
        (tj4 + tj2 + tj6) // 2,
        (tj4 + tj5 + tj3) // 2,
    )
    kmax = min(
        (tj1 + tj2 + tj4 + tj5) // 2,
        (tj2 + tj3 + tj5 + tj6) // 2,
        (tj3 + tj1 + tj6 + tj4) // 2,
    )
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        num = (-1) ** k * _fact(k + 1)
        den = (
            _fact(k - (tj1 + tj2 + tj3) // 2)
            * _fact(k - (tj1 + tj5 + tj6) // 2)
            * _fact(k - (tj4 + tj2 + tj6) // 2)
            * _fact(k - (tj4 + tj5 + tj3) // 2)
            * _fact((tj1 + tj2 + tj4 + tj5) // 2 - k)
            * _fact((tj2 + tj3 + tj5 + tj6) // 2 - k)
            * _fact((tj3 + tj1 + tj6 + tj4) // 2 - k)
        )
        total += Fraction(num, den)
    if total == 0:
        return 0.0
    sign = 1 if total > 0 else -1
    return sign * math.sqrt(float(norm * total * total))


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    return _wigner_6j_cached(
        _two(j1), _two(j2), _two(j3), _two(j4), _two(j5), _two(j6)
    )


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> in the Condon-Shortley convention."""
    if abs(M - (m1 + m2)) > 1e-9:
        return 0.0
    tj1, tj2, tJ = _two(j1), _two(j2), _two(J)
    phase = (-1) ** ((tj1 - tj2 + _two(M)) // 2)
    return (
        phase
        * math.sqrt(tJ + 1.0)
        * wigner_3j(j1, j2, J, m1, m2, -M)
    )
