"""Bessel functions, their positive zeros, and decay rates of disk and sphere modes.

J_nu is evaluated for integer and half-integer orders only, which is all the
heat and Stokes references need. Below x = 1 the ascending series is summed;
beyond, both use Miller's backward recurrence, anchored by the Neumann sum
(integer orders) or by the closed forms of J_{1/2}, J_{-1/2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

MAX_ORDER = 50
_BIG = 1e250


def _check_order(order: float) -> tuple[int, bool]:
    twice = round(2 * order)
    if abs(2 * order - twice) > 1e-12 or order < 0:
        raise ValueError(f"order must be a nonnegative integer or half-integer, got {order}")
    if order > MAX_ORDER:
        raise ValueError(f"order {order} above the supported maximum {MAX_ORDER}")
    return twice // 2, bool(twice % 2)


def _start_index(n: int, x: float) -> int:
    top = max(n, int(x)) + 1
    return top + 20 + int(math.sqrt(40.0 * top))


def _series(nu: float, x: float) -> float:
    """Ascending series; used for x < 1 where recurrences lose range."""
    h = x / 2
    term = math.exp(nu * math.log(h) - math.lgamma(nu + 1)) if h > 0 else 0.0
    total, k = 0.0, 0
    while term != 0 and (k == 0 or abs(term) > 1e-17 * abs(total)):
        total += term
        k += 1
        term *= -h * h / (k * (k + nu))
    return total


def _jn_integer(n: int, x: float) -> float:
    if x == 0:
        return 1.0 if n == 0 else 0.0
    sign = 1.0
    if x < 0:
        x, sign = -x, (-1.0) ** n
    if x < 1:
        return sign * _series(n, x)
    start = _start_index(n, x)
    start += start % 2
    nxt, cur = 0.0, 1e-300
    total, wanted = 0.0, 0.0
    for m in range(start, 0, -1):
        prev = 2.0 * m / x * cur - nxt
        nxt, cur = cur, prev
        if abs(cur) > _BIG:
            cur /= _BIG
            nxt /= _BIG
            total /= _BIG
            wanted /= _BIG
        if m - 1 == n:
            wanted = cur
        if (m - 1) % 2 == 0 and m - 1 > 0:
            total += 2.0 * cur
    total += cur
    return sign * wanted / total


def _jn_half(n: int, x: float) -> float:
    """J_{n+1/2}(x) for x > 0."""
    if x == 0:
        return 0.0
    if x < 0:
        raise ValueError("half-integer Bessel functions need x >= 0")
    if x < 1:
        return _series(n + 0.5, x)
    pref = math.sqrt(2.0 / (math.pi * x))
    j_plus, j_minus = pref * math.sin(x), pref * math.cos(x)
    if n == 0:
        return j_plus
    if x > n:
        # upward recurrence is stable once x exceeds the order
        lo, hi = j_minus, j_plus
        for m in range(n):
            lo, hi = hi, (2 * (m + 0.5) / x) * hi - lo
        return hi
    start = _start_index(n, x)
    nxt, cur = 0.0, 1e-300
    wanted = 0.0
    # cur holds J_{m-1/2}; iterate down to J_{-1/2}
    for m in range(start, -1, -1):
        nu = m + 0.5
        prev = 2.0 * nu / x * cur - nxt
        nxt, cur = cur, prev
        if abs(cur) > _BIG:
            cur /= _BIG
            nxt /= _BIG
            wanted /= _BIG
        if m - 1 == n:
            wanted = cur
    # now cur = J_{-1/2} (scaled), nxt = J_{1/2} (scaled)
    if abs(j_plus) > abs(j_minus):
        return wanted * j_plus / nxt
    return wanted * j_minus / cur


def bessel_j(order: float, x: float) -> float:
    """Bessel function of the first kind for integer or half-integer order."""
    n, half = _check_order(order)
    return _jn_half(n, float(x)) if half else _jn_integer(n, float(x))


def bessel_j_derivative(order: float, x: float) -> float:
    if x == 0:
        raise ValueError("derivative evaluated at the origin")
    return order / x * bessel_j(order, x) - bessel_j(order + 1, x)


def bessel_zero(order: float, n: int) -> float:
    """n-th positive zero of J_order, by scanning for a sign change then bisecting."""
    _check_order(order)
    if n < 1:
        raise ValueError("zero index n starts at 1")
    f = lambda x: bessel_j(order, x)
    step = 0.25
    # the first zero lies beyond the order itself
    a = max(order, step)
    fa = f(a)
    found = 0
    while True:
        b = a + step
        fb = f(b)
        if fa == 0 or fa * fb < 0:
            found += 1
            if found == n:
                break
        a, fa = b, fb
    if fa == 0:
        return a
    lo, hi, flo = a, b, fa
    while hi - lo > 4e-16 * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    # one Newton polish; kept only if it stays inside the bracket
    d = bessel_j_derivative(order, x)
    if d != 0:
        y = x - f(x) / d
        if lo <= y <= hi:
            x = y
    return x


PROBLEMS = ("heat-disk", "heat-sphere", "stokes-disk", "stokes-sphere")


@dataclass(frozen=True)
class ModeReference:
    problem: str
    ell: int
    n: int
    radius: float
    coefficient: float
    zero: float
    gamma: float


def mode_reference(problem: str, ell: int, n: int, radius: float, coefficient: float) -> ModeReference:
    """Decay rate coefficient * (zero / R)^2 of a Dirichlet mode in a disk or sphere."""
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}; choose one of {PROBLEMS}")
    if problem == "stokes-sphere" and ell < 1:
        raise ValueError("Stokes modes in a sphere need ell >= 1")
    if radius <= 0 or coefficient <= 0:
        raise ValueError("radius and transport coefficient must be positive")
    order = ell + 0.5 if problem.endswith("sphere") else ell
    z = bessel_zero(order, n)
    return ModeReference(problem, ell, n, radius, coefficient, z, coefficient * (z / radius) ** 2)


def gamma_reference(problem: str, ell: int, n: int, radius: float, coefficient: float) -> float:
    return mode_reference(problem, ell, n, radius, coefficient).gamma
