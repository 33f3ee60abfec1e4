"""Classical baselines for log K_v(x): series, continued fraction, asymptotic.

The series and continued fraction compute K_u and K_{u+1} for a fractional
order |u| <= 1/2 and climb to v = u + n with the forward recurrence
K_{w+1} = (2w/x) K_w + K_{w-1}, carried out on logs.  The asymptotic method
is the uniform large-order expansion and needs no recurrence.

Each method also reports its cost through the ``*_with_work`` variants, as
an operation count: the flops of each loop body tallied from the code, with
every exp/log/sin/... call weighted as TRANSCENDENTAL flops.  The region maps
rank methods by it; unlike wall time it is deterministic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .integrand import EvalPoint

EPS = float(np.finfo(np.float64).eps)

# v at and above which the combined selector uses the asymptotic expansion
ASYMPTOTIC_MIN_ORDER = 25.0


# Cost model, in flops.
TRANSCENDENTAL = 20
SERIES_SETUP = 5 * TRANSCENDENTAL + 80     # sin, sinh, cosh, exp, log; gamma Horner
SERIES_TERM = 22
CF_SETUP = 3 * TRANSCENDENTAL + 10         # the closing logs
CF_ITERATION = 23
RECURRENCE_STEP = 3 * TRANSCENDENTAL + 7   # log, exp, log1p per step
ASYMPTOTIC_SETUP = 5 * TRANSCENDENTAL + 10
ASYMPTOTIC_COEFFICIENT = 5                 # value and size bound, one Horner step each
ASYMPTOTIC_LAYER = 6


class NoConvergence(ArithmeticError):
    pass


@dataclass(frozen=True)
class FractionalOrder:
    u: float
    n_steps: int

    @classmethod
    def split(cls, v: float) -> FractionalOrder:
        v = abs(v)
        n = int(round(v))
        return cls(v - n, n)


class MethodRegion(enum.Enum):
    SERIES = "S"
    CONTINUED_FRACTION = "C"
    ASYMPTOTIC = "A"


def _logaddexp(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


def recurrence_lift(u: float, log_k_u: float, log_k_u1: float, x: float, steps: int) -> float:
    """log K_{u+steps}(x) from log K_u and log K_{u+1} by forward recurrence."""
    if steps == 0:
        return log_k_u
    lo, hi = log_k_u, log_k_u1
    log_x = math.log(x)
    for s in range(1, steps):
        lo, hi = hi, _logaddexp(math.log(2.0 * (u + s)) - log_x + hi, lo)
    return hi


# --- small-x series -------------------------------------------------------

@lru_cache(maxsize=1)
def _rgamma_taylor():
    """Taylor coefficients of 1/Gamma(1+z) about z = 0."""
    import mpmath

    with mpmath.workdps(40):
        coeffs = mpmath.taylor(lambda z: mpmath.rgamma(1 + z), 0, 30)
    return tuple(float(c) for c in coeffs)


def _temme_gammas(mu: float):
    """gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu) and gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2.

    Both come from the Taylor series, which stays exact as mu -> 0 where the
    difference quotient would cancel.
    """
    c = _rgamma_taylor()
    gam1 = gam2 = 0.0
    for k in range(len(c) - 1, -1, -1):
        if k % 2:
            gam1 = gam1 * mu * mu - c[k]
        else:
            gam2 = gam2 * mu * mu + c[k]
    return gam1, gam2


def _series_fractional(mu: float, x: float, terms_max: int, rtol: float):
    gam1, gam2 = _temme_gammas(mu)
    gampl = gam2 - mu * gam1  # 1/Gamma(1+mu)
    gammi = gam2 + mu * gam1  # 1/Gamma(1-mu)
    half_x = 0.5 * x
    pimu = math.pi * mu
    fact = pimu / math.sin(pimu) if pimu != 0.0 else 1.0
    d = -math.log(half_x)
    e = mu * d
    fact2 = math.sinh(e) / e if e != 0.0 else 1.0
    f = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = f
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = half_x * half_x
    total1 = p
    # f_n = (n f_{n-1} + p_n + q_n) / (n^2 - mu^2); the printed "+ mu^2"
    # denominator does not reproduce K_mu against the oracle.
    for i in range(1, terms_max + 1):
        f = (i * f + p + q) / (i * i - mu * mu)
        c *= d / i
        p /= i - mu
        q /= i + mu
        term = c * f
        total += term
        total1 += c * (p - i * f)
        if abs(term) < abs(total) * rtol:
            return total, total1 / half_x, i
    raise NoConvergence(f"series did not converge in {terms_max} terms at x={x}")


def series_log_k_with_work(point: EvalPoint, terms_max: int = 100, rtol: float = EPS):
    frac = FractionalOrder.split(point.v)
    k_u, k_u1, terms = _series_fractional(frac.u, point.x, terms_max, rtol)
    if not (k_u > 0 and k_u1 > 0):
        raise NoConvergence(f"series lost all precision at x={point.x}")
    value = recurrence_lift(frac.u, math.log(k_u), math.log(k_u1), point.x, frac.n_steps)
    return value, SERIES_SETUP + SERIES_TERM * terms + RECURRENCE_STEP * frac.n_steps


def series_log_k(point: EvalPoint, terms_max: int = 100, rtol: float = EPS) -> float:
    return series_log_k_with_work(point, terms_max, rtol)[0]


# --- continued fraction -----------------------------------------------------

def _cf_fractional(mu: float, x: float, terms_max: int, rtol: float):
    """log K_mu and log K_{mu+1} from Steed's recursion with Temme's normalisation.

    a_n = (n - 1/2)^2 - mu^2, b_n = 2 (x + n).  The loop carries the Steed
    ratio sum h = sum r_n, the minimal-solution ratios q_n = p_n / p_0, and
    the coefficients d_n = a_1 ... a_n / n!, accumulating
    s = 1 + sum_n r_n sum_{k<=n} d_k q_k = 1 / p_0.
    """
    b = 2.0 * (1.0 + x)
    dd = 1.0 / b
    h = delh = dd
    q_prev, q_cur = 0.0, 1.0
    a1 = 0.25 - mu * mu
    qsum = coef = a1
    a = -a1
    s = 1.0 + qsum * delh
    for i in range(1, terms_max + 1):
        a -= 2 * i
        coef = -a * coef / (i + 1.0)
        q_next = (q_prev - b * q_cur) / a
        q_prev, q_cur = q_cur, q_next
        qsum += coef * q_next
        b += 2.0
        dd = 1.0 / (b + a * dd)
        delh = (b * dd - 1.0) * delh
        h += delh
        dels = qsum * delh
        s += dels
        if abs(dels / s) < rtol:
            break
    else:
        raise NoConvergence(f"continued fraction did not converge in {terms_max} terms at x={x}")
    if not s > 0:
        raise NoConvergence(f"continued fraction normalisation failed at x={x}")
    log_k = 0.5 * math.log(math.pi / (2.0 * x)) - x - math.log(s)
    ratio = (mu + x + 0.5 - a1 * h) / x
    if not ratio > 0:
        raise NoConvergence(f"continued fraction ratio not positive at x={x}")
    return log_k, log_k + math.log(ratio), i


def continued_fraction_log_k_with_work(point: EvalPoint, terms_max: int = 200, rtol: float = EPS):
    frac = FractionalOrder.split(point.v)
    lk, lk1, terms = _cf_fractional(frac.u, point.x, terms_max, rtol)
    value = recurrence_lift(frac.u, lk, lk1, point.x, frac.n_steps)
    return value, CF_SETUP + CF_ITERATION * terms + RECURRENCE_STEP * frac.n_steps


def continued_fraction_log_k(point: EvalPoint, terms_max: int = 200, rtol: float = EPS) -> float:
    return continued_fraction_log_k_with_work(point, terms_max, rtol)[0]


# --- uniform asymptotic expansion -----------------------------------------

@lru_cache(maxsize=None)
def asymptotic_coefficients(order: int) -> tuple[tuple[Fraction, ...], ...]:
    """Exact c[i][j], 0 <= j <= i <= order, of the large-order expansion.

    c[i+1][j] = ((k-2)/2 + 5/(8(k+1))) c[i][j-1] - (k/2 + 1/(8(k+1))) c[i][j]
    with k = i + 2j, c[0][0] = 1 and zero outside 0 <= j <= i.
    """
    rows = [(Fraction(1),)]
    for i in range(order):
        prev = rows[-1]

        def at(j):
            return prev[j] if 0 <= j <= i else Fraction(0)

        row = []
        for j in range(i + 2):
            k = i + 2 * j
            row.append((Fraction(k - 2, 2) + Fraction(5, 8 * (k + 1))) * at(j - 1)
                       - (Fraction(k, 2) + Fraction(1, 8 * (k + 1))) * at(j))
        rows.append(tuple(row))
    return tuple(rows)


@lru_cache(maxsize=None)
def _float_coefficients(order: int):
    return tuple(tuple(float(c) for c in row) for row in asymptotic_coefficients(order))


def asymptotic_log_k_with_work(point: EvalPoint, order_max: int = 20, rtol: float = EPS):
    v, x = point.v, point.x
    p = math.hypot(v, x)
    q = (v / p) ** 2
    coeffs = _float_coefficients(order_max)
    total = 1.0
    inv_p = 1.0 / p
    scale = 1.0
    prev = math.inf
    work = ASYMPTOTIC_SETUP
    for i in range(1, order_max + 1):
        scale *= inv_p
        poly = size = 0.0
        for c in reversed(coeffs[i]):
            poly = poly * q + c
            size = size * q + abs(c)
        # size bounds |layer| without the cancellation inside poly
        size *= scale
        if i == 1 and size >= 1.0:
            raise NoConvergence(f"asymptotic expansion useless at v={v}, x={x}")
        if size > prev:
            # divergent tail: stop at the smallest layer
            break
        total += poly * scale
        work += ASYMPTOTIC_COEFFICIENT * (i + 1) + ASYMPTOTIC_LAYER
        if size < rtol * abs(total):
            break
        prev = size
    if not total > 0:
        raise NoConvergence(f"asymptotic sum not positive at v={v}, x={x}")
    log_k = (0.5 * math.log(math.pi / (2.0 * p))
             + v * (math.log(v + p) - math.log(x)) - p
             + math.log(total))
    return log_k, work


def asymptotic_log_k(point: EvalPoint, order_max: int = 20, rtol: float = EPS) -> float:
    return asymptotic_log_k_with_work(point, order_max, rtol)[0]


# --- combined selector ------------------------------------------------------

def series_boundary(v: float) -> float:
    """x below which the series beats the continued fraction."""
    return 1.6 + 0.5 * math.log(v + 1.0)


def select_method(point: EvalPoint) -> MethodRegion:
    if point.v >= ASYMPTOTIC_MIN_ORDER:
        return MethodRegion.ASYMPTOTIC
    if point.x < series_boundary(point.v):
        return MethodRegion.SERIES
    return MethodRegion.CONTINUED_FRACTION


METHODS = {
    MethodRegion.SERIES: series_log_k_with_work,
    MethodRegion.CONTINUED_FRACTION: continued_fraction_log_k_with_work,
    MethodRegion.ASYMPTOTIC: asymptotic_log_k_with_work,
}


def sca_log_k_with_work(point: EvalPoint):
    return METHODS[select_method(point)](point)


def sca_log_k(point: EvalPoint) -> float:
    return sca_log_k_with_work(point)[0]
