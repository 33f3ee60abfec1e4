"""Exponential bracketing and a clipped Newton/bisection zero finder.

Both routines do a bounded amount of work so that many evaluations can run
side by side with identical cost.  The tolerance is deliberately coarse: the
callers only need integration endpoints, not accurate roots.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

# Newton candidates are dropped when |f'| is below this.
MIN_SLOPE = 1e-300


class BracketOverflow(RuntimeError):
    """find_range doubled past max_doublings without a sign change."""


class InvalidBracket(ValueError):
    """The endpoints of a bracket do not straddle a sign change."""


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class ZeroFindConfig:
    tol: float = 1.0
    max_iter: int = 10
    max_doublings: int = 40

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1 or self.max_doublings < 1:
            raise ValueError("max_iter and max_doublings must be >= 1")


class ZeroInfo(NamedTuple):
    iterations: int
    converged: bool
    evaluations: int


def find_range(f: Callable[[float], float], t_start: float,
               cfg: ZeroFindConfig = ZeroFindConfig()) -> Bracket:
    """Find [t_start + 2^m, t_start + 2^(m+1)] with f negative at the top.

    m is the smallest non-negative integer with f(t_start + 2^(m+1)) < 0.
    f(t_start) >= 0 is assumed.  When m = 0 and f(t_start + 1) < 0 the lower
    end is pulled back to t_start so that f(lo) >= 0 always holds.
    """
    m = 0
    while not f(t_start + 2.0 ** (m + 1)) < 0:
        m += 1
        if m > cfg.max_doublings:
            raise BracketOverflow(
                f"no sign change within t_start + 2^{cfg.max_doublings + 1}")
    lo = t_start + 2.0 ** m
    if m == 0 and not f(lo) >= 0:
        lo = t_start
    return Bracket(lo, t_start + 2.0 ** (m + 1))


def find_zero(f: Callable[[float], float], f_deriv: Callable[[float], float],
              bracket: Bracket, cfg: ZeroFindConfig = ZeroFindConfig(),
              full_output: bool = False):
    """Locate a sign change of f inside bracket.

    The endpoint where f >= 0 is the anchor; the other endpoint has f < 0.
    Either end may be the anchor.  When one end is an exact zero and the
    other is positive, the positive end is the anchor.  Each iteration probes
    the bisection midpoint and a Newton step taken from the anchor and
    clipped between the anchor and the midpoint, then keeps the smallest
    sub-interval that still straddles the sign change.  Iteration stops once
    the bracket is narrower than cfg.tol (so the root lies within cfg.tol of
    the result) or after cfg.max_iter iterations.

    Returns the final anchor, so f(result) >= 0 always.  With full_output a
    ZeroInfo is returned as well.
    """
    fa, fb = f(bracket.lo), f(bracket.hi)
    evals = 2
    if (fa >= 0 > fb) or (fb == 0 < fa):
        a, b = bracket.lo, bracket.hi
    elif (fb >= 0 > fa) or (fa == 0 < fb):
        a, b, fa = bracket.hi, bracket.lo, fb
    else:
        raise InvalidBracket(
            f"f({bracket.lo}) = {fa}, f({bracket.hi}) = {fb}: no usable sign change")

    iterations = 0
    converged = fa == 0 or abs(b - a) < cfg.tol
    while not converged and iterations < cfg.max_iter:
        mid = a + (b - a) / 2
        da = f_deriv(a)
        if abs(da) >= MIN_SLOPE:
            with np.errstate(over="ignore"):
                step = a - fa / da
            newton = np.minimum(np.maximum(step, min(a, mid)), max(a, mid))
        else:
            newton = a
        fm = f(mid)
        evals += 2
        if fm >= 0:
            a_new, b, fa = mid, b, fm
        else:
            fn = f(newton)
            evals += 1
            if fn >= 0:
                a_new, b, fa = newton, mid, fn
            else:
                a_new, b = a, newton
        iterations += 1
        a = a_new
        converged = fa == 0 or abs(b - a) < cfg.tol

    if full_output:
        return a, ZeroInfo(iterations, bool(converged), evals)
    return a
