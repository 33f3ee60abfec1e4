"""Log-domain primitives and the log-integrand family of K_v(x).

K_v(x) is the integral over t >= 0 of cosh(v t) exp(-x cosh t).  Taking n
derivatives in v and m in x gives integrands whose absolute value is

    t^n cosh(t)^m [cosh(v t) or sinh(v t)] exp(-x cosh t)

(cosh for even n, sinh for odd n) with an overall sign (-1)^m.  Everything
here works on the log of that absolute value.

All elementwise math goes through numpy ufuncs so that a scalar call and a
lane of an array call produce the same bits; the batch module relies on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG2 = math.log(2.0)
MAX_DERIV_ORDER = 3

# Below this the direct forms are exact enough and cannot overflow.
_SWITCH = 20.0
_LOG_MAX = math.log(np.finfo(np.float64).max)


class DomainError(ValueError):
    """Raised for arguments outside the domain x > 0 with finite v."""


def log_cosh(t):
    """log(cosh t), accurate for small t and safe for huge t."""
    t = np.abs(t)
    s = np.sinh(0.5 * np.minimum(t, _SWITCH))
    small = np.log1p(2.0 * s * s)
    large = t - LOG2 + np.log1p(np.exp(-2.0 * t))
    return np.where(t < _SWITCH, small, large)


def log_sinh(t):
    """log(sinh t) for t > 0.  Returns -inf at t = 0."""
    with np.errstate(divide="ignore"):
        small = np.log(np.sinh(np.minimum(t, _SWITCH)))
        large = t - LOG2 + np.log1p(-np.exp(-2.0 * t))
    return np.where(t < _SWITCH, small, large)


@dataclass(frozen=True)
class EvalPoint:
    v: float
    x: float

    def __post_init__(self):
        v, x = float(self.v), float(self.x)
        if not math.isfinite(v):
            raise DomainError(f"order must be finite, got {v}")
        if not (math.isfinite(x) and x > 0.0):
            raise DomainError(f"argument must be finite and positive, got {x}")
        # K_{-v} = K_v
        object.__setattr__(self, "v", abs(v))
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class IntegrandSpec:
    point: EvalPoint
    n: int = 0
    m: int = 0

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise ValueError("derivative orders must be non-negative")
        if self.n + self.m > MAX_DERIV_ORDER:
            raise ValueError(f"n + m must be <= {MAX_DERIV_ORDER}")

    @property
    def sign(self) -> int:
        return -1 if self.m % 2 else 1

    @property
    def vanishes(self) -> bool:
        """True when the integrand is identically zero (odd n at v = 0)."""
        return self.n % 2 == 1 and self.point.v == 0.0


@dataclass(frozen=True)
class SignedLog:
    """A real number stored as sign and log of its magnitude."""

    sign: int
    log_abs: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if (self.sign == 0) != (self.log_abs == -math.inf):
            raise ValueError("sign is 0 exactly when log_abs is -inf")

    @classmethod
    def from_float(cls, value: float) -> SignedLog:
        if value == 0.0:
            return ZERO
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def make(cls, sign: int, log_abs: float) -> SignedLog:
        """Build from a raw pair, collapsing a -inf magnitude to zero."""
        if log_abs == -math.inf or sign == 0:
            return ZERO
        return cls(sign, float(log_abs))

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_abs > _LOG_MAX:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_abs)

    def __neg__(self) -> SignedLog:
        return SignedLog(-self.sign, self.log_abs)

    def __mul__(self, other: SignedLog) -> SignedLog:
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return SignedLog(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other: SignedLog) -> SignedLog:
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero SignedLog")
        if self.sign == 0:
            return ZERO
        return SignedLog(self.sign * other.sign, self.log_abs - other.log_abs)

    def __add__(self, other: SignedLog) -> SignedLog:
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        big, small = (self, other) if self.log_abs >= other.log_abs else (other, self)
        ratio = math.exp(small.log_abs - big.log_abs)
        if big.sign == small.sign:
            return SignedLog(big.sign, big.log_abs + math.log1p(ratio))
        if ratio == 1.0:
            return ZERO
        return SignedLog(big.sign, big.log_abs + math.log1p(-ratio))

    def __sub__(self, other: SignedLog) -> SignedLog:
        return self + (-other)


ZERO = SignedLog(0, -math.inf)


# Array-level kernels.  n and m are Python ints; v, x, t broadcast.

def log_integrand(v, x, n: int, m: int, t):
    """log |f^{(n,m)}(t)| including the decaying -x cosh t factor."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = log_sinh(v * t) if n % 2 else log_cosh(v * t)
        if n:
            out = out + n * np.log(t)
        if m:
            out = out + m * log_cosh(t)
        return out - x * np.cosh(t)


def dlog_integrand(v, x, n: int, m: int, t):
    """First t-derivative of log_integrand."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if n % 2:
            out = v / np.tanh(v * t)
        else:
            out = v * np.tanh(v * t)
        if n:
            out = out + n / t
        if m:
            out = out + m * np.tanh(t)
        return out - x * np.sinh(t)


def d2log_integrand(v, x, n: int, m: int, t):
    """Second t-derivative of log_integrand."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if n % 2:
            s = np.sinh(v * t)
            out = -(v * v) / (s * s)
        else:
            c = np.cosh(v * t)
            out = (v * v) / (c * c)
        if n:
            out = out - n / (t * t)
        if m:
            ct = np.cosh(t)
            out = out + m / (ct * ct)
        return out - x * np.cosh(t)


def curvature_at_zero(v, x, m: int = 0):
    """Second t-derivative at t = 0 of the n = 0 log-integrands: v^2 + m - x."""
    return v * v + m - x


# Scalar surface

def log_g(spec: IntegrandSpec, t: float) -> SignedLog:
    p = spec.point
    value = float(log_integrand(p.v, p.x, spec.n, spec.m, np.float64(t)))
    return SignedLog.make(spec.sign, value)


def g_prime(point: EvalPoint, t: float) -> float:
    """v tanh(v t) - x sinh(t)."""
    return float(dlog_integrand(point.v, point.x, 0, 0, np.float64(t)))


def g_second_at_zero(point: EvalPoint) -> float:
    return float(curvature_at_zero(np.float64(point.v), np.float64(point.x)))
