"""log K_v(x) and its derivatives by fixed-bin trapezoid integration.

The integrand is located first: a coarse peak search, then the two points
where the log-integrand has dropped by |log eps| below its peak value.  The
trapezoid rule with a fixed number of bins is then applied in the log
domain, so the work per evaluation does not depend on (v, x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bracket import Bracket, ZeroFindConfig, find_range, find_zero
from .integrand import (
    ZERO,
    EvalPoint,
    IntegrandSpec,
    SignedLog,
    curvature_at_zero,
    d2log_integrand,
    dlog_integrand,
    log_integrand,
)

EPS = float(np.finfo(np.float64).eps)
LOG_EPS = math.log(EPS)

# Start of the peak search for integrands carrying a t^n factor.
T_START = 1e-8
# Left end of the lower-bound search for those integrands (log t -> -inf at 0).
T_MIN = 1e-300


@dataclass(frozen=True)
class QuadratureConfig:
    bins: int = 128
    zero_cfg: ZeroFindConfig = field(default_factory=ZeroFindConfig)

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("bins must be >= 2")


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class IntegrationPlan:
    t_peak: float
    g_peak: float
    t0: float
    t1: float
    bins: int

    def __post_init__(self):
        if not (0.0 <= self.t0 <= self.t_peak <= self.t1 and self.t0 < self.t1):
            raise ValueError(f"inconsistent plan {self}")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")


class _LogIntegrand:
    """Bound log-integrand that counts its own evaluations."""

    def __init__(self, spec: IntegrandSpec):
        self.v = np.float64(spec.point.v)
        self.x = np.float64(spec.point.x)
        self.n = spec.n
        self.m = spec.m
        self.calls = 0

    def __call__(self, t):
        self.calls += np.size(t)
        return log_integrand(self.v, self.x, self.n, self.m, t)

    def slope(self, t):
        self.calls += 1
        return dlog_integrand(self.v, self.x, self.n, self.m, t)

    def curvature(self, t):
        self.calls += 1
        return d2log_integrand(self.v, self.x, self.n, self.m, t)


def _zero(f, f_deriv, bracket, zcfg, trace, name):
    if trace is None:
        return find_zero(f, f_deriv, bracket, zcfg)
    t, info = find_zero(f, f_deriv, bracket, zcfg, full_output=True)
    trace.append((name, info))
    return t


def _peak(g: _LogIntegrand, cfg: QuadratureConfig, trace=None):
    if g.n == 0:
        if not curvature_at_zero(g.v, g.x, g.m) > 0:
            return np.float64(0.0)
        start = np.float64(0.0)
    else:
        start = np.float64(T_START)
    zcfg = cfg.zero_cfg
    bracket = find_range(g.slope, start, zcfg)
    # anchored past the peak, where the slope is negative
    return _zero(lambda t: -g.slope(t), lambda t: -g.curvature(t), bracket, zcfg, trace, "peak")


def _bounds(g: _LogIntegrand, t_peak, g_peak, cfg: QuadratureConfig, trace=None):
    zcfg = cfg.zero_cfg

    def depth(t):
        return g(t) - g_peak - LOG_EPS

    def outside(t):
        return -depth(t)

    def outside_slope(t):
        return -g.slope(t)

    if g.n == 0:
        lo = np.float64(0.0)
        need_left = not depth(lo) > 0
    else:
        lo = np.float64(T_MIN)
        need_left = True
    t0 = np.float64(0.0)
    if need_left:
        t0 = _zero(outside, outside_slope, Bracket(lo, t_peak), zcfg, trace, "lower")

    bracket = find_range(depth, t_peak, zcfg)
    t1 = _zero(outside, outside_slope, bracket, zcfg, trace, "upper")
    return t0, t1


def _integrate(g: _LogIntegrand, t0, t1, g_peak, bins: int):
    h = (t1 - t0) / bins
    t = t0 + np.arange(bins + 1, dtype=np.float64) * h
    w = np.exp(g(t) - g_peak)
    w[0] *= 0.5
    w[-1] *= 0.5
    total = np.cumsum(w)[-1]
    return g_peak + np.log(h * total)


def _evaluate(spec: IntegrandSpec, cfg: QuadratureConfig, trace=None):
    """Run the whole pipeline; returns (SignedLog, plan or None, evaluations).

    If trace is a list, (search name, ZeroInfo) is appended for every zero
    search that runs.
    """
    if spec.vanishes:
        return ZERO, None, 0
    g = _LogIntegrand(spec)
    t_peak = _peak(g, cfg, trace)
    g_peak = g(t_peak)
    t0, t1 = _bounds(g, t_peak, g_peak, cfg, trace)
    value = _integrate(g, t0, t1, g_peak, cfg.bins)
    plan = IntegrationPlan(float(t_peak), float(g_peak), float(t0), float(t1), cfg.bins)
    return SignedLog.make(spec.sign, float(value)), plan, g.calls


def evaluation_bound(cfg: QuadratureConfig) -> int:
    """Upper bound on integrand evaluations for one scalar evaluation."""
    z = cfg.zero_cfg
    per_range = z.max_doublings + 2
    per_zero = 2 + 3 * z.max_iter
    # two bracketings, three zero searches, g at the peak, depth at 0, the grid
    return 2 * per_range + 3 * per_zero + 2 + cfg.bins + 1


# Public surface

def find_peak(spec: IntegrandSpec, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Return (t_peak, g_peak) for the log-integrand of spec."""
    g = _LogIntegrand(spec)
    t_peak = _peak(g, cfg)
    return float(t_peak), float(g(t_peak))


def find_bounds(spec: IntegrandSpec, t_peak: float, g_peak: float,
                cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Return (t0, t1) bracketing the region within |log eps| of the peak."""
    g = _LogIntegrand(spec)
    t0, t1 = _bounds(g, np.float64(t_peak), np.float64(g_peak), cfg)
    return float(t0), float(t1)


def plan_integration(spec: IntegrandSpec, cfg: QuadratureConfig = DEFAULT_CONFIG) -> IntegrationPlan:
    t_peak, g_peak = find_peak(spec, cfg)
    t0, t1 = find_bounds(spec, t_peak, g_peak, cfg)
    return IntegrationPlan(t_peak, g_peak, t0, t1, cfg.bins)


def zero_search_report(spec: IntegrandSpec, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """(name, ZeroInfo) for each zero search one evaluation of spec performs."""
    trace = []
    _evaluate(spec, cfg, trace)
    return trace


def integrate(spec: IntegrandSpec, plan: IntegrationPlan) -> SignedLog:
    """Trapezoid rule on plan's range, accumulated in ascending order."""
    g = _LogIntegrand(spec)
    value = _integrate(g, np.float64(plan.t0), np.float64(plan.t1),
                       np.float64(plan.g_peak), plan.bins)
    return SignedLog.make(spec.sign, float(value))


def log_bessel_k(v, x=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """log K_v(x).

    Accepts either an EvalPoint or the pair (v, x).
    """
    point = v if isinstance(v, EvalPoint) else EvalPoint(v, x)
    result, _, _ = _evaluate(IntegrandSpec(point), cfg)
    return result.log_abs


def log_bessel_k_deriv(point: EvalPoint, n: int, m: int,
                       cfg: QuadratureConfig = DEFAULT_CONFIG) -> SignedLog:
    """d^n/dv^n d^m/dx^m K_v(x) as a SignedLog."""
    if n + m < 1:
        raise ValueError("use log_bessel_k for n = m = 0")
    result, _, _ = _evaluate(IntegrandSpec(point, n, m), cfg)
    return result


def log_bessel_k_dlogx(point: EvalPoint, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """d/dx log K_v(x) = -v/x - K_{v-1}(x) / K_v(x)."""
    lower = EvalPoint(point.v - 1.0, point.x)
    ratio = math.exp(log_bessel_k(lower, cfg=cfg) - log_bessel_k(point, cfg=cfg))
    return -point.v / point.x - ratio
