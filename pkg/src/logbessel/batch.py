"""Batch evaluation with uniform per-point work.

The lockstep backend runs the scalar algorithm on whole arrays.  Every lane
performs the full bracketing and the full max_iter zero-finder iterations;
lanes that finished early keep computing but their state is frozen by
masks.  This is what a SIMD unit or a GPU warp does, so every lane costs the
same.  The kernels are the numpy ufunc expressions used by the scalar path,
which makes the results bit-identical to it.

The concurrent backend simply runs the scalar path on chunks of points in a
process pool.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bracket import MIN_SLOPE, BracketOverflow, InvalidBracket
from .integrand import (
    DomainError,
    EvalPoint,
    IntegrandSpec,
    SignedLog,
    ZERO,
    curvature_at_zero,
    d2log_integrand,
    dlog_integrand,
    log_integrand,
)
from .quadrature import DEFAULT_CONFIG, LOG_EPS, T_MIN, T_START, QuadratureConfig, _evaluate

LOCKSTEP = "lockstep"
CONCURRENT = "concurrent"


@dataclass(frozen=True)
class BatchRequest:
    """Points may be EvalPoints or raw (v, x) pairs; bad pairs become errors."""

    points: Sequence
    n: int = 0
    m: int = 0
    cfg: QuadratureConfig = DEFAULT_CONFIG

    def __post_init__(self):
        IntegrandSpec(EvalPoint(1.0, 1.0), self.n, self.m)


@dataclass
class BatchResult:
    values: list            # SignedLog, or None where errors has an entry
    work_stats: np.ndarray  # integrand evaluations per point
    errors: list = field(default_factory=list)  # (index, exception), by index

    def log_values(self) -> np.ndarray:
        return np.array([np.nan if r is None else r.log_abs for r in self.values])


def lockstep_work(cfg: QuadratureConfig) -> int:
    """Integrand evaluations every lane performs in the lockstep backend."""
    z = cfg.zero_cfg
    per_range = z.max_doublings + 2
    per_zero = 2 + 3 * z.max_iter
    return 2 * per_range + 3 * per_zero + 2 + cfg.bins + 1


class _Lanes:
    """Vectorised log-integrand over all lanes, counting evaluations per lane."""

    def __init__(self, v, x, n, m):
        self.v, self.x, self.n, self.m = v, x, n, m
        self.calls = 0

    def value(self, t):
        self.calls += 1
        return log_integrand(self.v, self.x, self.n, self.m, t)

    def slope(self, t):
        self.calls += 1
        return dlog_integrand(self.v, self.x, self.n, self.m, t)

    def curvature(self, t):
        self.calls += 1
        return d2log_integrand(self.v, self.x, self.n, self.m, t)

    def grid(self, t):
        """value() on a (lanes, nodes) array; counts one evaluation per node."""
        self.calls += t.shape[1]
        return log_integrand(self.v[:, None], self.x[:, None], self.n, self.m, t)


def _find_range(f, start, max_doublings):
    """Lockstep find_range: always max_doublings + 2 evaluations."""
    found = np.full(start.shape, -1)
    for k in range(max_doublings + 1):
        fk = f(start + 2.0 ** (k + 1))
        found = np.where((found < 0) & (fk < 0), k, found)
    overflow = found < 0
    k = np.where(overflow, 0, found)
    lo = start + 2.0 ** k
    hi = start + 2.0 ** (k + 1)
    f_lo = f(lo)
    lo = np.where((k == 0) & ~(f_lo >= 0), start, lo)
    return lo, hi, overflow


def _find_zero(f, f_deriv, lo, hi, tol, max_iter):
    """Lockstep find_zero: always 2 + 3 * max_iter evaluations."""
    fa, fb = f(lo), f(hi)
    keep_lo = (fa >= 0) & (fb < 0) | (fb == 0) & (fa > 0)
    keep_hi = (fb >= 0) & (fa < 0) | (fa == 0) & (fb > 0)
    invalid = ~(keep_lo | keep_hi)
    a = np.where(keep_hi, hi, lo)
    b = np.where(keep_hi, lo, hi)
    fa = np.where(keep_hi, fb, fa)
    done = invalid | (fa == 0) | (np.abs(b - a) < tol)
    for _ in range(max_iter):
        mid = a + (b - a) / 2
        da = f_deriv(a)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = np.minimum(np.maximum(a - fa / da, np.minimum(a, mid)), np.maximum(a, mid))
        newton = np.where(np.abs(da) >= MIN_SLOPE, step, a)
        fm = f(mid)
        fn = f(newton)
        take_mid = fm >= 0
        take_newton = ~take_mid & (fn >= 0)
        a_new = np.where(take_mid, mid, np.where(take_newton, newton, a))
        b_new = np.where(take_mid, b, np.where(take_newton, mid, newton))
        fa_new = np.where(take_mid, fm, np.where(take_newton, fn, fa))
        a = np.where(done, a, a_new)
        b = np.where(done, b, b_new)
        fa = np.where(done, fa, fa_new)
        done = done | (fa == 0) | (np.abs(b - a) < tol)
    return a, invalid


def _lockstep(v, x, n, m, cfg: QuadratureConfig):
    """Returns (log values, per-lane failure messages, evaluation count)."""
    z = cfg.zero_cfg
    lanes = _Lanes(v, x, n, m)
    failure = np.full(v.shape, None, dtype=object)

    def fail(mask, message):
        failure[mask & (failure == None)] = message  # noqa: E711

    zeros = np.zeros_like(v)
    if n == 0:
        need_peak = curvature_at_zero(v, x, m) > 0
        start = zeros
    else:
        need_peak = np.ones(v.shape, dtype=bool)
        start = np.full_like(v, T_START)
    lo, hi, overflow = _find_range(lanes.slope, start, z.max_doublings)
    fail(need_peak & overflow, "BracketOverflow: peak search")
    t_peak, invalid = _find_zero(lambda t: -lanes.slope(t), lambda t: -lanes.curvature(t),
                                 lo, hi, z.tol, z.max_iter)
    fail(need_peak & invalid, "InvalidBracket: peak search")
    t_peak = np.where(need_peak, t_peak, zeros)
    g_peak = lanes.value(t_peak)

    def depth(t):
        return lanes.value(t) - g_peak - LOG_EPS

    def outside(t):
        return -depth(t)

    def outside_slope(t):
        return -lanes.slope(t)

    if n == 0:
        left = zeros
        need_left = ~(depth(left) > 0)
    else:
        left = np.full_like(v, T_MIN)
        need_left = np.ones(v.shape, dtype=bool)
        lanes.calls += 1  # the scalar path spends no evaluation here; keep the count uniform
    t0, invalid = _find_zero(outside, outside_slope, left, t_peak, z.tol, z.max_iter)
    fail(need_left & invalid, "InvalidBracket: lower bound")
    t0 = np.where(need_left, t0, zeros)

    lo, hi, overflow = _find_range(depth, t_peak, z.max_doublings)
    fail(overflow, "BracketOverflow: upper bound")
    t1, invalid = _find_zero(outside, outside_slope, lo, hi, z.tol, z.max_iter)
    fail(invalid, "InvalidBracket: upper bound")

    h = (t1 - t0) / cfg.bins
    t = t0[:, None] + np.arange(cfg.bins + 1, dtype=np.float64)[None, :] * h[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.exp(lanes.grid(t) - g_peak[:, None])
    w[:, 0] *= 0.5
    w[:, -1] *= 0.5
    total = np.cumsum(w, axis=1)[:, -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = g_peak + np.log(h * total)
    return out, failure, lanes.calls


def _coerce(points):
    good, bad = [], []
    for i, p in enumerate(points):
        try:
            good.append((i, p if isinstance(p, EvalPoint) else EvalPoint(*p)))
        except (DomainError, TypeError, ValueError) as exc:
            bad.append((i, exc if isinstance(exc, DomainError) else DomainError(str(exc))))
    return good, bad


def _evaluate_lockstep(req: BatchRequest, good):
    size = len(req.points)
    values = [None] * size
    work = np.zeros(size, dtype=np.int64)
    errors = []
    if not good:
        return values, work, errors
    index = np.array([i for i, _ in good])
    v = np.array([p.v for _, p in good], dtype=np.float64)
    x = np.array([p.x for _, p in good], dtype=np.float64)
    # lanes with an identically zero integrand produce nan here; they are
    # replaced by ZERO below
    with np.errstate(invalid="ignore"):
        out, failure, calls = _lockstep(v, x, req.n, req.m, req.cfg)
    sign = -1 if req.m % 2 else 1
    vanishes = (req.n % 2 == 1) & (v == 0.0)
    work[index] = calls
    for lane, i in enumerate(index):
        if vanishes[lane]:
            values[i] = ZERO
        elif failure[lane] is not None:
            kind, _, where = failure[lane].partition(": ")
            exc_type = BracketOverflow if kind == "BracketOverflow" else InvalidBracket
            errors.append((int(i), exc_type(where)))
        else:
            values[i] = SignedLog.make(sign, float(out[lane]))
    return values, work, errors


def _scalar_chunk(args):
    points, n, m, cfg = args
    out = []
    for p in points:
        try:
            value, _, calls = _evaluate(IntegrandSpec(p, n, m), cfg)
            out.append((value, calls, None))
        except (BracketOverflow, InvalidBracket) as exc:
            out.append((None, 0, exc))
    return out


def _evaluate_concurrent(req: BatchRequest, good, workers):
    size = len(req.points)
    values = [None] * size
    work = np.zeros(size, dtype=np.int64)
    errors = []
    workers = workers or os.cpu_count() or 1
    chunk = max(1, math.ceil(len(good) / workers))
    jobs = [good[k:k + chunk] for k in range(0, len(good), chunk)]
    payload = [([p for _, p in job], req.n, req.m, req.cfg) for job in jobs]
    if workers == 1 or len(jobs) <= 1:
        results = map(_scalar_chunk, payload)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        with pool:
            results = list(pool.map(_scalar_chunk, payload))
    for job, res in zip(jobs, results):
        for (i, _), (value, calls, exc) in zip(job, res):
            work[i] = calls
            if exc is None:
                values[i] = value
            else:
                errors.append((i, exc))
    return values, work, errors


def evaluate_batch(req: BatchRequest, backend: str = LOCKSTEP, workers: int | None = None) -> BatchResult:
    """Evaluate every point of req; failures are collected, not raised."""
    if len(req.points) == 0:
        raise ValueError("empty batch")
    good, errors = _coerce(req.points)
    if backend == LOCKSTEP:
        values, work, more = _evaluate_lockstep(req, good)
    elif backend == CONCURRENT:
        values, work, more = _evaluate_concurrent(req, good, workers)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    errors = sorted(errors + more, key=lambda e: e[0])
    return BatchResult(values, work, errors)


def log_bessel_k_batch(v, x, cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Vectorised log K_v(x) over broadcast arrays (lockstep backend)."""
    v, x = np.broadcast_arrays(np.abs(np.asarray(v, dtype=np.float64)),
                               np.asarray(x, dtype=np.float64))
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(x)) and np.all(x > 0)):
        raise DomainError("need finite v and finite x > 0")
    out, failure, _ = _lockstep(v.ravel(), x.ravel(), 0, 0, cfg)
    bad = failure != None  # noqa: E711
    if bad.any():
        raise BracketOverflow(str(failure[bad][0]))
    return out.reshape(v.shape)
