"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from logbessel import bench
from logbessel.batch import BatchRequest, evaluate_batch, lockstep_work
from logbessel.bracket import BracketOverflow
from logbessel.integrand import EvalPoint, IntegrandSpec
from logbessel.oracle import half_integer_log_k, read_reference, reference_row
from logbessel.quadrature import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    _evaluate,
    log_bessel_k,
    log_bessel_k_deriv,
    log_bessel_k_dlogx,
    zero_search_report,
)
from logbessel.reference import asymptotic_coefficients

TABLE = Path(__file__).parent / "data" / "reference_100x33.tsv"
GRID = bench.GridSpec()
metric = bench.error_metric


class CriterionNotMet(AssertionError):
    """A measured shortfall against a target that is recorded, not tuned away."""


@pytest.fixture(scope="module")
def grid_accuracy():
    start = time.perf_counter()
    report = bench.run_accuracy(bench.GridSpec(methods=("I", "S", "C", "A")), TABLE)
    return report, time.perf_counter() - start


def test_1_accuracy_grid(grid_accuracy, criterion):
    report, _ = grid_accuracy
    s = report.summary
    # oracle cost: time one x-row of the table (with derivative columns) and scale to the grid
    start = time.perf_counter()
    for x in GRID.xs()[::11]:
        reference_row(99.0, float(x), derivatives=True)
    oracle_s = (time.perf_counter() - start) / 3 * len(GRID.cells())
    ok = s["I_max"] < 4 and s["I_mean"] < 1.5 and s["I_runtime_s"] < 60 and oracle_s < 600
    criterion(1, ok, f"I max={s['I_max']:.3f} mean={s['I_mean']:.4f} runtime={s['I_runtime_s']:.2f}s "
                     f"oracle~{oracle_s:.0f}s (extrapolated)")
    assert ok


def test_2_closed_forms(criterion):
    worst = 0.0
    for u in (0.5, 1.5, 2.5):
        for x in (0.1, 1.0, 10.0, 100.0):
            want = float(half_integer_log_k(u, x, 30))
            worst = max(worst, metric(log_bessel_k(u, x), want))
    ok = worst < 1
    criterion(2, ok, f"worst half-integer metric={worst:.3f}")
    assert ok


def test_3_recurrence_identity(criterion):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for u, x in zip(rng.uniform(0, 10, 1000), rng.uniform(0.5, 50, 1000)):
        # K_{u+1} = (2u/x) K_u + K_{u-1}, all in logs
        lifted = np.logaddexp(math.log(2 * u / x) + log_bessel_k(u, x), log_bessel_k(u - 1, x))
        worst = max(worst, metric(float(lifted), log_bessel_k(u + 1, x)))
    ok = worst < 2
    criterion(3, ok, f"worst residual metric over 1000 points={worst:.3f}")
    assert ok


def test_4_baseline_regions(grid_accuracy, criterion):
    report, _ = grid_accuracy
    worst = {"S": 0.0, "C": 0.0, "A": 0.0}
    inside = {"S": lambda v, x: x < 1.6, "C": lambda v, x: x > 2, "A": lambda v, x: v >= 25}
    for v, x, method, err in report.rows:
        if method in inside and inside[method](v, x):
            worst[method] = max(worst[method], err)
    ok = all(w < 4 for w in worst.values())
    criterion(4, ok, " ".join(f"{k} max={w:.3f}" for k, w in worst.items()))
    assert ok


@pytest.mark.xfail(raises=CriterionNotMet, strict=True,
                   reason="S/C split measured at x=5.54 for v=18, outside [1, 5]")
def test_5_region_maps(criterion):
    report = bench.run_regions(GRID, TABLE)
    share = report.summary["A_fastest_share_large_v"]
    splits = bench.region_splits(report)
    outside = {v: s for v, s in splits.items() if s is None or not 1 <= s <= 5}
    ok = share >= 0.9 and not outside
    shown = ", ".join(f"v={v:g}:{s:.2f}" for v, s in sorted(outside.items()) if s is not None)
    criterion(5, ok, f"A fastest share (v>=25)={share:.3f}; split outside [1,5] at {len(outside)} "
                     f"orders {shown}")
    assert share >= 0.9
    if outside:
        raise CriterionNotMet(f"split outside [1, 5]: {outside}")


def test_6_derivatives(criterion):
    vs = np.logspace(math.log10(0.5), math.log10(99), 20)
    xs = np.logspace(-1, 2.1, 20)
    worst_v = worst_x = worst_ratio = 0.0
    for v in vs:
        for x in xs:
            p = EvalPoint(v, x)
            lk = log_bessel_k(p)
            hv, hx = 1e-5 * max(v, 1.0), 1e-5 * x
            fd_v = (log_bessel_k(v + hv, x) - log_bessel_k(v - hv, x)) / (2 * hv)
            fd_x = (log_bessel_k(v, x + hx) - log_bessel_k(v, x - hx)) / (2 * hx)
            dv = log_bessel_k_deriv(p, 1, 0)
            dx = log_bessel_k_deriv(p, 0, 1)
            got_v = dv.sign * math.exp(dv.log_abs - lk)
            got_x = dx.sign * math.exp(dx.log_abs - lk)
            worst_v = max(worst_v, abs(got_v - fd_v) / abs(fd_v))
            worst_x = max(worst_x, abs(got_x - fd_x) / abs(fd_x))
            worst_ratio = max(worst_ratio, abs(log_bessel_k_dlogx(p) - got_x) / abs(got_x))
    ok = worst_v < 1e-4 and worst_x < 1e-4 and worst_ratio < 1e-6
    criterion(6, ok, f"rel err n=1 vs FD={worst_v:.2e} m=1 vs FD={worst_x:.2e} "
                     f"m=1 vs ratio form={worst_ratio:.2e}")
    assert ok


def test_7_coefficients(criterion):
    c1 = asymptotic_coefficients(2)[1]
    ok = c1[0] == Fraction(-1, 8) and c1[1] == Fraction(5, 24)
    criterion(7, ok, f"c10={c1[0]} c11={c1[1]}")
    assert ok


def test_8_batch_contract(criterion):
    rng = np.random.default_rng(8)
    k = 10_000
    pts = [EvalPoint(v, x) for v, x in zip(rng.uniform(0, 99, k), 10 ** rng.uniform(-1, 2.1, k))]
    res = evaluate_batch(BatchRequest(pts))
    scalar = [_evaluate(IntegrandSpec(p), DEFAULT_CONFIG)[0] for p in pts]
    identical = res.values == scalar and not res.errors
    constant = res.work_stats.min() == res.work_stats.max() == lockstep_work(DEFAULT_CONFIG)
    perm = rng.permutation(k)
    shuffled = evaluate_batch(BatchRequest([pts[i] for i in perm])).values
    invariant = [res.values[i] for i in perm] == shuffled
    ok = identical and constant and invariant
    criterion(8, ok, f"bit-identical={identical} constant work={constant} "
                     f"({int(res.work_stats.max())} evals) permutation-invariant={invariant}")
    assert ok


@pytest.mark.xfail(raises=CriterionNotMet, strict=True,
                   reason="one cell moves by metric 1.03; both results are within 1 of the oracle")
def test_9_discretization(criterion):
    fine = QuadratureConfig(bins=256)
    table = read_reference(TABLE)
    worst = worst_fine = 0.0
    where = None
    for v, x in GRID.cells():
        coarse, refined = log_bessel_k(v, x), log_bessel_k(v, x, fine)
        change = metric(refined, coarse)
        if change > worst:
            worst, where = change, (v, x)
        worst_fine = max(worst_fine, metric(refined, table[(v, x)].log_k))
    ok = worst < 1
    criterion(9, ok, f"worst 128->256 change metric={worst:.3f} at v={where[0]:g} x={where[1]:.3g}; "
                     f"256-bin max vs oracle={worst_fine:.3f}")
    # the 256-bin result must still be accurate; only the change target may miss
    assert worst_fine < 4
    if not ok:
        raise CriterionNotMet(f"128->256 change {worst:.3f} at {where}")


def test_10_zero_search_robustness(criterion):
    worst, failures, overflow, searches = 0, [], [], 0
    for v, x in GRID.cells():
        try:
            trace = zero_search_report(IntegrandSpec(EvalPoint(v, x)))
        except BracketOverflow as exc:
            overflow.append((v, x, exc))
            continue
        for name, info in trace:
            searches += 1
            worst = max(worst, info.iterations)
            if not info.converged or info.iterations > 10:
                failures.append((v, x, name, info))
    ok = not failures and not overflow
    criterion(10, ok, f"{searches} searches, max iterations={worst}, non-converged={len(failures)}, "
                      f"overflows={len(overflow)}")
    assert ok
