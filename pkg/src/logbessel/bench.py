"""Accuracy, region and scaling benchmarks against a reference table.

Every run returns a Report: a header, rows and a summary mapping.  Reports
are written as CSV with the summary appended as ``#`` comment lines, and
read back to equal values.
"""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .batch import LOCKSTEP, BatchRequest, evaluate_batch
from .integrand import DomainError, EvalPoint
from .oracle import (
    MissingReference,
    ReferenceRecord,
    generate_table,
    read_reference,
    self_check,
    write_reference,
)
from .quadrature import DEFAULT_CONFIG, QuadratureConfig
from .reference import (
    ASYMPTOTIC_MIN_ORDER,
    NoConvergence,
    asymptotic_log_k_with_work,
    continued_fraction_log_k_with_work,
    sca_log_k_with_work,
    series_log_k_with_work,
)

EPSILON = {64: float(np.finfo(np.float64).eps), 32: float(np.finfo(np.float32).eps)}
ALL_METHODS = ("I", "S", "C", "A", "SCA")
BASELINES = ("S", "C", "A")  # also the tie-break order of the region maps
UNUSABLE = 4.0  # error metric at which a result counts as useless
ACCURATE = 1.0  # error metric below which a method may compete on speed


@dataclass(frozen=True)
class GridSpec:
    v_min: float = 0.0
    v_max: float = 99.0
    v_count: int = 100
    x_min: float = 0.1
    x_max: float = 10 ** 2.1
    x_count: int = 33
    methods: tuple = ALL_METHODS

    def __post_init__(self):
        if self.v_count < 2 or self.x_count < 2:
            raise DomainError("grid counts must be >= 2")
        if not (0 < self.x_min < self.x_max and math.isfinite(self.x_max)):
            raise DomainError("need 0 < x_min < x_max")
        if not (math.isfinite(self.v_min) and math.isfinite(self.v_max) and self.v_min <= self.v_max):
            raise DomainError("need finite v_min <= v_max")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown or not self.methods:
            raise DomainError(f"unknown methods {sorted(unknown)}")

    def vs(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.v_count)

    def xs(self) -> np.ndarray:
        return np.logspace(math.log10(self.x_min), math.log10(self.x_max), self.x_count)

    def cells(self):
        """(v, x) pairs, v outer and x inner."""
        return [(float(v), float(x)) for v in self.vs() for x in self.xs()]


@dataclass
class Report:
    columns: tuple
    rows: list
    summary: dict = field(default_factory=dict)

    def column(self, name):
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


def error_metric(computed, reference, epsilon=EPSILON[64]):
    """log10(delta / epsilon + 1) with delta = |computed - reference| / max(|reference|, 1)."""
    if not math.isfinite(reference):
        raise ValueError("reference must be finite")
    if computed is None or not math.isfinite(computed):
        return math.inf
    delta = abs(computed - reference) / max(abs(reference), 1.0)
    return math.log10(delta / epsilon + 1.0)


def check_coverage(table: dict, grid: GridSpec, need_derivatives: bool = False):
    missing = [c for c in grid.cells() if c not in table]
    if need_derivatives:
        missing += [c for c in grid.cells()
                    if c in table and table[c].dlog_dv is None]
    if missing:
        head = ", ".join(f"({v!r}, {x!r})" for v, x in missing[:5])
        more = f" and {len(missing) - 5} more" if len(missing) > 5 else ""
        raise MissingReference(f"reference lacks {len(missing)} cells: {head}{more}")


def _load(table):
    return read_reference(table) if isinstance(table, (str, Path)) else table


# --- method evaluation -------------------------------------------------------

_SCALAR = {
    "S": series_log_k_with_work,
    "C": continued_fraction_log_k_with_work,
    "A": asymptotic_log_k_with_work,
    "SCA": sca_log_k_with_work,
}


def _run_method(name, cells, cfg):
    """Values and work counts of one method over cells; failures give (inf, 0)."""
    if name == "I":
        res = evaluate_batch(BatchRequest(cells, cfg=cfg))
        values = [math.inf if r is None else r.log_abs for r in res.values]
        return values, [int(w) for w in res.work_stats]
    fn = _SCALAR[name]
    values, work = [], []
    for v, x in cells:
        try:
            value, steps = fn(EvalPoint(v, x))
        except (NoConvergence, OverflowError, ValueError, ZeroDivisionError):
            value, steps = math.inf, 0
        values.append(value)
        work.append(steps)
    return values, work


def _as_precision(value, precision):
    if precision == 32 and math.isfinite(value):
        return float(np.float32(value))
    return value


def run_accuracy(grid: GridSpec, table, cfg: QuadratureConfig = DEFAULT_CONFIG,
                 precision: int = 64) -> Report:
    """Error metric of each method at each grid cell.

    With precision 32 the computed log values are rounded to float32 and
    scored against float32 epsilon.
    """
    if precision not in EPSILON:
        raise DomainError("precision must be 32 or 64")
    table = _load(table)
    check_coverage(table, grid)
    cells = grid.cells()
    eps = EPSILON[precision]
    rows, summary = [], {}
    for name in grid.methods:
        start = time.perf_counter()
        values, _ = _run_method(name, cells, cfg)
        summary[f"{name}_runtime_s"] = time.perf_counter() - start
        errs = []
        for (v, x), value in zip(cells, values):
            err = error_metric(_as_precision(value, precision), table[(v, x)].log_k, eps)
            errs.append(err)
            rows.append((v, x, name, err))
        finite = [e for e in errs if math.isfinite(e)]
        summary[f"{name}_mean"] = statistics.fmean(errs) if len(finite) == len(errs) else math.inf
        summary[f"{name}_max"] = max(errs)
        summary[f"{name}_unusable"] = sum(e >= UNUSABLE for e in errs)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return Report(("v", "x", "method", "error"), rows, summary)


# --- region maps -------------------------------------------------------------

def fit_split(xs, labels):
    """Threshold x* best separating 'S' (below) from 'C' (above).

    Candidates are geometric midpoints between neighbouring xs.  Returns the
    geometric centre of the candidates with the fewest misplaced labels, or
    None unless both labels are present (one label alone fixes no boundary).
    """
    pairs = [(x, lab) for x, lab in zip(xs, labels) if lab in ("S", "C")]
    if {lab for _, lab in pairs} != {"S", "C"}:
        return None
    xs_sorted = sorted(xs)
    candidates = [xs_sorted[0]] + [math.sqrt(a * b) for a, b in zip(xs_sorted, xs_sorted[1:])] + [xs_sorted[-1]]
    costs = [sum((lab == "C" and x < c) or (lab == "S" and x > c) for x, lab in pairs)
             for c in candidates]
    best = min(costs)
    tied = [c for c, k in zip(candidates, costs) if k == best]
    return math.sqrt(tied[0] * tied[-1])


def run_regions(grid: GridSpec, table) -> Report:
    """Most accurate and fastest-accurate baseline per cell.

    Speed is ranked by the operation count each baseline reports; wall time
    at this granularity is dominated by interpreter overhead and is not
    reproducible.
    """
    table = _load(table)
    check_coverage(table, grid)
    cells = grid.cells()
    results = {name: _run_method(name, cells, DEFAULT_CONFIG) for name in BASELINES}
    rows = []
    for k, (v, x) in enumerate(cells):
        ref = table[(v, x)].log_k
        errs = [error_metric(results[m][0][k], ref) for m in BASELINES]
        works = [results[m][1][k] for m in BASELINES]
        best = BASELINES[min(range(3), key=lambda i: errs[i])]
        ok = [i for i in range(3) if errs[i] < ACCURATE]
        fastest = BASELINES[min(ok, key=lambda i: works[i])] if ok else ""
        rows.append((v, x, best, fastest, *errs, *works))

    columns = ("v", "x", "best", "fastest", "err_S", "err_C", "err_A", "work_S", "work_C", "work_A")
    report = Report(columns, rows)
    large = [r for r in rows if r[0] >= ASYMPTOTIC_MIN_ORDER]
    splits = list(region_splits(report).values())
    report.summary = {
        "A_fastest_share_large_v": sum(r[3] == "A" for r in large) / len(large) if large else math.nan,
        "SC_split_min": min(splits) if splits else math.nan,
        "SC_split_max": max(splits) if splits else math.nan,
    }
    return report


def region_splits(report: Report) -> dict:
    """Per-order S/C split of the fastest-accurate map, for v below the A switch."""
    out = {}
    for v in sorted(set(report.column("v"))):
        if v >= ASYMPTOTIC_MIN_ORDER:
            continue
        mine = [r for r in report.rows if r[0] == v]
        split = fit_split([r[1] for r in mine], [r[3] for r in mine])
        if split is not None:
            out[v] = split
    return out


# --- scaling -----------------------------------------------------------------

def scaling_points(size: int, rng: np.random.Generator):
    r, r2 = rng.random(size), rng.random(size)
    v = 10.0 ** (2.0 * r) - 1.0
    x = 10.0 ** (3.0 * r2 - 1.0)
    return list(zip(v.tolist(), x.tolist()))


def run_scaling(sizes, seed: int = 0, backend: str = LOCKSTEP, repeats: int = 5,
                cfg: QuadratureConfig = DEFAULT_CONFIG) -> Report:
    """Batch wall time (median after one warm-up) and per-point work spread."""
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes) or sizes != sorted(sizes):
        raise DomainError("sizes must be positive and ascending")
    rng = np.random.default_rng(seed)
    rows = []
    for size in sizes:
        req = BatchRequest(scaling_points(size, rng), cfg=cfg)
        res = evaluate_batch(req, backend)
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            res = evaluate_batch(req, backend)
            times.append(time.perf_counter() - start)
        rows.append((size, statistics.median(times), int(res.work_stats.max()),
                     int(res.work_stats.min()), len(res.errors)))
    return Report(("size", "wall_s", "work_max", "work_min", "errors"), rows,
                  {"backend": backend, "seed": seed})


# --- derivatives -------------------------------------------------------------

def run_deriv_accuracy(grid: GridSpec, table, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Report:
    """d/dv log K and d/dx log K from the derivative integrals, scored against the table."""
    table = _load(table)
    check_coverage(table, grid, need_derivatives=True)
    cells = grid.cells()
    base = evaluate_batch(BatchRequest(cells, cfg=cfg))
    rows, summary = [], {}
    for name, n, m in (("dlog_dv", 1, 0), ("dlog_dx", 0, 1)):
        res = evaluate_batch(BatchRequest(cells, n=n, m=m, cfg=cfg))
        errs = []
        for k, (v, x) in enumerate(cells):
            d, k0 = res.values[k], base.values[k]
            value = math.nan if d is None or k0 is None else float(d / k0)
            err = error_metric(value, getattr(table[(v, x)], name))
            errs.append(err)
            rows.append((v, x, name, value, err))
        summary[f"{name}_mean"] = statistics.fmean(errs)
        summary[f"{name}_max"] = max(errs)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return Report(("v", "x", "quantity", "value", "error"), rows, summary)


# --- reference generation ------------------------------------------------------

def gen_reference(grid: GridSpec, path, digits: int = 50, bins: int = 10**6,
                  derivatives: bool = True, progress=None) -> int:
    """Self-check the oracle, then tabulate it over grid.  Returns the row count."""
    self_check(digits, bins)
    rows = list(generate_table(grid.vs(), grid.xs(), digits, bins, derivatives, progress))
    write_reference(path, rows, derivatives)
    return len(rows)


# --- CSV ---------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def _parse(text):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def write_csv(report: Report, out=None) -> str:
    """Write report as CSV (to out if given) and return the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_fmt(v) for v in row])
    buf.write("# summary:\n")
    for key, value in report.summary.items():
        buf.write(f"# {key}={_fmt(value)}\n")
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def read_csv(source) -> Report:
    """Parse text or a file written by write_csv."""
    text = source if isinstance(source, str) and "\n" in source else Path(source).read_text()
    lines = text.splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    summary = {}
    for ln in lines:
        if ln.startswith("# ") and "=" in ln:
            key, _, value = ln[2:].partition("=")
            summary[key] = _parse(value)
    reader = csv.reader(body)
    columns = tuple(next(reader))
    rows = [tuple(_parse(v) for v in row) for row in reader]
    return Report(columns, rows, summary)
