"""Arbitrary-precision reference values of log K_v(x) and its derivatives.

The same integral is evaluated in mpmath with a padded range and a
trapezoid rule whose bin count is doubled until two successive estimates
agree to the requested number of digits.  Nothing here shares code with the
float64 pipeline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from mpmath import mp, mpf

# log-depth below the peak kept in the integration range
PAD = 10 * 52 * math.log(2.0)
_ROOT_STEPS = 80


class SelfCheckFailed(RuntimeError):
    pass


def _log_f(v, x, n, m, t):
    if t == 0:
        if n:
            return mpf("-inf")
        return -x
    out = mp.log(mp.sinh(v * t)) if n % 2 else mp.log(mp.cosh(v * t))
    if n:
        out += n * mp.log(t)
    if m:
        out += m * mp.log(mp.cosh(t))
    return out - x * mp.cosh(t)


def _dlog_f(v, x, n, m, t):
    out = v / mp.tanh(v * t) if n % 2 else v * mp.tanh(v * t)
    if n:
        out += mpf(n) / t
    if m:
        out += m * mp.tanh(t)
    return out - x * mp.sinh(t)


def _bisect(fn, lo, hi):
    """Zero of fn with fn(lo) > 0 > fn(hi)."""
    for _ in range(_ROOT_STEPS):
        mid = (lo + hi) / 2
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _upper(fn, start):
    step = mpf(1)
    while fn(start + step) > 0:
        step *= 2
    return start + step


def _peak(v, x, n, m):
    if n == 0 and v * v + m - x <= 0:
        return mpf(0)
    slope = lambda t: _dlog_f(v, x, n, m, t)  # noqa: E731
    lo = mpf("1e-30")
    return _bisect(slope, lo, _upper(slope, lo))


def _trapezoid(logf, a, b, shift, digits, max_bins):
    """Trapezoid of exp(logf - shift) on [a, b], refined by doubling."""
    def f(t):
        return mp.exp(logf(t) - shift)

    n = 16
    h = (b - a) / n
    total = (f(a) + f(b)) / 2 + mp.fsum(f(a + k * h) for k in range(1, n))
    estimate = h * total
    tol = mpf(10) ** (-digits)
    while n < max_bins:
        total += mp.fsum(f(a + (2 * k + 1) * h / 2) for k in range(n))
        n *= 2
        h /= 2
        new = h * total
        if abs(new - estimate) <= tol * abs(new):
            return new, n
        estimate = new
    raise SelfCheckFailed(f"trapezoid not converged with {max_bins} bins")


def log_integral(v, x, n=0, m=0, digits=50, max_bins=10**6):
    """log |d^n/dv^n d^m/dx^m K_v(x)| as an mpf, at digits + 10 working digits."""
    with mp.workdps(digits + 10):
        v, x = abs(mpf(v)), mpf(x)
        if n % 2 and v == 0:
            return mpf("-inf")
        logf = lambda t: _log_f(v, x, n, m, t)  # noqa: E731
        tp = _peak(v, x, n, m)
        top = logf(tp)
        cut = lambda t: logf(t) - top + PAD  # noqa: E731
        # Every integrand is even in t, so starting at 0 keeps the trapezoid
        # spectrally accurate.  Only n = 0 is trimmed on the left: there the
        # cut falls in the smooth tail, while for n >= 1 it would fall in the
        # t^n zero at the origin and spoil the convergence.
        a = mpf(0)
        if n == 0 and tp > 0 and cut(a) < 0:
            a = _bisect(lambda t: -cut(t), mpf(0), tp)
        b = _bisect(cut, tp, _upper(cut, tp))
        value, _ = _trapezoid(logf, a, b, top, digits, max_bins)
        return top + mp.log(value)


def half_integer_log_k(v, x, digits=50):
    """Closed form of log K_{j+1/2}(x) for non-negative integer j."""
    j = int(abs(v) - 0.5)
    if abs(v) != j + 0.5:
        raise ValueError("order must be a half-integer")
    with mp.workdps(digits + 10):
        x = mpf(x)
        total = mp.fsum(mp.factorial(j + k) / (mp.factorial(k) * mp.factorial(j - k))
                        / (2 * x) ** k for k in range(j + 1))
        return mp.log(mp.sqrt(mp.pi / (2 * x))) - x + mp.log(total)


def self_check(digits=50, max_bins=10**6, xs=(0.1, 1.0, 10.0, 100.0)):
    """Compare the integral against half-integer closed forms."""
    tol = mpf(10) ** (-(digits - 10))
    for v in (0.5, 1.5, 2.5, 10.5):
        for x in xs:
            with mp.workdps(digits + 10):
                got = log_integral(v, x, digits=digits, max_bins=max_bins)
                want = half_integer_log_k(v, x, digits)
                if abs(got - want) > tol * max(abs(want), 1):
                    raise SelfCheckFailed(f"K_{v}({x}): integral {got} vs closed form {want}")


def reference_row(v, x, digits=50, max_bins=10**6, derivatives=False):
    """Decimal strings (log_k[, dlog_dv, dlog_dx]) for one grid cell."""
    with mp.workdps(digits + 10):
        log_k = log_integral(v, x, 0, 0, digits, max_bins)
        out = [mp.nstr(log_k, digits, min_fixed=-mp.inf, max_fixed=mp.inf)]
        if derivatives:
            log_dv = log_integral(v, x, 1, 0, digits, max_bins)
            log_dx = log_integral(v, x, 0, 1, digits, max_bins)
            dv = mp.exp(log_dv - log_k) if log_dv != mpf("-inf") else mpf(0)
            dx = -mp.exp(log_dx - log_k)
            out += [mp.nstr(dv, digits), mp.nstr(dx, digits)]
    return out


# --- reference tables --------------------------------------------------------

COLUMNS = ("v", "x", "log_k")
DERIV_COLUMNS = ("dlog_dv", "dlog_dx")


class MissingReference(KeyError):
    """A requested (v, x) cell is not in the reference table."""


@dataclass(frozen=True)
class ReferenceRecord:
    log_k: float
    dlog_dv: float | None = None
    dlog_dx: float | None = None


def generate_table(vs, xs, digits=50, max_bins=10**6, derivatives=False, progress=None):
    """Yield (v, x, strings) for every cell of the vs x xs grid."""
    for i, v in enumerate(vs):
        for x in xs:
            yield float(v), float(x), reference_row(v, x, digits, max_bins, derivatives)
        if progress is not None:
            progress(i + 1, len(vs))


def write_reference(path, rows, derivatives=False):
    """Write rows of (v, x, strings) as tab-separated text with a header line."""
    header = COLUMNS + (DERIV_COLUMNS if derivatives else ())
    with open(path, "w", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for v, x, values in rows:
            fh.write("\t".join([repr(v), repr(x), *values]) + "\n")


def read_reference(path) -> dict:
    """Map (v, x) -> ReferenceRecord from a table written by write_reference."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty reference table")
    header = tuple(lines[0].split("\t"))
    if header[:3] != COLUMNS:
        raise ValueError(f"{path}: unexpected header {header}")
    table = {}
    for line in lines[1:]:
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise ValueError(f"{path}: malformed row {line!r}")
        row = dict(zip(header, fields))
        table[(float(row["v"]), float(row["x"]))] = ReferenceRecord(
            float(row["log_k"]),
            float(row["dlog_dv"]) if "dlog_dv" in row else None,
            float(row["dlog_dx"]) if "dlog_dx" in row else None,
        )
    return table


def lookup(table: dict, v: float, x: float) -> ReferenceRecord:
    try:
        return table[(float(v), float(x))]
    except KeyError:
        raise MissingReference((v, x)) from None
