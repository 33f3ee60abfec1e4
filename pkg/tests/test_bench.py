import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from logbessel import bench, cli
from logbessel.integrand import DomainError
from logbessel.oracle import MissingReference, read_reference

EPS = 2.0 ** -52
TABLE = Path(__file__).parent / "data" / "reference_100x33.tsv"
SMALL = bench.GridSpec(1.0, 60.0, 2, 0.3, 50.0, 5)


@pytest.fixture(scope="module")
def small_table(tmp_path_factory):
    path = tmp_path_factory.mktemp("ref") / "small.tsv"
    assert bench.gen_reference(SMALL, path) == 10
    return path


@pytest.fixture(scope="module")
def full_accuracy():
    return bench.run_accuracy(bench.GridSpec(), TABLE)


def test_error_metric_examples():
    assert bench.error_metric(1.0, 1.0) == 0.0
    assert bench.error_metric(1.0 + EPS, 1.0) == pytest.approx(math.log10(2))
    assert bench.error_metric(1000 * EPS, 0.0) == pytest.approx(3.00043, abs=1e-5)
    assert bench.error_metric(math.nan, 1.0) == math.inf
    assert bench.error_metric(math.inf, 1.0) == math.inf
    with pytest.raises(ValueError):
        bench.error_metric(1.0, math.inf)


def test_grid_spec():
    g = bench.GridSpec()
    assert len(g.cells()) == 3300
    assert g.vs()[0] == 0 and g.vs()[-1] == 99
    assert g.xs()[0] == pytest.approx(0.1) and g.xs()[-1] == pytest.approx(10 ** 2.1)
    for bad in [dict(v_count=1), dict(x_min=0.0), dict(x_min=5.0, x_max=1.0), dict(methods=("Z",))]:
        with pytest.raises(DomainError):
            bench.GridSpec(**bad)


def test_full_grid_accuracy_examples(full_accuracy):
    errs = {(v, x, m): e for v, x, m, e in full_accuracy.rows}
    xs = bench.GridSpec().xs()
    x50 = float(xs[np.argmin(abs(xs - 50))])
    assert errs[(0.0, x50, "S")] >= 4
    assert errs[(50.0, x50, "A")] < 4
    assert full_accuracy.summary["I_unusable"] == 0
    assert full_accuracy.summary["I_max"] < 4


def test_accuracy_rows_sorted(full_accuracy):
    keys = [(r[0], r[1], r[2]) for r in full_accuracy.rows]
    assert keys == sorted(keys)
    assert len(keys) == 3300 * 5


def test_missing_reference_is_reported(tmp_path, small_table):
    with pytest.raises(MissingReference) as info:
        bench.run_accuracy(bench.GridSpec(v_count=3), small_table)
    assert "lacks" in str(info.value)


def test_regions_examples(small_table):
    report = bench.run_regions(SMALL, small_table)
    cell = {(r[0], round(r[1], 1)): r for r in report.rows}
    assert cell[(1.0, 0.3)][2] == "S"
    # C is accurate at (1, 50); A is exact there too and wins the argmin
    err_c, err_a = cell[(1.0, 50.0)][5], cell[(1.0, 50.0)][6]
    assert err_c < 1 and cell[(1.0, 50.0)][2] in ("C", "A") and err_a <= err_c
    assert cell[(60.0, 1.1)][3] == "A"
    again = bench.run_regions(SMALL, small_table)
    assert again.rows == report.rows


def test_fit_split():
    xs = [0.5, 1, 2, 4, 8]
    assert bench.fit_split(xs, list("SSCCC")) == pytest.approx(math.sqrt(2))
    assert bench.fit_split(xs, list("SSSSS")) is None
    assert bench.fit_split(xs, list("AAAAA")) is None
    assert bench.fit_split(xs, list("SSACC")) == pytest.approx(2.0)


def test_precision_32(small_table):
    r = bench.run_accuracy(bench.GridSpec(*[getattr(SMALL, f) for f in
                                            ("v_min", "v_max", "v_count", "x_min", "x_max", "x_count")],
                                          methods=("I",)), small_table, precision=32)
    assert r.summary["I_max"] < 1
    with pytest.raises(DomainError):
        bench.run_accuracy(SMALL, small_table, precision=16)


def test_scaling():
    r = bench.run_scaling([1, 1024], seed=3, repeats=1)
    assert r.column("work_max") == [r.rows[0][3]] * 2 == r.column("work_min")
    r = bench.run_scaling([10, 100, 1000], seed=0, repeats=3)
    assert len(r.rows) == 3 and r.column("errors") == [0, 0, 0]
    # wall time is informational; only the coarse trend is checked
    assert r.rows[2][1] >= r.rows[0][1]
    with pytest.raises(DomainError):
        bench.run_scaling([100, 10])


def test_scaling_large_batch_completes():
    r = bench.run_scaling([10_000], seed=1, repeats=1)
    assert r.rows[0][4] == 0


def test_deriv_accuracy(small_table):
    r = bench.run_deriv_accuracy(SMALL, small_table)
    assert len(r.rows) == 20
    # the ratio exp(log|K'| - log K) inherits the absolute error of two logs
    # of size ~|log K|, so large-|log K| cells lose a couple of units
    assert r.summary["dlog_dx_max"] < 3
    assert r.summary["dlog_dv_max"] < 3


def test_deriv_accuracy_needs_columns(tmp_path):
    path = tmp_path / "bare.tsv"
    bench.gen_reference(SMALL, path, derivatives=False)
    with pytest.raises(MissingReference):
        bench.run_deriv_accuracy(SMALL, path)


def test_csv_round_trip(tmp_path, small_table):
    for report in (bench.run_regions(SMALL, small_table),
                   bench.run_accuracy(SMALL, small_table),
                   bench.Report(("a", "b"), [(1, math.inf), (2, -0.5)], {"k": "text", "n": 3})):
        text = bench.write_csv(report, tmp_path / "out.csv")
        back = bench.read_csv(tmp_path / "out.csv")
        assert back == report
        assert bench.read_csv(text) == report
        assert "# summary:" in text


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "logbessel", *args], capture_output=True, text=True)


def test_cli_accuracy_to_stdout(small_table):
    grid = ["--v-min", "1", "--v-max", "60", "--v-count", "2", "--x-min", "0.3", "--x-max", "50",
            "--x-count", "5"]
    out = run_cli("accuracy", *grid, "--methods", "I,SCA", "--reference", str(small_table))
    assert out.returncode == 0, out.stderr
    report = bench.read_csv(out.stdout)
    assert report.columns == ("v", "x", "method", "error") and len(report.rows) == 20


def test_cli_exit_codes(tmp_path, small_table):
    assert cli.main(["accuracy", "--reference", str(tmp_path / "nope.tsv")]) == cli.EXIT_COVERAGE
    assert cli.main(["accuracy", "--reference", str(small_table)]) == cli.EXIT_COVERAGE
    assert cli.main(["accuracy", "--x-min", "-1", "--reference", str(small_table)]) == cli.EXIT_CONFIG
    assert cli.main(["accuracy", "--methods", "I,Q", "--reference", str(small_table)]) == cli.EXIT_CONFIG
    assert cli.main(["scaling", "--sizes", "10,1"]) == cli.EXIT_CONFIG
    assert run_cli("accuracy", "--precision", "16").returncode == cli.EXIT_CONFIG
    assert run_cli("frobnicate").returncode == cli.EXIT_CONFIG
    bad = cli.main(["gen-reference", "--bins", "16", "--out", str(tmp_path / "x.tsv"),
                    "--v-count", "2", "--x-count", "2"])
    assert bad == cli.EXIT_SELF_CHECK


def test_cli_gen_reference_and_regions(tmp_path):
    path = tmp_path / "ref.tsv"
    grid = ["--v-min", "0", "--v-max", "30", "--v-count", "2", "--x-min", "1", "--x-max", "10",
            "--x-count", "2"]
    assert cli.main(["gen-reference", *grid, "--out", str(path)]) == 0
    assert len(read_reference(path)) == 4
    out = tmp_path / "reg.csv"
    assert cli.main(["regions", *grid, "--reference", str(path), "--out", str(out)]) == 0
    assert bench.read_csv(out).columns[:4] == ("v", "x", "best", "fastest")
    out = tmp_path / "d.csv"
    assert cli.main(["deriv-accuracy", *grid, "--reference", str(path), "--out", str(out)]) == 0
    out = tmp_path / "s.csv"
    assert cli.main(["scaling", "--sizes", "1,8", "--out", str(out)]) == 0
    assert len(bench.read_csv(out).rows) == 2
