"""Cross-horizon convergence summaries built from metrics files."""

import math

import pytest

from samlab.errors import ConfigError, FormatError
from samlab.harness.convergence import convergence_summary
from samlab.harness.runner import GOLDEN_HEADER


def write_metrics(path, rows, header=GOLDEN_HEADER):
    """rows: list of (step, grad_norm); other columns are padded with zeros."""
    ncols = len(header.split(","))
    lines = [header]
    for step, g in rows:
        cells = ["0"] * ncols
        cells[0] = str(step)
        cells[header.split(",").index("grad_norm")] = repr(float(g))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_exact_power_law_recovers_the_slope(tmp_path):
    # min ||g||^2 = T^(-1/2): grad_norm = T^(-1/4) at the last step
    paths = []
    for horizon in (100, 400, 1600, 6400):
        rows = [(1, 1.0), (horizon, horizon ** -0.25)]
        paths.append(write_metrics(tmp_path / f"T{horizon}.csv", rows))
    report = convergence_summary(paths)
    assert report.exponent == pytest.approx(-0.5, rel=1e-9)
    assert [e.horizon for e in report.entries] == [100, 400, 1600, 6400]
    assert report.entries[0].min_grad_sq == pytest.approx(0.1, rel=1e-12)
    assert "decay exponent: -0.5" in report.to_text()


def test_statistic_is_the_min_over_all_rows(tmp_path):
    a = write_metrics(tmp_path / "a.csv", [(1, 3.0), (2, 0.5), (3, 2.0)])
    b = write_metrics(tmp_path / "b.csv", [(1, 1.0), (9, 0.25)])
    report = convergence_summary([a, b])
    assert report.entries[0].min_grad_sq == 0.25
    assert report.entries[1].min_grad_sq == 0.0625
    assert report.entries[1].horizon == 9


def test_non_finite_grad_rows_are_ignored_for_the_min(tmp_path):
    a = write_metrics(tmp_path / "a.csv", [(1, float("nan")), (2, 0.5)])
    b = write_metrics(tmp_path / "b.csv", [(1, float("inf")), (4, 0.5)])
    report = convergence_summary([a, b])
    assert report.entries[0].min_grad_sq == 0.25
    assert report.entries[1].min_grad_sq == 0.25
    assert report.exponent is not None


def test_single_horizon_yields_undefined_exponent(tmp_path):
    a = write_metrics(tmp_path / "a.csv", [(1, 1.0), (10, 0.5)])
    b = write_metrics(tmp_path / "b.csv", [(1, 2.0), (10, 0.25)])
    report = convergence_summary([a, b])
    assert report.exponent is None
    assert report.note == "all inputs share one horizon"
    assert "undefined" in report.to_text()


def test_zero_statistic_yields_undefined_exponent(tmp_path):
    a = write_metrics(tmp_path / "a.csv", [(1, 0.0), (10, 1.0)])
    b = write_metrics(tmp_path / "b.csv", [(1, 1.0), (40, 1.0)])
    report = convergence_summary([a, b])
    assert report.exponent is None
    assert "nonpositive" in report.note


def test_all_nan_grads_yield_undefined_exponent(tmp_path):
    a = write_metrics(tmp_path / "a.csv", [(1, float("nan"))])
    b = write_metrics(tmp_path / "b.csv", [(1, 1.0), (40, 1.0)])
    report = convergence_summary([a, b])
    assert math.isinf(report.entries[0].min_grad_sq)
    assert report.exponent is None


def test_run_directory_resolves_to_its_metrics_file(tmp_path):
    run_a = tmp_path / "run_a"
    run_a.mkdir()
    write_metrics(run_a / "metrics.csv", [(1, 1.0), (10, 0.5)])
    b = write_metrics(tmp_path / "b.csv", [(1, 1.0), (40, 0.25)])
    report = convergence_summary([run_a, b])
    assert report.entries[0].path.endswith("metrics.csv")
    assert report.exponent is not None


def test_validation_errors(tmp_path):
    ok = write_metrics(tmp_path / "ok.csv", [(1, 1.0)])
    with pytest.raises(ConfigError, match="at least 2"):
        convergence_summary([ok])
    with pytest.raises(FormatError, match="no metrics file"):
        convergence_summary([ok, tmp_path / "absent.csv"])

    bad_header = tmp_path / "bad_header.csv"
    bad_header.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
    with pytest.raises(FormatError, match="header lacks"):
        convergence_summary([ok, bad_header])

    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(FormatError, match="empty metrics file"):
        convergence_summary([ok, empty])

    header_only = tmp_path / "header_only.csv"
    header_only.write_text(GOLDEN_HEADER + "\n", encoding="utf-8")
    with pytest.raises(FormatError, match="no data rows"):
        convergence_summary([ok, header_only])

    ragged = tmp_path / "ragged.csv"
    ragged.write_text(GOLDEN_HEADER + "\n1,2,3\n", encoding="utf-8")
    with pytest.raises(FormatError, match="fields"):
        convergence_summary([ok, ragged])

    stuck = write_metrics(tmp_path / "stuck.csv", [(3, 1.0), (3, 1.0)])
    with pytest.raises(FormatError, match="must increase"):
        convergence_summary([ok, stuck])
