"""Tests for the Prometheus metrics."""

from pathlib import Path

from prometheus_client import REGISTRY, generate_latest
from typer.testing import CliRunner

from sqzlab import fixtures
from sqzlab.cli import app
from sqzlab.estimation import fit_shg_quadratic

runner = CliRunner()


def test_fit_metrics_are_exported() -> None:
    """Test that a fit shows up in the sqzlab counters and histograms."""
    before = REGISTRY.get_sample_value(
        "sqzlab_fits_total", {"model": "shg", "outcome": "converged"}
    )
    sweep = fixtures.shg_sweep()
    fit_shg_quadratic(sweep.p_fh, sweep.p_sh)
    after = REGISTRY.get_sample_value("sqzlab_fits_total", {"model": "shg", "outcome": "converged"})
    assert after == (before or 0.0) + 1.0

    body = generate_latest(REGISTRY).decode()
    assert "sqzlab_fits_total" in body
    assert "sqzlab_fit_seconds" in body
    assert "sqzlab_simulation_runs_total" in body


def test_metrics_file_option_writes_textfile(tmp_path: Path) -> None:
    """Test the --metrics-file option."""
    metrics = tmp_path / "metrics" / "sqzlab.prom"
    result = runner.invoke(
        app, ["--metrics-file", str(metrics), "fixtures", "-o", str(tmp_path / "out")]
    )
    assert result.exit_code == 0, result.output
    assert "sqzlab_fits_total" in metrics.read_text(encoding="utf-8")
