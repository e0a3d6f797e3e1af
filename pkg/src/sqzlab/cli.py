"""Command-line interface for sqzlab."""

from pathlib import Path
from typing import Callable, Optional

import typer
from prometheus_client import REGISTRY, CollectorRegistry, write_to_textfile
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from sqzlab import __version__
from sqzlab.analysis.pipelines import (
    FitModel,
    Outputs,
    SimulationMode,
    replay,
    run_fit,
    run_fixtures,
    run_laser_noise,
    run_power_sweep,
    run_project,
    run_simulate,
    run_spectrum,
    run_transmission,
)
from sqzlab.artifacts.config_file import SqzlabConfig, load_config
from sqzlab.artifacts.manifest import read_manifest
from sqzlab.config import get_settings
from sqzlab.errors import ConfigSchemaError, InconsistentDataError, SqzlabError
from sqzlab.observability.logging import configure_logging

app = typer.Typer(
    name="sqzlab",
    help="sqzlab - squeezed light from a sub-threshold χ(2) OPO: model, simulate, fit",
    add_completion=False,
)

console = Console()

_state: dict[str, Optional[Path]] = {"metrics_file": None}

CONFIG_OPTION = typer.Option(..., "--config", "-c", help="Run configuration (JSON)")
OUT_OPTION = typer.Option(Path("sqzlab-out"), "--out", "-o", help="Output directory")
SET_OPTION = typer.Option(None, "--set", help="Override a config key: section.key=value")


@app.callback()
def main(
    metrics_file: Optional[Path] = typer.Option(
        None, "--metrics-file", help="Write Prometheus metrics here after the command"
    ),
) -> None:
    """Configure logging before any command runs."""
    settings = get_settings()
    configure_logging(settings.log_level, settings.log_format)
    _state["metrics_file"] = metrics_file


def _write_metrics(registry: CollectorRegistry = REGISTRY) -> None:
    path = _state["metrics_file"]
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_to_textfile(str(path), registry)


def _show(outputs: Outputs) -> None:
    table = Table(title="Outputs")
    table.add_column("artifact")
    table.add_column("path")
    for name, path in outputs.items():
        table.add_row(name, str(path))
    console.print(table)

    results = read_manifest(outputs["manifest"]).results
    if results:
        summary = Table(title="Results")
        summary.add_column("quantity")
        summary.add_column("value", justify="right")
        for key in sorted(results):
            value = results[key]
            summary.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
        console.print(summary)


def _execute(action: Callable[[], Outputs]) -> Outputs:
    """Run ``action`` and map library errors to the documented exit codes."""
    try:
        outputs = action()
    except SqzlabError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(exc.exit_code)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or exc.title
        typer.echo(f"Error: invalid parameter {location}: {first['msg']}", err=True)
        raise typer.Exit(2)
    finally:
        _write_metrics()
    _show(outputs)
    return outputs


def _config(path: Path, overrides: Optional[list[str]]) -> SqzlabConfig:
    return load_config(path, overrides or [])


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigSchemaError(
            f"power grid must be comma-separated numbers, got {text!r}"
        ) from exc


@app.command("spectrum")
def spectrum(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    overrides: Optional[list[str]] = SET_OPTION,
    fmin: Optional[float] = typer.Option(None, "--fmin", help="Lowest sideband frequency (MHz)"),
    fmax: Optional[float] = typer.Option(None, "--fmax", help="Highest sideband frequency (MHz)"),
    points: Optional[int] = typer.Option(None, "--points", help="Number of frequencies"),
) -> None:
    """Closed-form squeezing and anti-squeezing spectra."""
    _execute(lambda: run_spectrum(_config(config, overrides), out, fmin, fmax, points))


@app.command("power-sweep")
def power_sweep(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    overrides: Optional[list[str]] = SET_OPTION,
    power_grid: Optional[str] = typer.Option(
        None, "--power-grid", help="Comma-separated on-chip FH powers (mW)"
    ),
    freq: Optional[float] = typer.Option(None, "--freq", min=0.0, help="Sideband (MHz)"),
) -> None:
    """Measured squeezing and anti-squeezing versus FH pump power."""

    def action() -> Outputs:
        grid = None if power_grid is None else _parse_grid(power_grid)
        return run_power_sweep(_config(config, overrides), out, grid, freq)

    _execute(action)


@app.command("simulate")
def simulate(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    overrides: Optional[list[str]] = SET_OPTION,
    mode: SimulationMode = typer.Option(
        SimulationMode.PHASE_SWEEP, "--mode", help="What to record"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Root seed of the random streams"),
    threads: Optional[int] = typer.Option(
        None, "--threads", min=1, help="Worker count; SQZLAB_THREADS when omitted"
    ),
) -> None:
    """Monte-Carlo homodyne measurement of the OPO output."""
    _execute(lambda: run_simulate(_config(config, overrides), out, mode, seed, threads))


@app.command("fit")
def fit(
    model: FitModel = typer.Option(..., "--model", help="Estimator to run"),
    inputs: list[Path] = typer.Option(..., "--in", help="Input CSV (repeat for squeezing)"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Run configuration"),
    out: Path = OUT_OPTION,
    overrides: Optional[list[str]] = SET_OPTION,
) -> None:
    """Fit an estimator to measured or simulated CSV data."""

    def action() -> Outputs:
        loaded = None if config is None else _config(config, overrides)
        return run_fit(loaded, out, model, inputs)

    _execute(action)


@app.command("project")
def project(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    overrides: Optional[list[str]] = SET_OPTION,
    power_grid: Optional[str] = typer.Option(
        None, "--power-grid", help="Comma-separated on-chip FH powers (mW)"
    ),
) -> None:
    """Projected squeezing of an improved device versus pump power."""

    def action() -> Outputs:
        grid = None if power_grid is None else _parse_grid(power_grid)
        return run_project(_config(config, overrides), out, grid)

    _execute(action)


@app.command("transmission")
def transmission(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    overrides: Optional[list[str]] = SET_OPTION,
    gains: Optional[list[float]] = typer.Option(
        None, "--gain", help="Gain/loss ratio G in [0, 1); repeatable"
    ),
) -> None:
    """Cavity transmission under parametric gain and the linewidth table."""
    _execute(lambda: run_transmission(_config(config, overrides), out, gains or None))


@app.command("laser-noise")
def laser_noise(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    overrides: Optional[list[str]] = SET_OPTION,
) -> None:
    """Laser lineshape and the MZI phase-noise measurement chain."""
    _execute(lambda: run_laser_noise(_config(config, overrides), out))


@app.command("fixtures")
def fixtures(
    out: Path = OUT_OPTION,
    noise: float = typer.Option(0.0, "--noise", min=0.0, help="Relative noise level"),
    seed: int = typer.Option(0, "--seed", min=0, help="Noise seed"),
) -> None:
    """Write synthetic measurement fixtures generated from the model."""
    _execute(lambda: run_fixtures(None, out, noise, seed))


@app.command("replay")
def replay_command(
    manifest: Path = typer.Argument(..., help="manifest.json of an earlier run"),
    out: Path = OUT_OPTION,
) -> None:
    """Re-run a recorded command and compare output digests."""

    def action() -> Outputs:
        outputs, differing = replay(manifest, out)
        if differing:
            raise InconsistentDataError(f"Replay differs in {', '.join(differing)}")
        return outputs

    _execute(action)
    typer.echo("Replay reproduced every output")


@app.command("version")
def version() -> None:
    """Show version information."""
    typer.echo(f"sqzlab v{__version__}")


if __name__ == "__main__":
    app()
