"""Command-line entry points: headless runs, live serving, and log replay."""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from .config import ConfigError, load_scenario
from .service import ReplayService, SimulationService, create_app
from .sim import export_log, import_log, run_scenario

EXIT_CONFIG = 2
EXIT_ABORTED = 3


def _summary_json(summary: dict) -> str:
    def clean(v):
        if isinstance(v, (np.floating, np.integer)):
            return float(v)
        if isinstance(v, list):
            return [clean(x) for x in v]
        return v
    return json.dumps({k: clean(v) for k, v in summary.items()}, indent=2)


@click.group()
def main():
    """Dual-quadrotor payload transport simulator."""


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--dt", type=float, default=None, help="Override the control/plant step.")
@click.option("--out", type=click.Path(), default=None, help="Telemetry CSV path.")
@click.option("--summary", "summary_path", type=click.Path(), default=None,
              help="JSON summary path.")
def run(scenario, dt, out, summary_path):
    """Run a scenario headless; write telemetry CSV and a JSON summary."""
    try:
        cfg = load_scenario(scenario)
        if dt is not None:
            from dataclasses import replace
            cfg.sim = replace(cfg.sim, dt=dt)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    result = run_scenario(cfg)
    csv_path = out or cfg.sim.out_csv
    if csv_path:
        export_log(result.log, csv_path)
        click.echo(f"telemetry: {csv_path}")
    spath = summary_path or cfg.sim.out_summary
    summary = _summary_json(result.summary)
    if spath:
        with open(spath, "w") as fh:
            fh.write(summary + "\n")
        click.echo(f"summary: {spath}")
    else:
        click.echo(summary)
    if result.summary["aborted"]:
        click.echo(f"run aborted: {result.summary['aborted']}", err=True)
        sys.exit(EXIT_ABORTED)


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=8700, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--decimate", type=int, default=20, show_default=True,
              help="Broadcast every Nth control step.")
def serve(scenario, port, host, decimate):
    """Serve a live piloted simulation over a WebSocket on /ws."""
    try:
        cfg = load_scenario(scenario)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    import uvicorn

    service = SimulationService(cfg, decimate=decimate, realtime=True)
    service.start()
    app = create_app(service)
    click.echo(f"live service on ws://{host}:{port}/ws")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        service.stop()


@main.command()
@click.argument("log_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=8700, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--speed", type=float, default=1.0, show_default=True,
              help="Playback speed multiplier.")
def replay(log_path, port, host, speed):
    """Stream a recorded telemetry CSV at real-time or scaled speed."""
    try:
        log = import_log(log_path)
    except ValueError as exc:
        click.echo(f"log error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    import uvicorn

    service = ReplayService(log, speed=speed)
    service.start()
    app = create_app(service)
    click.echo(f"replay service on ws://{host}:{port}/ws ({len(log)} records)")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        service.stop()


if __name__ == "__main__":
    main()
