"""Headless command line: serve a mission, inspect a replay log, or bench."""

from __future__ import annotations

import collections

import click

from . import engine as eng
from . import scenarios


def _load(scenario: str, seed: int) -> eng.Scenario:
    try:
        return scenarios.build(scenario, seed)
    except KeyError:
        return eng.load_scenario(scenario)


@click.group()
def main() -> None:
    """Swarm command-and-control mission server."""


@main.command()
@click.option("--scenario", required=True,
              help="GeoJSON scenario file, or a canned name "
                   "(one_to_many, coverage_mission, hazard_vignette).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--port", default=8700, show_default=True, type=int)
@click.option("--realtime/--max-speed", "realtime", default=True,
              help="Pace the loop at wall-clock 10 Hz, or run unthrottled.")
@click.option("--record", type=click.Path(), default=None,
              help="Write the replay log here on exit.")
def serve(scenario: str, seed: int, port: int, realtime: bool, record: str | None) -> None:
    """Run a mission and expose the console WebSocket API."""
    from .server import serve as run_server

    sc = _load(scenario, seed)
    engine = eng.Engine(sc, seed=seed, realtime=realtime)
    click.echo(f"serving {len(engine.runtimes)} agents on ws://127.0.0.1:{port}/ws "
               f"({'realtime' if realtime else 'max-speed'})")
    try:
        run_server(engine, port)
    finally:
        if record:
            engine.log.save(record)
            click.echo(f"replay log written to {record} "
                       f"(hash {engine.terminal_hash()})")


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
def replay(log_path: str) -> None:
    """Summarize a replay log and print its terminal hash."""
    log = eng.ReplayLog.load(log_path)
    kinds = collections.Counter(kind for _, kind, _ in log.records)
    last_tick = log.records[-1][0] if log.records else 0
    click.echo(f"records: {len(log.records)} over {last_tick + 1} ticks")
    for kind, n in sorted(kinds.items()):
        click.echo(f"  {kind}: {n}")
    click.echo(f"terminal hash: {log.terminal_hash()}")


@main.command()
@click.option("--agents", default=174, show_default=True, type=int)
@click.option("--ticks", default=600, show_default=True, type=int)
def bench(agents: int, ticks: int) -> None:
    """Measure engine throughput on a synthetic swarm."""
    result = eng.bench(agents, ticks)
    click.echo(f"{result['agents']} agents, {result['ticks']} ticks in "
               f"{result['wall_s']:.2f}s -> {result['ticks_per_s']:.1f} ticks/s")
    click.echo(f"terminal hash: {result['hash']}")
