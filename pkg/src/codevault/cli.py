"""Operator command line: serve, simulate, replay, inspect.

Exit codes: 0 success, 2 configuration error, 3 runtime error,
4 verification failure.  Every subcommand prints its resolved seed so a
run can be reproduced exactly.
"""
from __future__ import annotations

import errno
import json
import secrets as _secrets
import sys
from pathlib import Path

import click
import numpy as np

from . import report as report_mod
from . import simulator as sim
from .engine import decision_posterior
from .service import ConfigError, ServiceConfig, create_app, load_config
from .session import Level, ReplayError, replay_file, state_hash

EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_VERIFY = 4


@click.group()
def main():
    """Calibration-free vault: service, simulation and log tooling."""


def _load_service_config(config_path) -> ServiceConfig:
    try:
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@main.command()
@click.option("--port", type=int, default=None, help="Listen port (overrides config).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config file.")
def serve(port, config_path):
    """Run the session service."""
    import uvicorn

    cfg = _load_service_config(config_path)
    if port is not None:
        from dataclasses import replace
        cfg = replace(cfg, port=port)
    click.echo(f"serving with config: {json.dumps(cfg.public_dict(), sort_keys=True)}")
    app = create_app(cfg)
    try:
        uvicorn.run(app, host="127.0.0.1", port=cfg.port, log_level="warning")
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            click.echo(f"port {cfg.port} is already in use", err=True)
        else:
            click.echo(f"runtime error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


@main.command()
@click.option("--level", type=click.Choice(["1", "4", "5"]), default="5")
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=None,
              help="Master seed; random (and printed) when omitted.")
@click.option("--sigma", "sigmas", type=float, multiple=True,
              help="Click-noise values for level 5 (repeatable).")
@click.option("--p-err", "p_errs", type=float, multiple=True,
              help="Button-error rates for levels 1/4 (repeatable).")
@click.option("--separation", type=float, default=2.0, show_default=True,
              help="Distance between the level-5 cluster means.")
@click.option("--code", type=str, default="1234", show_default=True)
@click.option("--transfer/--no-transfer", default=True, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="simout",
              show_default=True, help="Directory for CSV/JSON/figures.")
def simulate(level, trials, seed, sigmas, p_errs, separation, code, transfer, out_dir):
    """Run a simulation batch and write metrics plus figures."""
    if trials < 1:
        click.echo("config error: --trials must be >= 1", err=True)
        sys.exit(EXIT_CONFIG)
    if len(code) != 4 or not code.isdigit():
        click.echo("config error: --code must be 4 digits", err=True)
        sys.exit(EXIT_CONFIG)
    lvl = Level(int(level))
    if lvl is Level.UNKNOWN_CONTINUOUS:
        if p_errs:
            click.echo("config error: --p-err applies to levels 1/4 only", err=True)
            sys.exit(EXIT_CONFIG)
        noise = list(sigmas) or [0.1, 0.4, 0.8]
        if any(s <= 0 for s in noise):
            click.echo("config error: --sigma must be positive", err=True)
            sys.exit(EXIT_CONFIG)
        cells = [sim.BatchCell(lvl, sigma=s, flipped=f, separation=separation)
                 for s in noise for f in (False, True)]
    else:
        if sigmas:
            click.echo("config error: --sigma applies to level 5 only", err=True)
            sys.exit(EXIT_CONFIG)
        noise = list(p_errs) or [0.0]
        if any(not (0.0 <= p < 1.0) for p in noise):
            click.echo("config error: --p-err must lie in [0, 1)", err=True)
            sys.exit(EXIT_CONFIG)
        cells = [sim.BatchCell(lvl, p_err=p, flipped=f)
                 for p in noise for f in (False, True)]
    if seed is None:
        seed = _secrets.randbits(31)
    click.echo(f"seed: {seed}")

    rows = sim.run_batch(cells, trials=trials, seed=seed,
                         code=tuple(int(c) for c in code), transfer=transfer)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim.write_csv(rows, out / "metrics.csv")
    sim.write_json(rows, out / "metrics.json")
    figures = report_mod.render_figures(rows, out)
    for row in rows:
        click.echo(
            f"level={row['level']} sigma={row['sigma']:g} p_err={row['p_err']:g} "
            f"flipped={row['flipped']} open_rate={row['open_rate']:.3f} "
            f"median_d1={row['median_steps_d1']:g} "
            f"wrong_accept_rate={row['wrong_accept_rate']:.3f}")
    click.echo(f"wrote {out / 'metrics.csv'}, {out / 'metrics.json'}, "
               + ", ".join(str(p) for p in figures))


def _replay(log_path):
    try:
        return replay_file(log_path)
    except OSError as exc:
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    except ReplayError as exc:
        click.echo(f"replay error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


@main.command()
@click.argument("log_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--verify", is_flag=True,
              help="Recompute the state hash and compare to the logged one.")
def replay(log_path, verify):
    """Rebuild a session from its JSONL event log."""
    session = _replay(log_path)
    click.echo(f"seed: {session.config.seed}")
    click.echo(f"status: {session.status.value}")
    click.echo(f"digits accepted: {len(session.accepted)}")
    click.echo(f"total steps: {session.step_index}")
    if verify:
        logged = [rec["payload"].get("state_hash") for rec in session.log
                  if rec["kind"] in ("vault_opened", "vault_failed")]
        recomputed = state_hash(session)
        original = _logged_hash(log_path)
        if original is None:
            click.echo("verify: log carries no state hash (session not finished)",
                       err=True)
            sys.exit(EXIT_VERIFY)
        if original != recomputed or (logged and logged[-1] != recomputed):
            click.echo(f"verify: hash mismatch (logged {original}, "
                       f"recomputed {recomputed})", err=True)
            sys.exit(EXIT_VERIFY)
        click.echo(f"verify: state hash matches ({recomputed})")


def _logged_hash(log_path):
    last = None
    with open(log_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue
            if rec.get("kind") in ("vault_opened", "vault_failed"):
                last = rec.get("payload", {}).get("state_hash")
    return last


@main.command()
@click.argument("log_path", type=click.Path(exists=True, dir_okay=False))
def inspect(log_path):
    """Print engine diagnostics for a logged session."""
    session = _replay(log_path)
    click.echo(f"seed: {session.config.seed}")
    click.echo(f"level: {int(session.config.level)}")
    click.echo(f"status: {session.status.value}")
    accepted = [rec["payload"] for rec in session.log
                if rec["kind"] == "digit_accepted"]
    for a in accepted:
        click.echo(f"digit position {a['position']}: accepted after {a['steps']} steps")
    if session.engine.steps > 0:
        scores = ", ".join(f"{s:.4f}" for s in session.engine.scores)
        post = decision_posterior(session.engine)
        click.echo(f"current digit scores: [{scores}]")
        click.echo(f"decision posterior argmax: {int(np.argmax(post))} "
                   f"({post.max():.4f})")
    elif session.status.value == "InProgress":
        click.echo("current digit: no signals yet")


if __name__ == "__main__":
    main()
