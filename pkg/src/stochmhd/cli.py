"""Command-line entry points for the experiment families."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from .experiments import run_experiment
from .reporting import ConfigError, ExperimentConfig, config_from_dict, parse_config

_OUT_ENV = "STOCHMHD_OUT"


def _resolve_out(out: str | None) -> Path:
    if out:
        return Path(out)
    return Path(os.environ.get(_OUT_ENV, "stochmhd-out"))


def _load(config: str | None, kind: str, seed: int | None, **overrides) -> ExperimentConfig:
    try:
        if config:
            cfg = parse_config(config)
            if cfg.kind != kind:
                raise ConfigError([f"config kind {cfg.kind!r} does not match subcommand {kind!r}"])
        else:
            cfg = config_from_dict({"kind": kind})
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    if seed is not None:
        cfg.seed = seed
        cfg.seeds = [seed]
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def _execute(cfg: ExperimentConfig, out: str | None, threads: int, resume: str | None = None):
    out_dir = _resolve_out(out)
    manifest, code = run_experiment(cfg, out_dir, threads=threads, resume=resume)
    click.echo(f"wrote {manifest}")
    if code != 0:
        click.echo("FAILED: asserted invariants did not hold", err=True)
        sys.exit(code)


common = [
    click.option("--config", type=click.Path(exists=True), default=None,
                 help="JSON experiment config."),
    click.option("--seed", type=int, default=None, help="Override the config seed."),
    click.option("--out", type=click.Path(), default=None,
                 help=f"Output directory (default ${_OUT_ENV} or ./stochmhd-out)."),
    click.option("--threads", type=int, default=1, show_default=True),
]


def with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Pseudospectral toolkit for 2D stochastic MHD: identities, renormalization,
    simulation, and convergence studies."""


@main.command()
@with_common
def identities(config, seed, out, threads):
    """Verify the exact cancellation identities; exit nonzero on any failure."""
    cfg = _load(config, "identities", seed)
    _execute(cfg, out, threads)


@main.command()
@with_common
def renorm(config, seed, out, threads):
    """Counterterm tables and zeroth-chaos diagnostics across thresholds."""
    cfg = _load(config, "renorm", seed)
    _execute(cfg, out, threads)


@main.command()
@with_common
@click.option("--resume", type=click.Path(exists=True), default=None,
              help="Continue from a checkpoint file.")
def simulate(config, seed, out, threads, resume):
    """Integrate the decomposed system and emit the diagnostic time series."""
    cfg = _load(config, "simulate", seed)
    _execute(cfg, out, threads, resume=resume)


@main.command()
@with_common
def galerkin(config, seed, out, threads):
    """Self-convergence study across mollification levels under common noise."""
    cfg = _load(config, "galerkin", seed)
    _execute(cfg, out, threads)


@main.command("noise-stats")
@with_common
def noise_stats(config, seed, out, threads):
    """Sample-moment checks of the per-mode noise coefficients."""
    cfg = _load(config, "noise-stats", seed)
    _execute(cfg, out, threads)


if __name__ == "__main__":
    main()
