"""Command-line entry point: ``becmirror <experiment> [options]``."""
from __future__ import annotations

import logging
import sys

import click

from becmirror import __version__
from becmirror.config import load_config
from becmirror.errors import ConfigError
from becmirror.experiments import EXIT_CONFIG, exit_code, figure_suite, run

_COMMON = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                 help="key = value config file."),
    click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                 help="Output directory (default: run.out or ./out)."),
    click.option("--seed", type=int, default=None, help="Master RNG seed (default 1)."),
    click.option("--threads", type=click.IntRange(min=1), default=None,
                 help="Worker threads (default: logical cores)."),
    click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                 help="Override a config key, e.g. --set experiment.tau_end=100."),
]


def _common(fn):
    for opt in reversed(_COMMON):
        fn = opt(fn)
    return fn


def _fail(exc: Exception) -> None:
    code = exit_code(exc)
    if code == 1:
        raise exc
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _experiment_command(name: str, experiment: str, summary: str):
    @_common
    def command(config_path, out_dir, seed, threads, overrides):
        try:
            cfg = load_config(config_path, experiment, overrides=overrides,
                              out_dir=out_dir, seed=seed, threads=threads)
            files = run(cfg)
        except Exception as exc:  # noqa: BLE001 - mapped to exit codes
            _fail(exc)
        for path in files:
            click.echo(str(path))

    return click.command(name=name, help=summary)(command)


@click.group(invoke_without_command=True)
@click.version_option(__version__, prog_name="becmirror")
@click.option("-v", "--verbose", count=True, help="More logging (repeatable).")
@click.pass_context
def main(ctx, verbose):
    """Nonlinear dynamics of a BEC side mode coupled to a moving cavity mirror."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help(), err=True)
        ctx.exit(EXIT_CONFIG)


for _name, _experiment, _help in [
    ("bistability", "bistability", "Steady-state branches over a pump-ratio sweep."),
    ("potential", "potential_map", "Potential on a grid plus its critical points."),
    ("critical-points", "critical_points", "Minima and saddles of the potential."),
    ("trajectory", "trajectory", "One conservative or damped trajectory."),
    ("poincare", "poincare", "Surfaces of section at the configured energies."),
    ("spectrum", "spectrum", "All-zero-start trajectories and their power spectra."),
    ("stability", "stability", "Eigenvalues of every steady state over a pump sweep."),
    ("lyapunov", "lyapunov", "Largest Lyapunov exponents of seeded shell trajectories."),
]:
    main.add_command(_experiment_command(_name, _experiment, _help))


@main.command()
@_common
def run_config(config_path, out_dir, seed, threads, overrides):
    """Run whatever experiment.name the config file names."""
    try:
        if config_path is None and not any(o.startswith("experiment.name") for o in overrides):
            raise ConfigError("run-config needs --config naming experiment.name")
        cfg = load_config(config_path, None, overrides=overrides, out_dir=out_dir, seed=seed,
                          threads=threads)
        files = run(cfg)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    for path in files:
        click.echo(str(path))


@main.command()
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="figures")
@click.option("--seed", type=int, default=1)
@click.option("--threads", type=click.IntRange(min=1), default=None)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
def figures(out_dir, seed, threads, overrides):
    """Regenerate the data behind every figure and print the critical-point table."""
    import os

    files, summary, status = figure_suite(out_dir, seed, threads or os.cpu_count() or 1, overrides)
    for path in files:
        click.echo(str(path))
    click.echo(summary)
    sys.exit(status)


if __name__ == "__main__":
    main()
