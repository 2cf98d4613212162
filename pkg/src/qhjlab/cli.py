"""Command line front end.

Every task subcommand takes a scenario config (--config), checks that the
config's task matches the subcommand, and executes it through the runner.
Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import sys

import click

from .errors import ConfigError, QhjlabError
from .registry import Registry
from .runner import describe_run, describe_scenario, export_plot_data, run_scenario
from .scenario import load_scenario

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _load(config_path, out, seed):
    try:
        cfg = load_scenario(config_path)
    except FileNotFoundError as exc:
        raise ConfigError(f"config: {exc}") from exc
    if out is not None:
        cfg.out_dir = out
    if seed is not None:
        cfg.seed = seed
        cfg.raw["seed"] = seed
    return cfg


def _execute(task, config_path, out, seed, threads):
    try:
        cfg = _load(config_path, out, seed)
        if cfg.task != task:
            raise ConfigError(f"task: config declares task {cfg.task!r} but "
                              f"the {task!r} subcommand was invoked")
        record = run_scenario(cfg)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except QhjlabError as exc:
        click.echo(f"numerical failure ({type(exc).__name__}): {exc}",
                   err=True)
        sys.exit(EXIT_NUMERIC)
    click.echo(f"run {record.run_id} complete")
    for key in sorted(record.summary):
        click.echo(f"  {key}: {record.summary[key]}")
    return record


def _task_command(task, help_text):
    @click.command(name=task.replace("_", "-"), help=help_text)
    @click.option("--config", "config_path", required=True,
                  type=click.Path(), help="scenario YAML file")
    @click.option("--out", default=None, type=click.Path(),
                  help="output root (overrides config out_dir)")
    @click.option("--seed", default=None, type=int,
                  help="seed for randomized check points")
    @click.option("--threads", default=None, type=int,
                  help="worker threads for batch sub-tasks")
    def cmd(config_path, out, seed, threads):
        _execute(task, config_path, out, seed, threads)
    return cmd


@click.group()
def main():
    """Quantum Hamilton-Jacobi trajectory laboratory."""


main.add_command(_task_command(
    "solve", "Solve bound eigenvalues and export eigenfunctions."))
main.add_command(_task_command(
    "microstate", "Build a microstate and export its fields."))
main.add_command(_task_command(
    "dtde_sweep", "Sweep the discrete dT/dE over time at a fixed position."))
main.add_command(_task_command(
    "trajectory", "Integrate Bohm or Floyd trajectories."))
main.add_command(_task_command(
    "compare", "Bohm vs Floyd time-deformation comparison on an unbound "
               "system."))
main.add_command(_task_command(
    "beat_scan", "Fourier spectrum of the Floyd velocity over beat periods."))


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="scenario YAML to describe")
@click.option("--run", "run_id", default=None, help="past run id to describe")
@click.option("--out", default="runs", type=click.Path(),
              help="registry root for --run queries")
def describe(config_path, run_id, out):
    """Describe a scenario or a past run."""
    try:
        if config_path is not None:
            click.echo(describe_scenario(_load(config_path, None, None)))
        elif run_id is not None:
            click.echo(describe_run(Registry(out), run_id))
        else:
            raise ConfigError("describe: needs --config or --run")
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except QhjlabError as exc:
        click.echo(f"not found: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)


@main.command()
@click.option("--run", "run_id", required=True, help="run id to export")
@click.option("--kind", required=True,
              type=click.Choice(["trajectory", "field", "sweep"]),
              help="artifact kind to export")
@click.option("--out", default="runs", type=click.Path(),
              help="registry root")
def export(run_id, kind, out):
    """List tidy CSV artifacts of a run for plotting."""
    try:
        for path in export_plot_data(Registry(out), run_id, kind):
            click.echo(path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except QhjlabError as exc:
        click.echo(f"not found: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)


if __name__ == "__main__":
    main()
