"""Click CLI for ou-sector."""

from __future__ import annotations

import logging
from pathlib import Path

import click
from rich.console import Console
from rich.logging import RichHandler

from .config import ExperimentConfig, RunDefaults, default_config, load_config, load_defaults
from .errors import ConfigError, OuSectorError
from .formatters import EMIT_FORMATS, emit, format_output
from .model import BUILTIN_MODELS
from .runner import RunReport, run
from .store import save_report
from .utils import parse_p_list

_stderr = Console(stderr=True)


class ConfigProblem(click.ClickException):
    """Configuration or usage error; exits with status 2."""

    exit_code = 2


class State:
    def __init__(self, mode: str, verbose: bool = False) -> None:
        self.mode = mode
        self.verbose = verbose
        self._defaults: RunDefaults | None = None

    @property
    def defaults(self) -> RunDefaults:
        if self._defaults is None:
            try:
                self._defaults = load_defaults()
            except ConfigError as e:
                raise ConfigProblem(str(e)) from e
        return self._defaults

    def config(self, path, builtin, alpha, seed, samples, p_list, suites: list[str]) -> ExperimentConfig:
        """Config file (or a built-in model) with command-line overrides applied."""
        try:
            cfg = load_config(path, self.defaults) if path else default_config(builtin or "rotation", self.defaults)
            data = cfg.model_dump(exclude_none=True)
            if not path and alpha is not None:
                data["model"]["alpha"] = alpha
            if seed is not None:
                data["run"]["seed"] = seed
            if samples is not None:
                data["run"]["samples"] = samples
            if p_list:
                data["run"]["p"] = parse_p_list(p_list)
            data["run"]["suites"] = suites
            return ExperimentConfig.model_validate(data)
        except (ConfigError, ValueError) as e:
            raise ConfigProblem(str(e)) from e

    def output(self, data, title: str = "") -> None:
        format_output(data, self.mode, title, verbose=self.verbose)


pass_state = click.make_pass_decorator(State)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=_stderr, show_path=False)],
        force=True,
    )


@click.group()
@click.option("--json", "-j", "fmt", flag_value="json", help="JSON output")
@click.option("--plain", "-p", "fmt", flag_value="plain", help="TSV output for piping")
@click.option("--markdown", "-md", "fmt", flag_value="markdown", help="Markdown output")
@click.option("--verbose", "-v", is_flag=True, default=False, help="Verbose output (matrices, seeds, sample counts, timing)")
@click.version_option(package_name="ou-sector")
@click.pass_context
def cli(ctx, fmt, verbose):
    """ou-sector: sectoriality checks for weighted Ornstein-Uhlenbeck operators."""
    ctx.ensure_object(dict)
    ctx.obj = State(fmt or "human", verbose=verbose)
    _setup_logging(verbose)


def run_options(f):
    """Options shared by every experiment subcommand."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="TOML experiment file"),
        click.option("--model", "builtin", type=click.Choice(BUILTIN_MODELS), default=None, help="Built-in model when no config is given"),
        click.option("--alpha", type=float, default=None, help="Rotation strength of the built-in rotation model"),
        click.option("--seed", type=int, default=None, help="Base seed (overrides config and OU_SECTOR_SEED)"),
        click.option("--samples", type=int, default=None, help="Monte Carlo sample count per check"),
        click.option("--p", "p_list", default=None, help='Comma-separated exponents, e.g. "1.5,2,4"'),
        click.option("--out", type=click.Path(file_okay=False), default=None, help="Report directory (default: OU_SECTOR_OUT)"),
        click.option("--format", "emit_fmt", type=click.Choice(EMIT_FORMATS), default=None, help="Also write json, csv or plot-data files"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _execute(state: State, suites: list[str], title: str, config_path, builtin, alpha, seed, samples, p_list, out, emit_fmt) -> None:
    cfg = state.config(config_path, builtin, alpha, seed, samples, p_list, suites)
    out_dir = Path(out) if out else state.defaults.out
    if emit_fmt and out_dir is None:
        raise ConfigProblem("--format needs --out or OU_SECTOR_OUT.")
    try:
        report = run(cfg, on_suite=lambda name: _stderr.print(f"[dim]running {name} suite[/dim]"))
    except OuSectorError as e:
        raise ConfigProblem(str(e)) from e
    state.output(report if suites != ["model"] else _model_view(report), title)
    if out_dir is not None:
        path = save_report(report, out_dir)
        _stderr.print(f"[dim]report saved to {path}[/dim]")
        if emit_fmt:
            for written in emit(report, emit_fmt, path.with_suffix("")):
                _stderr.print(f"[dim]wrote {written}[/dim]")
    click.get_current_context().exit(report.exit_code)


def _model_view(report: RunReport):
    if report.passed:
        return report.derived
    return report


@cli.command("model")
@run_options
@pass_state
def model_cmd(state, **kwargs):
    """Print Q_inf, B, gamma and theta_p for a model."""
    _execute(state, ["model"], "Model", **kwargs)


@cli.command("forms")
@run_options
@pass_state
def forms_cmd(state, **kwargs):
    """Dirichlet-form checks: coercivity, duality, sector condition, IBP, Mehler."""
    _execute(state, ["model", "forms"], "Forms", **kwargs)


@cli.command("sector")
@run_options
@pass_state
def sector_cmd(state, **kwargs):
    """Pointwise identities, numerical range and Galerkin field of values."""
    _execute(state, ["model", "sector"], "Sector", **kwargs)


@cli.command("wiener")
@run_options
@pass_state
def wiener_cmd(state, **kwargs):
    """Wiener covariance with Dirichlet Laplacian drift, truncated to sine modes.

    \b
    Examples:
      ou-sector wiener --p 1.5,2,4
      ou-sector wiener --samples 20000 --out runs --format json
    """
    _execute(state, ["wiener"], "Wiener", **kwargs)


@cli.command("all")
@run_options
@pass_state
def all_cmd(state, **kwargs):
    """Run every suite."""
    _execute(state, ["model", "forms", "sector", "wiener"], "All suites", **kwargs)


def main():
    cli()


if __name__ == "__main__":
    main()
