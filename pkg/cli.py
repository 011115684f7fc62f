"""
Command-line entry point.

    python cli.py simulate --config presets/perturbed_p1.json --out runs/p1
    python cli.py rates --p 2 --n-modes 32 --params.rhs_method=oracle
    python cli.py sweep --p-list 1,2,3 --seeds 0,1,2,3,4 --jobs 4
    python cli.py run --config presets/sweep.json --out runs/sweep

Diagnostics go to stderr through the logging setup in config.py; stdout only
carries the summary tables. Exit codes: 0 ok, 1 numerical, 2 config, 3 I/O.
"""
import logging

import click
import orjson

import workflow
from config import configure_logging
from errors import PCSFError
from utils import error_payload, summary_table, write_error_json

logger = logging.getLogger(__name__)

_EXTRA = {"ignore_unknown_options": True, "allow_extra_args": True}


def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of integers")


def common_options(func):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Run config JSON."),
        click.option("--p", type=int, help="Flow exponent p ≥ 1."),
        click.option("--n-modes", type=int, help="Mode radius N."),
        click.option("--rhs", type=click.Choice(["oracle", "conv", "convolution"]), help="Right-hand-side evaluator."),
        click.option("--init-spec", help="Initial data: support spec or state, as a JSON file or inline JSON."),
        click.option("--seed", type=int, help="Seed for random admissible initial data."),
        click.option("--out", type=click.Path(file_okay=False), help="Existing output directory."),
        click.option("--jobs", type=int, help="Worker processes for sweeps."),
    ]
    for option in reversed(options):
        func = option(func)
    return click.pass_context(func)


def _load(ctx: click.Context, **flags):
    overrides = list(ctx.args)
    for extra in overrides:
        if not extra.startswith("--"):
            raise click.UsageError(f"Unexpected argument '{extra}'")
    return workflow.load_run_config(flags.pop("config_path"), overrides, **flags)


def _run(ctx: click.Context, action, flags: dict) -> None:
    """Loads the config, runs action(config) and maps failures onto exit codes."""
    config = None
    try:
        config = _load(ctx, **flags)
        code = action(config) or 0
    except PCSFError as exc:
        payload = error_payload(exc)
        click.echo(orjson.dumps(payload).decode(), err=True)
        if config is not None:
            write_error_json(config.output_dir, exc)
        logger.error("%s: %s", payload["error"], payload["message"])
        ctx.exit(exc.exit_code)
    ctx.exit(code)


@click.group()
def cli():
    """Fourier-Galerkin simulator for the p-curve shortening flow."""
    configure_logging()


def _simulate(config):
    _, estimate = workflow.cmd_simulate(config)
    click.echo(f"T = {estimate.T:.15g} ± {estimate.uncertainty:.2e}")


def _normalized(config):
    run = workflow.cmd_normalized(config)
    click.echo(f"T = {run.T:.15g}, two-path sup distance {run.two_path_sup:.3e}")


def _rates(config):
    reports = workflow.cmd_rates(config)
    click.echo(summary_table(reports))


def _verify(config):
    results = workflow.cmd_verify(config)
    for r in results:
        click.echo(f"{r.name:<20} {'pass' if r.passed else 'FAIL':<5} {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def _sweep(config):
    frame, failures = workflow.cmd_sweep(config)
    click.echo(frame.to_string(index=False) if not frame.empty else "no successful cells")
    for failure in failures:
        click.echo(f"failed: p = {failure['p']}, seed = {failure['seed']}: {failure['error']}", err=True)
    return 1 if failures else 0


ACTIONS = {
    "simulate": _simulate,
    "normalized": _normalized,
    "rates": _rates,
    "verify": _verify,
    "sweep": _sweep,
}


@cli.command(context_settings=_EXTRA)
@common_options
def simulate(ctx, **flags):
    """Integrate to the blow-up cap and estimate T."""
    _run(ctx, _simulate, flags)


@cli.command(context_settings=_EXTRA)
@common_options
def normalized(ctx, **flags):
    """Integrate the self-similarly normalized flow."""
    _run(ctx, _normalized, flags)


@cli.command(context_settings=_EXTRA)
@common_options
def rates(ctx, **flags):
    """Fit blow-up, mode-decay and convergence rates against the predictions."""
    _run(ctx, _rates, flags)


@cli.command(context_settings=_EXTRA)
@common_options
def verify(ctx, **flags):
    """Run the property suites; exit 0 only if all pass."""
    _run(ctx, _verify, flags)


def _sweep_options(func):
    func = click.option("--seeds", callback=_int_list, help="Comma-separated seeds.")(func)
    return click.option("--p-list", callback=_int_list, help="Comma-separated flow exponents.")(func)


def _check_sweep_lists(flags: dict) -> None:
    if flags.get("p_list") == [] or flags.get("seeds") == []:
        raise click.UsageError("--p-list and --seeds must not be empty")


@cli.command(context_settings=_EXTRA)
@common_options
@_sweep_options
def sweep(ctx, **flags):
    """Run the rates pipeline over every (p, seed) pair."""
    _check_sweep_lists(flags)
    _run(ctx, _sweep, flags)


@cli.command(context_settings=_EXTRA)
@common_options
@_sweep_options
def run(ctx, **flags):
    """Run whichever experiment the config names (simulate unless set)."""
    _check_sweep_lists(flags)
    _run(ctx, lambda config: ACTIONS[config.experiment](config), flags)


if __name__ == "__main__":
    cli()
