"""
Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 wrong population count for two-pop,
4 infeasible, 5 unbounded, 6 verification disagreement, 1 anything else.
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import click

from app.errors import FairScoreError, VerificationError
from app.main import configure_logging
from app.services.correction_service import CorrectionService
from app.services.instance_service import InstanceService
from app.services.report_service import ReportService, RunReport
from app.services.synth_service import SynthService

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Map library exceptions onto exit codes."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except FairScoreError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)
        except Exception as e:
            logger.error(f"Unhandled error: {str(e)}", exc_info=True)
            click.echo(f"error: {e}", err=True)
            ctx.exit(1)

    return wrapper


def _instance_service(ctx: click.Context) -> InstanceService:
    return InstanceService(renormalize=ctx.obj["renormalize"])


def _correction_service(
    ctx: click.Context,
    instance_file: str,
    partition: Optional[str] = None,
    dump_lp: Optional[str] = None,
    debug_simplex: bool = False,
) -> CorrectionService:
    instance_service = _instance_service(ctx)
    instance = instance_service.load(instance_file)
    return CorrectionService(
        instance,
        source=instance_file,
        instance_service=instance_service,
        partition=partition,
        verify=ctx.obj["verify"],
        dump_lp=dump_lp,
        debug_stream=sys.stderr if debug_simplex else None,
    )


def _publish(report: RunReport, report_file: Optional[Path]) -> None:
    """Print the text report, write the JSON one, then fail on a disagreeing cross-check."""
    click.echo(ReportService.render_text(report))
    if report_file is not None:
        ReportService.write_json(report, report_file)
    if report.verification and report.verification.get("result") == "disagree":
        raise VerificationError(f"oracle cross-check disagrees: {report.verification}")


partition_option = click.option(
    "--partition",
    default=None,
    help='auto | single | majority | blocks:K | JSON array | path to a JSON array file',
)
dump_lp_option = click.option(
    "--dump-lp", type=click.Path(dir_okay=False), default=None, help="Write the LP listing here."
)
debug_simplex_option = click.option(
    "--debug-simplex", is_flag=True, help="Stream every simplex tableau to stderr."
)


@click.group()
@click.option("--quiet", is_flag=True, help="Only warnings and errors on stderr.")
@click.option(
    "--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False), default=None
)
@click.option("--verify", is_flag=True, hidden=True)
@click.option("--renormalize", is_flag=True, help="Rescale densities that do not integrate to 1.")
@click.pass_context
def cli(ctx: click.Context, quiet: bool, log_level: Optional[str], verify: bool, renormalize: bool):
    """Post-process score tables so population averages meet their targets."""
    configure_logging(log_level, quiet)
    ctx.ensure_object(dict)
    ctx.obj.update(verify=verify, renormalize=renormalize)


@cli.command()
@click.argument("instance_file", type=click.Path(dir_okay=False))
@click.option(
    "--scores",
    type=click.Path(dir_okay=False),
    default=None,
    help="Audit this score table instead of the instance's own scores.",
)
@click.option("--report-file", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@handle_errors
def audit(
    ctx: click.Context, instance_file: str, scores: Optional[str], report_file: Optional[str]
):
    """Average score and target gap of every population."""
    service = _correction_service(ctx, instance_file)
    table = None
    if scores is not None:
        table = service.instance_service.load_score_table(scores, space=service.instance.space)
    report = service.audit(table)
    _publish(report, Path(report_file) if report_file else None)


@cli.command("two-pop")
@click.argument("instance_file", type=click.Path(dir_okay=False))
@click.argument("out_file", type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def two_pop(ctx: click.Context, instance_file: str, out_file: str):
    """Equalize two population averages with the smallest worst-case change."""
    service = _correction_service(ctx, instance_file)
    report = service.two_pop(out_file)
    _publish(report, ReportService.report_path_for(out_file))


@cli.command()
@click.argument("instance_file", type=click.Path(dir_okay=False))
@click.argument("out_file", type=click.Path(dir_okay=False))
@partition_option
@dump_lp_option
@debug_simplex_option
@click.pass_context
@handle_errors
def remove(
    ctx: click.Context,
    instance_file: str,
    out_file: str,
    partition: Optional[str],
    dump_lp: Optional[str],
    debug_simplex: bool,
):
    """Hit every target with the smallest flat correction."""
    service = _correction_service(ctx, instance_file, partition, dump_lp, debug_simplex)
    report = service.remove(out_file)
    _publish(report, ReportService.report_path_for(out_file))


@cli.command()
@click.argument("instance_file", type=click.Path(dir_okay=False))
@click.argument("out_file", type=click.Path(dir_okay=False))
@click.option("--epsilon", type=float, required=True, help="Largest allowed change per cell.")
@partition_option
@dump_lp_option
@debug_simplex_option
@click.pass_context
@handle_errors
def inverse(
    ctx: click.Context,
    instance_file: str,
    out_file: str,
    epsilon: float,
    partition: Optional[str],
    dump_lp: Optional[str],
    debug_simplex: bool,
):
    """Minimize the worst target gap with every change bounded by epsilon."""
    service = _correction_service(ctx, instance_file, partition, dump_lp, debug_simplex)
    report = service.inverse(out_file, epsilon)
    _publish(report, ReportService.report_path_for(out_file))


@cli.command()
@click.argument("instance_file", type=click.Path(dir_okay=False))
@click.option("--points", type=int, default=11, show_default=True)
@partition_option
@click.option("--report-file", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@handle_errors
def tradeoff(
    ctx: click.Context,
    instance_file: str,
    points: int,
    partition: Optional[str],
    report_file: Optional[str],
):
    """Worst target gap across error budgets from 0 to twice the forward optimum."""
    service = _correction_service(ctx, instance_file, partition)
    report = service.tradeoff(points)
    _publish(report, Path(report_file) if report_file else None)


@cli.command()
@click.argument("out_file", type=click.Path(dir_okay=False))
@click.option("--cells", type=int, default=100, show_default=True)
@click.option("--pops", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--separation", type=float, default=0.2, show_default=True)
@click.pass_context
@handle_errors
def synth(ctx: click.Context, out_file: str, cells: int, pops: int, seed: int, separation: float):
    """Write a deterministic synthetic instance."""
    instance = SynthService(cells, pops, seed=seed, separation=separation).generate()
    _instance_service(ctx).save(instance, out_file)
    click.echo(f"wrote {out_file}: {cells} cells, {pops} populations, seed {seed}")


if __name__ == "__main__":
    cli()
