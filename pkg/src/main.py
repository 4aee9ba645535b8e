"""
Point d'entrée principal de l'outil de planification cinodynamique.
Fournit une interface en ligne de commande (CLI) pour exécuter TOPP, AVP,
l'oracle de vérification, les planificateurs et les benchmarks.
"""
import logging
import sys
from pathlib import Path
from typing import Optional

# When executed directly (python src/main.py), ensure project root is on sys.path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

import click

from src.config import Settings, settings
from src.core import pipeline
from src.core.models import RunReport
from src.core.reporting import format_summary
from src.logging_config import LOG_DIR, purge_log_dir, setup_logging

logger = logging.getLogger(__name__)
defaults = settings.commands.defaults

FILE = click.Path(dir_okay=False, path_type=Path)


def _finish(ctx: click.Context, report: RunReport) -> None:
    """Affiche la ligne de résultat et sort avec le code du rapport."""
    logger.info(format_summary(report), extra={"plain": True})
    ctx.exit(report.exit_code)


@click.group()
@click.option("--grid", type=click.IntRange(min=10), default=settings.numerics.grid, show_default=True,
              help="Nombre d'intervalles de la grille en s.")
@click.option("--epsilon", type=click.FloatRange(min=0.0, min_open=True), default=settings.numerics.epsilon,
              show_default=True, help="Précision de la bissection AVP.")
@click.option("--seed", type=int, default=None,
              help=f"Graine aléatoire (sinon celle du scénario, puis {defaults.seed}).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              default=settings.output_dir, show_default=True, help="Répertoire de sortie.")
@click.option("-v", "--verbose/--no-verbose", default=defaults.verbose, show_default=True,
              help="Active l'affichage détaillé des logs en console.")
@click.option("--reset-logs/--no-reset-logs", default=defaults.reset_logs, show_default=True,
              help="Supprime le répertoire de logs avant l'exécution.")
@click.pass_context
def cli(ctx: click.Context, grid: int, epsilon: float, seed: Optional[int], out_dir: Path,
        verbose: bool, reset_logs: bool):
    """Planification cinodynamique : TOPP, AVP et AVP-RRT."""
    log_dir = settings.app.log_dir
    if reset_logs:
        purge_log_dir(Path(log_dir) if log_dir is not None else LOG_DIR)
    setup_logging(verbose, log_dir=log_dir)

    resolved: Settings = settings.model_copy(deep=True)
    resolved.numerics.grid = grid
    resolved.numerics.epsilon = epsilon
    resolved.app.output_dir = out_dir
    ctx.obj = {"settings": resolved, "seed": seed, "out": out_dir}


@cli.command("topp")
@click.argument("scenario_file", type=FILE)
@click.argument("path_file", type=FILE)
@click.option("--sdot-beg", type=float, default=0.0, show_default=True, help="Vitesse de chemin initiale.")
@click.option("--sdot-end", type=float, default=0.0, show_default=True, help="Vitesse de chemin finale.")
@click.pass_context
def topp_command(ctx: click.Context, scenario_file: Path, path_file: Path, sdot_beg: float, sdot_end: float):
    """Paramétrage temporel optimal d'un chemin."""
    report = pipeline.run_topp(scenario_file, path_file, sdot_beg, sdot_end, ctx.obj["settings"], ctx.obj["out"])
    _finish(ctx, report)


@cli.command("avp")
@click.argument("scenario_file", type=FILE)
@click.argument("path_file", type=FILE)
@click.option("--lo", type=float, default=0.0, show_default=True, help="Borne basse de l'intervalle de départ.")
@click.option("--hi", type=float, default=0.0, show_default=True, help="Borne haute de l'intervalle de départ.")
@click.option("--direction", type=click.Choice(["fwd", "bwd"]), default="fwd", show_default=True,
              help="Propagation vers la fin (fwd) ou vers le début (bwd) du chemin.")
@click.pass_context
def avp_command(ctx: click.Context, scenario_file: Path, path_file: Path, lo: float, hi: float, direction: str):
    """Propagation des vitesses admissibles le long d'un chemin."""
    report = pipeline.run_avp(scenario_file, path_file, lo, hi, direction, ctx.obj["settings"], ctx.obj["out"])
    _finish(ctx, report)


@cli.command("plan")
@click.argument("scenario_file", type=FILE)
@click.option("--shortcut", "shortcut_iterations", type=click.IntRange(min=0), default=None,
              help=f"Itérations de raccourcissement (défaut : {settings.planner.shortcut_iterations}).")
@click.pass_context
def plan_command(ctx: click.Context, scenario_file: Path, shortcut_iterations: Optional[int]):
    """Planifie une trajectoire selon la variante du scénario."""
    report = pipeline.run_plan(
        scenario_file, ctx.obj["settings"], ctx.obj["out"],
        seed=ctx.obj["seed"], shortcut_iterations=shortcut_iterations,
    )
    _finish(ctx, report)


@cli.command("oracle")
@click.argument("scenario_file", type=FILE)
@click.argument("path_file", type=FILE)
@click.option("--lo", type=float, default=0.0, show_default=True, help="Borne basse de l'intervalle de départ.")
@click.option("--hi", type=float, default=0.0, show_default=True, help="Borne haute de l'intervalle de départ.")
@click.pass_context
def oracle_command(ctx: click.Context, scenario_file: Path, path_file: Path, lo: float, hi: float):
    """Compare AVP à l'oracle par grille d'atteignabilité."""
    report = pipeline.run_oracle(scenario_file, path_file, lo, hi, ctx.obj["settings"], ctx.obj["out"])
    _finish(ctx, report)


@cli.command("bench")
@click.argument("scenario_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--repeats", type=click.IntRange(min=1), default=settings.bench.repeats, show_default=True,
              help="Nombre d'exécutions par scénario.")
@click.option("--timing/--no-timing", default=False, show_default=True,
              help=f"Ajoute la comparaison de temps AVP/TOPP sur {settings.bench.timing_paths} chemins aléatoires.")
@click.pass_context
def bench_command(ctx: click.Context, scenario_dir: Path, repeats: int, timing: bool):
    """Exécute chaque scénario plusieurs fois et écrit le tableau de résultats."""
    seed = ctx.obj["seed"] if ctx.obj["seed"] is not None else defaults.seed
    report = pipeline.run_bench(
        scenario_dir, repeats, ctx.obj["settings"], ctx.obj["out"], seed=seed,
        timing_paths=ctx.obj["settings"].bench.timing_paths if timing else 0,
    )
    for row in report.metrics.get("table", []):
        logger.info(
            f"{row['scenario']} | {row['planner']} | success={row['successes']}/{row['runs']}",
            extra={"plain": True},
        )
    _finish(ctx, report)


if __name__ == "__main__":
    cli()
