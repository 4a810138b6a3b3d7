import logging
import sys
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, TypeVar

import click

from .base_logger import make_logger
from .config import RunConfig, load_config
from .core.aggregate import display_aggregate
from .core.agreement import display_agreement_sweep
from .core.evaluate import display_evaluate
from .core.filter_workers import display_filter_workers
from .core.gold import (
    display_adjudicate_export,
    display_adjudicate_import,
    display_build_gold,
)
from .core.import_crowd import display_import
from .core.label import display_label
from .core.mcnemar import display_mcnemar
from .core.report import display_report
from .core.score import display_score
from .core.simulate import display_simulate
from .core.splits import display_splits
from .core.stability import display_stability
from .core.validate import display_validate
from .core.weighted_eval import display_weighted_eval
from .display import RichDisplayer
from .exceptions import CrowdLabelError
from .ingest import write_json
from .models import Provenance

ERROR_FILE = "error.json"


def _apply_overrides(
    config: RunConfig,
    output_dir: Optional[Path],
    threads: Optional[int],
    allow_thin: bool = False,
) -> RunConfig:
    update: Dict[str, Any] = {}
    if allow_thin:
        update["allow_thin"] = True
    if output_dir is not None:
        update["output_dir"] = output_dir
    if threads is not None:
        update["threads"] = threads
    return config.model_copy(update=update) if update else config


def _write_error(config: Optional[RunConfig], e: CrowdLabelError) -> None:
    if config is None:
        return
    try:
        write_json(Path(config.output_dir) / ERROR_FILE, e.to_dict())
    except (IOError, OSError):
        pass


def cli_exec(  # type: ignore[no-untyped-def]
    fn: Callable[..., int],
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
    *args,
    allow_thin: bool = False,
) -> None:
    try:
        displayer = RichDisplayer(quiet, json, plain)
    except CrowdLabelError as e:
        # can't use the displayer to render the error message if we can't
        # initialize the displayer itself
        print(f"ERROR! {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    config = None
    try:
        config = _apply_overrides(
            load_config(config_file), output_dir, threads, allow_thin
        )
        logger = make_logger(DEBUG_TO_LEVEL[debug])
        code = fn(*args, config, displayer, logger)
        stale = Path(config.output_dir) / ERROR_FILE
        if code == 0 and stale.is_file():
            stale.unlink()
        sys.exit(code)
    except CrowdLabelError as e:
        displayer.print_exception(e)
        _write_error(config, e)
        sys.exit(e.exit_code)


class CrowdLabelGroup(click.Group):
    """
    Typical click Group class, but displays the usage epilog without an indent.
    """

    def format_epilog(
        self, ctx: Optional[click.Context], formatter: click.HelpFormatter
    ) -> None:
        if self.epilog:
            formatter.write_paragraph()
            for line in self.epilog.split("\n"):
                formatter.write_text(line)


DEBUG_TO_LEVEL: Dict[bool, int] = {
    True: logging.DEBUG,
    False: logging.CRITICAL,
}
EXAMPLES = """\
Examples:
  Draw a synthetic corpus and run the whole pipeline on it.
    $ crowdlabel simulate -o sim --seed 7
    $ crowdlabel report -c sim/crowdlabel.yml
  Remove spammers and write the worker report.
    $ crowdlabel filter-workers -c crowdlabel.yml
  Write ambiguity-weighted crowd training labels at a fixed threshold.
    $ crowdlabel label --provenance crowd --threshold 0.5
  Compare two classifiers on the gold set.
    $ crowdlabel mcnemar predictions_crowd.csv predictions_expert.csv
"""
CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}


@click.group(cls=CrowdLabelGroup, context_settings=CONTEXT_SETTINGS, epilog=EXAMPLES)
@click.version_option(None, "--version", "-V")
def cli() -> None:
    """Turn multi-annotator crowd judgments into disagreement-aware ground truth
    and evaluate classifiers against it.
    """


R = TypeVar("R")


def global_options(f: Callable[..., R]) -> Callable[..., Callable[..., R]]:
    @wraps(f)
    @click.option(
        "-q", "--quiet", is_flag=True, default=False, help="Suppress unnecessary output"
    )
    @click.option(
        "-j",
        "--json",
        is_flag=True,
        default=False,
        help=(
            "Show output in machine-readable JSON format. Mutually exclusive with"
            " -p/--plain"
        ),
    )
    @click.option(
        "-p",
        "--plain",
        is_flag=True,
        default=False,
        help=(
            "Show output in plain machine-readable format. Mutually exclusive with"
            " -j/--json"
        ),
    )
    @click.option(
        "-d",
        "--debug",
        is_flag=True,
        default=False,
        help="Show detailed debugging logs",
    )
    @click.option(
        "-c",
        "--config",
        "config_file",
        type=click.Path(path_type=Path),
        help="Configuration file (default: $CROWDLABEL_CONFIG or ./crowdlabel.yml)",
    )
    @click.option(
        "-o",
        "--output-dir",
        type=click.Path(file_okay=False, path_type=Path),
        help="Write artifacts to this directory instead of the configured one",
    )
    @click.option(
        "--threads",
        type=click.IntRange(min=1),
        help="Upper bound on worker threads (default: available cores)",
    )
    def wrapper(*args, **kwargs):  # type: ignore[no-untyped-def]
        return f(*args, **kwargs)

    return wrapper


thin_option = click.option(
    "--allow-thin",
    is_flag=True,
    default=False,
    help="Keep sentences below the worker floor (default: configured allow_thin)",
)


@cli.command("validate", context_settings=CONTEXT_SETTINGS)
@global_options
def cli_validate(
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Check the dataset against the schema and write validation.json."""
    cli_exec(
        display_validate, quiet, json, plain, debug, config_file, output_dir, threads
    )


@cli.command("import", context_settings=CONTEXT_SETTINGS)
@click.argument("export", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "-e",
    "--expert-file",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Ground-truth file with a signed expert column",
)
@click.option(
    "--expert-column",
    default="expert",
    show_default=True,
    help="Name of the signed expert column in --expert-file",
)
@global_options
def cli_import(
    export: Path,
    expert_file: Optional[Path],
    expert_column: str,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Convert crowd-platform export EXPORT into sentences and judgments files."""
    cli_exec(
        display_import,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        export,
        expert_file,
        expert_column,
    )


@cli.command("filter-workers", context_settings=CONTEXT_SETTINGS)
@global_options
def cli_filter_workers(
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Compute worker agreement metrics and remove spammers."""
    cli_exec(
        display_filter_workers,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
    )


@cli.command("aggregate", context_settings=CONTEXT_SETTINGS)
@thin_option
@global_options
def cli_aggregate(
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Write the per-sentence annotation vectors of the trusted workers."""
    cli_exec(
        display_aggregate,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        allow_thin=allow_thin,
    )


@cli.command("score", context_settings=CONTEXT_SETTINGS)
@thin_option
@global_options
def cli_score(
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Write sentence-relation scores and clarity tables."""
    cli_exec(
        display_score,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        allow_thin=allow_thin,
    )


@cli.command("label", context_settings=CONTEXT_SETTINGS)
@click.option(
    "--provenance",
    type=click.Choice([p.value for p in Provenance]),
    required=True,
    help="Label source of the training set",
)
@click.option(
    "-t",
    "--threshold",
    type=click.FloatRange(min=0, max=1),
    help="Crowd positive/negative threshold (default: configured threshold)",
)
@click.option(
    "-r",
    "--relation",
    "relations",
    multiple=True,
    help="Target relation (default: configured relations)",
)
@thin_option
@global_options
def cli_label(
    provenance: str,
    threshold: Optional[float],
    relations: Tuple[str, ...],
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Write one training set per relation from the chosen label source."""
    cli_exec(
        display_label,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        Provenance(provenance),
        threshold,
        list(relations),
        allow_thin=allow_thin,
    )


@cli.command("agreement-sweep", context_settings=CONTEXT_SETTINGS)
@thin_option
@global_options
def cli_agreement_sweep(
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Sweep crowd/expert agreement over the threshold grid."""
    cli_exec(
        display_agreement_sweep,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        allow_thin=allow_thin,
    )


@cli.command("build-gold", context_settings=CONTEXT_SETTINGS)
@click.option(
    "-t",
    "--threshold",
    type=click.FloatRange(min=0, max=1),
    help="Crowd threshold (default: each relation's best agreement threshold)",
)
@thin_option
@global_options
def cli_build_gold(
    threshold: Optional[float],
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Build the gold evaluation set of every target relation."""
    cli_exec(
        display_build_gold,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        threshold,
        allow_thin=allow_thin,
    )


@cli.command("adjudicate-export", context_settings=CONTEXT_SETTINGS)
@click.option(
    "-t",
    "--threshold",
    type=click.FloatRange(min=0, max=1),
    help="Crowd threshold (default: each relation's best agreement threshold)",
)
@thin_option
@global_options
def cli_adjudicate_export(
    threshold: Optional[float],
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Write the crowd/expert disagreements that still need adjudication."""
    cli_exec(
        display_adjudicate_export,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        threshold,
        allow_thin=allow_thin,
    )


@cli.command("adjudicate-import", context_settings=CONTEXT_SETTINGS)
@click.argument("queue", type=click.Path(dir_okay=False, path_type=Path))
@global_options
def cli_adjudicate_import(
    queue: Path,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Merge the resolutions filled into adjudication queue QUEUE."""
    cli_exec(
        display_adjudicate_import,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        queue,
    )


@cli.command("splits", context_settings=CONTEXT_SETTINGS)
@global_options
def cli_splits(
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Write seeded cross-validation folds over the expert-annotated sentences."""
    cli_exec(display_splits, quiet, json, plain, debug, config_file, output_dir, threads)


@cli.command("evaluate", context_settings=CONTEXT_SETTINGS)
@click.argument(
    "predictions", nargs=-1, required=True, type=click.Path(dir_okay=False, path_type=Path)
)
@click.option(
    "-s",
    "--splits",
    "splits_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Splits file; evaluate on each of its test folds",
)
@click.option(
    "-n",
    "--training-size",
    "training_sizes",
    type=click.IntRange(min=1),
    multiple=True,
    help="Training-set size of each prediction file, in order (learning curve)",
)
@thin_option
@global_options
def cli_evaluate(
    predictions: Tuple[Path, ...],
    splits_path: Optional[Path],
    training_sizes: Tuple[int, ...],
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Score prediction files PREDICTIONS against the gold sets."""
    cli_exec(
        display_evaluate,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        list(predictions),
        splits_path,
        list(training_sizes),
        allow_thin=allow_thin,
    )


@cli.command("weighted-eval", context_settings=CONTEXT_SETTINGS)
@thin_option
@global_options
def cli_weighted_eval(
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Compare crowd, expert, single-worker and baseline labels against gold."""
    cli_exec(
        display_weighted_eval,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        allow_thin=allow_thin,
    )


@cli.command("mcnemar", context_settings=CONTEXT_SETTINGS)
@click.argument("system-a", type=click.Path(dir_okay=False, path_type=Path))
@click.argument("system-b", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--exact", is_flag=True, default=False, help="Use the exact binomial test"
)
@click.option(
    "--correction/--no-correction",
    default=None,
    help="Apply the continuity correction (default: configured)",
)
@thin_option
@global_options
def cli_mcnemar(
    system_a: Path,
    system_b: Path,
    exact: bool,
    correction: Optional[bool],
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Test whether prediction files SYSTEM_A and SYSTEM_B differ on gold."""
    cli_exec(
        display_mcnemar,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        system_a,
        system_b,
        exact,
        correction,
        allow_thin=allow_thin,
    )


@cli.command("stability", context_settings=CONTEXT_SETTINGS)
@thin_option
@global_options
def cli_stability(
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Write the stability curves by number of workers."""
    cli_exec(
        display_stability,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        allow_thin=allow_thin,
    )


@cli.command("simulate", context_settings=CONTEXT_SETTINGS)
@click.option("--seed", type=int, help="Simulation seed (default: configured seed)")
@global_options
def cli_simulate(
    seed: Optional[int],
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Draw a synthetic corpus with known latent truth."""
    cli_exec(
        display_simulate,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        seed,
    )


@cli.command("report", context_settings=CONTEXT_SETTINGS)
@thin_option
@global_options
def cli_report(
    allow_thin: bool,
    quiet: bool,
    json: bool,
    plain: bool,
    debug: bool,
    config_file: Optional[Path],
    output_dir: Optional[Path],
    threads: Optional[int],
) -> None:
    """Run every stage and write summary.json with artifact checksums."""
    cli_exec(
        display_report,
        quiet,
        json,
        plain,
        debug,
        config_file,
        output_dir,
        threads,
        allow_thin=allow_thin,
    )
