import logging
import sys
from pathlib import Path
from typing import Dict, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, fmt_float, make_table
from ..evaluation import McNemarResult, mcnemar, paired_correctness, prediction_labels
from ..exceptions import EXIT_OK
from ..ingest import fmt, read_predictions, write_json
from ..pipeline import evaluation_sets, output_path, trusted_data

MCNEMAR_FILE = "mcnemar.json"


def display_mcnemar(
    system_a: Path,
    system_b: Path,
    exact: bool,
    correction: Optional[bool],
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = compare(system_a, system_b, exact, correction, config, logger)

    table = make_table(
        f"McNemar: {system_a.name} vs {system_b.name}",
        ["Relation", "b", "c", "Chi-square", "p"],
        right=["b", "c", "Chi-square", "p"],
    )
    for relation, r in result.tests.items():
        table.add_row(
            relation, str(r.b), str(r.c), fmt_float(r.chi_square), fmt_float(r.p_value)
        )

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            f"{rel}\t{r.b}\t{r.c}\t{fmt(r.chi_square)}\t{r.p_value!r}"
            for rel, r in result.tests.items()
        ),
        json_content={"result": "success", "tests": result.tests, "path": result.path},
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class CompareResult(NamedTuple):
    tests: Dict[str, McNemarResult]
    path: Path


def compare(
    system_a: Path,
    system_b: Path,
    exact: bool = False,
    correction: Optional[bool] = None,
    config: Optional[RunConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> CompareResult:
    """
    McNemar's test between two prediction files on each relation's gold set.
    b counts gold sentences only system A labels correctly, c the reverse.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    correction = config.mcnemar_correction if correction is None else correction
    predictions_a = read_predictions(system_a)
    predictions_b = read_predictions(system_b)
    data = trusted_data(config, logger)
    sets = evaluation_sets(data, config, logger)
    tests = {}
    for relation, ev in sets.items():
        pairs = paired_correctness(
            prediction_labels(predictions_a, relation),
            prediction_labels(predictions_b, relation),
            ev.gold,
        )
        tests[relation] = mcnemar(pairs, correction=correction, exact=exact)
        if tests[relation].degenerate:
            logger.warning(f"No discordant pairs for '{relation}'; the test is void")
    path = write_json(
        output_path(config, MCNEMAR_FILE),
        {
            "system_a": str(system_a),
            "system_b": str(system_b),
            "tests": tests,
        },
    )
    return CompareResult(tests=tests, path=path)
