import logging
import sys
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, fmt_float, make_table
from ..exceptions import EXIT_OK
from ..ingest import write_csv, write_json
from ..pipeline import (
    ThresholdChoice,
    choose_thresholds,
    expert_views,
    output_path,
    trusted_data,
)
from ..scoring import Disagreement, disagreement_report

AGREEMENT_COLUMNS = ["threshold", "agreement", "matches", "total"]
DISAGREEMENT_COLUMNS = [
    "sentence_id",
    "relation",
    "srs",
    "crowd_weight",
    "expert_decision",
    "text",
]


def display_agreement_sweep(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = agreement_sweep(config, logger)

    table = make_table(
        "Crowd/expert agreement",
        ["Relation", "Best threshold", "Agreement", "Disagreements"],
        right=["Best threshold", "Agreement", "Disagreements"],
    )
    for relation, choice in result.choices.items():
        best = next(p for p in choice.curve if p.threshold == choice.threshold)
        table.add_row(
            relation,
            fmt_float(choice.threshold, 2),
            fmt_float(best.agreement),
            str(len(result.disagreements[relation])),
        )

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            f"{r}\t{c.threshold!r}" for r, c in result.choices.items()
        ),
        json_content={
            "result": "success",
            "best_thresholds": {r: c.threshold for r, c in result.choices.items()},
            "paths": result.paths,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class AgreementSweepResult(NamedTuple):
    choices: Dict[str, ThresholdChoice]
    disagreements: Dict[str, List[Disagreement]]
    paths: List[Path]


def agreement_sweep(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> AgreementSweepResult:
    """
    Sweep crowd/expert agreement over the threshold grid for every target
    relation, and list the disagreements at each relation's best threshold.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    data = trusted_data(config, logger)
    choices = choose_thresholds(data, config)
    experts = expert_views(data, config.relations)

    paths = []
    disagreements = {}
    for relation, choice in choices.items():
        logger.info(f"Best threshold for '{relation}': {choice.threshold}")
        paths.append(
            write_csv(
                output_path(config, f"agreement_{relation}.csv"),
                AGREEMENT_COLUMNS,
                choice.curve,
            )
        )
        disagreements[relation] = disagreement_report(
            data.scores.for_relation(relation),
            experts[relation],
            relation,
            choice.threshold,
            data.bundle.sentences,
        )
        paths.append(
            write_csv(
                output_path(config, f"disagreements_{relation}.csv"),
                DISAGREEMENT_COLUMNS,
                disagreements[relation],
            )
        )
    paths.append(
        write_json(
            output_path(config, "agreement.json"),
            {
                relation: {
                    "best_threshold": choice.threshold,
                    "curve": [p._asdict() for p in choice.curve],
                }
                for relation, choice in choices.items()
            },
        )
    )
    return AgreementSweepResult(
        choices=choices, disagreements=disagreements, paths=paths
    )
