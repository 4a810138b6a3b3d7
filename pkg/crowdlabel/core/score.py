import logging
import sys
from pathlib import Path
from typing import List, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, fmt_float, make_table
from ..exceptions import EXIT_OK
from ..ingest import SCORE_COLUMNS, write_csv, write_json
from ..pipeline import output_path, trusted_data
from ..scoring import ClarityReport, ScoreTable, clarity_report


def display_score(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = score(config, logger)
    relations = config.relations

    table = make_table(
        f"Sentence-relation scores ({len(result.scores.scores)} sentences)",
        ["Sentence"] + relations + ["Clarity"],
        right=relations + ["Clarity"],
    )
    for sid, row in result.scores.scores.items():
        table.add_row(
            sid,
            *[fmt_float(row[r]) for r in relations],
            fmt_float(result.clarity.sentence_clarity[sid]),
        )

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            "\t".join([sid] + [repr(row[r]) for r in relations])
            for sid, row in result.scores.scores.items()
        ),
        json_content={
            "result": "success",
            "scores": result.scores.scores,
            "zero_norm": result.scores.zero_norm,
            "paths": result.paths,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class ScoreResult(NamedTuple):
    scores: ScoreTable
    clarity: ClarityReport
    paths: List[Path]


def score(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> ScoreResult:
    """
    Score every trusted sentence against every schema option. Writes scores.csv,
    the two clarity tables and score.json.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    data = trusted_data(config, logger)
    clarity = clarity_report(data.scores, data.schema)
    paths = [
        write_csv(output_path(config, "scores.csv"), SCORE_COLUMNS, data.scores.rows()),
        write_csv(
            output_path(config, "clarity_sentences.csv"),
            ["sentence_id", "clarity"],
            clarity.sentence_clarity.items(),
        ),
        write_csv(
            output_path(config, "clarity_relations.csv"),
            ["relation", "clarity"],
            clarity.relation_clarity.items(),
        ),
        write_json(
            output_path(config, "score.json"),
            {
                "scores": data.scores.scores,
                "zero_norm": data.scores.zero_norm,
                "sentence_clarity": clarity.sentence_clarity,
                "relation_clarity": clarity.relation_clarity,
            },
        ),
    ]
    return ScoreResult(scores=data.scores, clarity=clarity, paths=paths)
