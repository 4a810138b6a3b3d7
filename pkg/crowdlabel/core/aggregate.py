import logging
import sys
from pathlib import Path
from typing import Dict, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, make_table
from ..exceptions import EXIT_OK
from ..ingest import write_csv
from ..pipeline import output_path, trusted_data
from ..schema import RelationSchema
from ..vectors import SentenceVector

MAX_SHOWN = 50


def display_aggregate(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = aggregate(config, logger)
    options = list(result.relation_schema.options)

    table = make_table(
        f"Sentence vectors ({len(result.vectors)} sentences)",
        ["Sentence"] + options + ["Workers"],
        right=options + ["Workers"],
    )
    for sid in list(result.vectors)[:MAX_SHOWN]:
        vector = result.vectors[sid]
        table.add_row(
            sid,
            *[str(v) for v in vector.as_dict(result.relation_schema).values()],
            str(vector.worker_count),
        )
    if len(result.vectors) > MAX_SHOWN:
        table.caption = f"{len(result.vectors) - MAX_SHOWN} more in {result.path}"

    displayer.print(
        pretty_content=table,
        plain_content=str(result.path),
        json_content={
            "result": "success",
            "path": result.path,
            "vectors": {
                sid: v.as_dict(result.relation_schema)
                for sid, v in result.vectors.items()
            },
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class AggregateResult(NamedTuple):
    relation_schema: RelationSchema
    vectors: Dict[str, SentenceVector]
    path: Path


def aggregate(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> AggregateResult:
    """Sum the trusted annotation vectors of every sentence into vectors.csv."""
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    data = trusted_data(config, logger)
    schema = data.schema
    path = write_csv(
        output_path(config, "vectors.csv"),
        ["sentence_id", *schema.options, "worker_count"],
        (
            [sid, *[int(c) for c in v.components], v.worker_count]
            for sid, v in data.vectors.items()
        ),
    )
    return AggregateResult(relation_schema=schema, vectors=data.vectors, path=path)
