import logging
import sys
from pathlib import Path
from typing import List, NamedTuple, Optional

from ..adapters import import_crowd_export, import_expert_column
from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, make_table
from ..exceptions import EXIT_OK, DataError
from ..ingest import (
    load_schema,
    serialize_expert_labels,
    serialize_judgments,
    serialize_sentences,
    write_bytes,
)
from ..pipeline import output_path


def display_import(
    export: Path,
    expert_file: Optional[Path],
    expert_column: str,
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = import_crowd(export, expert_file, expert_column, config, logger)

    table = make_table("Imported crowd export", ["Artifact", "Records"], right=["Records"])
    for path, count in zip(result.paths, result.counts):
        table.add_row(str(path), str(count))
    if result.repeated_rows:
        table.caption = f"{result.repeated_rows} row(s) repeated a known unit"

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            f"{path}\t{count}" for path, count in zip(result.paths, result.counts)
        ),
        json_content={"result": "success", **result._asdict()},
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class ImportCrowdResult(NamedTuple):
    paths: List[Path]
    counts: List[int]
    repeated_rows: int


def import_crowd(
    export: Path,
    expert_file: Optional[Path] = None,
    expert_column: str = "expert",
    config: Optional[RunConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> ImportCrowdResult:
    """
    Convert a crowd-platform export (and optionally a ground-truth file with a
    signed expert column) into sentences.csv, judgments.csv and expert.csv.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    schema = load_schema(config.schema_path)
    try:
        with open(export, "rb") as f:
            imported = import_crowd_export(f.read(), schema, config.adapter, logger)
    except (IOError, OSError):
        raise DataError(f"Failed to read crowd export {export}")

    paths = [
        write_bytes(
            output_path(config, "sentences.csv"), serialize_sentences(imported.sentences)
        ),
        write_bytes(
            output_path(config, "judgments.csv"), serialize_judgments(imported.judgments)
        ),
    ]
    counts = [len(imported.sentences), len(imported.judgments)]

    if expert_file is not None:
        try:
            with open(expert_file, "rb") as f:
                labels = import_expert_column(
                    f.read(),
                    {s.id: s for s in imported.sentences},
                    expert_column=expert_column,
                )
        except (IOError, OSError):
            raise DataError(f"Failed to read expert file {expert_file}")
        labels.sort(key=lambda l: (l.sentence_id, l.relation))
        paths.append(
            write_bytes(output_path(config, "expert.csv"), serialize_expert_labels(labels))
        )
        counts.append(len(labels))
        logger.info(f"Imported {len(labels)} expert label(s) from {expert_file}")

    return ImportCrowdResult(
        paths=paths, counts=counts, repeated_rows=imported.repeated_rows
    )
