import logging
import sys
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, DisplayStyle, fmt_float, make_table
from ..exceptions import EXIT_OK, DataError
from ..ingest import (
    QueueEntry,
    parse_adjudication_queue,
    serialize_adjudications,
    serialize_gold,
    serialize_queue,
    write_bytes,
    write_json,
)
from ..models import AdjudicationRecord
from ..pipeline import (
    QUEUE_FILE,
    adjudications_file,
    evaluation_sets,
    output_path,
    read_adjudication_records,
    trusted_data,
)
from ..scoring import EvaluationSet


def display_build_gold(
    threshold: Optional[float],
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = build_gold(threshold, config, logger)

    table = make_table(
        "Gold sets",
        ["Relation", "Threshold", "Gold", "Positive", "Adjudicated", "Dropped"],
        right=["Threshold", "Gold", "Positive", "Adjudicated", "Dropped"],
    )
    for relation, ev in result.sets.items():
        table.add_row(
            relation,
            fmt_float(ev.threshold, 2),
            str(len(ev.gold)),
            str(sum(ev.gold.values())),
            str(len(ev.adjudicated)),
            str(len(ev.dropped_unresolved)),
        )

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(str(p) for p in result.paths),
        json_content={
            "result": "success",
            "thresholds": {r: ev.threshold for r, ev in result.sets.items()},
            "paths": result.paths,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class BuildGoldResult(NamedTuple):
    sets: Dict[str, EvaluationSet]
    paths: List[Path]


def gold_document(ev: EvaluationSet) -> Dict[str, object]:
    return {
        "relation": ev.relation,
        "threshold": ev.threshold,
        "gold": ev.gold,
        "agreed": ev.agreed,
        "adjudicated": ev.adjudicated,
        "dropped_unresolved": ev.dropped_unresolved,
        "unscored": ev.unscored,
    }


def build_gold(
    threshold: Optional[float] = None,
    config: Optional[RunConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> BuildGoldResult:
    """
    Build the evaluation set of every target relation and write gold_<relation>.csv
    and gold_<relation>.json. Without a threshold each relation uses its
    agreement-maximizing one. Unadjudicated disagreements stop the run with the
    adjudication queue written.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    data = trusted_data(config, logger)
    sets = evaluation_sets(data, config, logger, threshold)
    paths = []
    for relation, ev in sets.items():
        gold_path = output_path(config, f"gold_{relation}.csv")
        paths.append(write_bytes(gold_path, serialize_gold(ev.gold)))
        paths.append(
            write_json(output_path(config, f"gold_{relation}.json"), gold_document(ev))
        )
    return BuildGoldResult(sets=sets, paths=paths)


def display_adjudicate_export(
    threshold: Optional[float],
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = adjudicate_export(threshold, config, logger)

    if not result.entries:
        displayer.print(
            pretty_content="✅ Nothing to adjudicate",
            plain_content="Nothing to adjudicate",
            json_content={"result": "success", "pending": 0, "path": result.path},
            stream=sys.stdout,
            level=DisplayLevel.NORMAL,
            style=DisplayStyle.SUCCESS,
        )
        return EXIT_OK

    table = make_table(
        f"{len(result.entries)} disagreement(s) to adjudicate",
        ["Sentence", "Relation", "srs", "Expert"],
        right=["srs"],
    )
    for e in result.entries:
        table.add_row(
            e.sentence_id, e.relation, fmt_float(e.srs), "1" if e.expert_decision else "0"
        )
    table.caption = f"Fill in the resolution column of {result.path}"

    displayer.print(
        pretty_content=table,
        plain_content=str(result.path),
        json_content={
            "result": "success",
            "pending": len(result.entries),
            "path": result.path,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class AdjudicateExportResult(NamedTuple):
    entries: List[QueueEntry]
    path: Path


def adjudicate_export(
    threshold: Optional[float] = None,
    config: Optional[RunConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> AdjudicateExportResult:
    """Write every crowd/expert disagreement that still lacks an adjudication."""
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    data = trusted_data(config, logger)
    sets = evaluation_sets(data, config, logger, threshold, stop_on_pending=False)
    entries = [e for ev in sets.values() for e in ev.pending]
    path = write_bytes(output_path(config, QUEUE_FILE), serialize_queue(entries))
    logger.info(f"Wrote {len(entries)} pending disagreement(s) to {path}")
    return AdjudicateExportResult(entries=entries, path=path)


def display_adjudicate_import(
    queue: Path,
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = adjudicate_import(queue, config, logger)

    message = (
        f"Merged {result.imported} adjudication(s) into {result.path}"
        f" ({len(result.records)} total, {result.blank} left blank)"
    )
    displayer.print(
        pretty_content=f"✅ {message}",
        plain_content=message,
        json_content={"result": "success", **result._asdict()},
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
        style=DisplayStyle.SUCCESS,
    )
    return EXIT_OK


class AdjudicateImportResult(NamedTuple):
    records: List[AdjudicationRecord]
    imported: int
    blank: int
    path: Path


def adjudicate_import(
    queue: Path,
    config: Optional[RunConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> AdjudicateImportResult:
    """
    Merge the resolutions filled into a queue file with the existing
    adjudications. A new resolution for a (sentence, relation) pair replaces
    the old one; rows left blank are skipped.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    try:
        with open(queue, "rb") as f:
            entries = parse_adjudication_queue(f.read())
    except (IOError, OSError):
        raise DataError(f"Failed to read adjudication queue {queue}")

    merged = {(r.sentence_id, r.relation): r for r in read_adjudication_records(config)}
    imported = blank = 0
    for e in entries:
        if e.resolution is None:
            blank += 1
            continue
        merged[(e.sentence_id, e.relation)] = AdjudicationRecord(
            sentence_id=e.sentence_id, relation=e.relation, resolution=e.resolution
        )
        imported += 1
    if blank:
        logger.warning(f"{blank} queue row(s) have no resolution yet")

    records = [merged[key] for key in sorted(merged)]
    path = write_bytes(adjudications_file(config), serialize_adjudications(records))
    return AdjudicateImportResult(
        records=records, imported=imported, blank=blank, path=path
    )
