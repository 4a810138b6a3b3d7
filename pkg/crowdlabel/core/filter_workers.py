import logging
import sys
from pathlib import Path
from typing import List, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, fmt_float, make_table
from ..exceptions import EXIT_OK
from ..ingest import serialize_judgments, write_bytes, write_csv, write_json
from ..pipeline import load_dataset, output_path
from ..worker_quality import (
    FloorReport,
    WorkerMetrics,
    enforce_worker_floor,
    filter_spammers,
    worker_metrics,
)

WORKER_COLUMNS = [
    "worker_id",
    "worker_sentence_agreement",
    "worker_worker_agreement",
    "judged_sentences",
    "spam_flag",
    "removal_round",
    "review_flag",
    "insufficient_evidence",
]


def display_filter_workers(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = filter_workers(config, logger)

    table = make_table(
        f"{len(result.spammers)} spammer(s) removed in {result.rounds} round(s)",
        ["Worker", "WSA", "WWA", "Sentences", "Spam", "Round"],
        right=["WSA", "WWA", "Sentences", "Round"],
    )
    for m in result.metrics:
        worker = f"[red]{m.worker_id}" if m.spam_flag else m.worker_id
        table.add_row(
            worker,
            fmt_float(m.worker_sentence_agreement),
            fmt_float(m.worker_worker_agreement),
            str(m.judged_sentences),
            "yes" if m.spam_flag else "",
            str(m.removal_round or ""),
        )
    if result.floor.thin:
        table.caption = (
            f"{len(result.floor.thin)} sentence(s) below the floor of"
            f" {result.floor.floor} workers"
        )

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            f"{m.worker_id}\t{m.worker_sentence_agreement!r}\t{int(m.spam_flag)}"
            for m in result.metrics
        ),
        json_content={
            "result": "success",
            "rounds": result.rounds,
            "spammers": result.spammers,
            "thin_sentences": result.floor.thin,
            "paths": result.paths,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class FilterWorkersResult(NamedTuple):
    metrics: List[WorkerMetrics]
    spammers: List[str]
    rounds: int
    floor: FloorReport
    paths: List[Path]


def filter_workers(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> FilterWorkersResult:
    """
    Compute worker metrics, remove spammers and check the worker floor. Writes
    workers.csv, workers.json, thin_sentences.csv and trusted_judgments.csv.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    bundle = load_dataset(config, logger).bundle
    schema = bundle.relation_schema
    if config.filter_spam:
        spam = filter_spammers(
            bundle.judgments,
            schema,
            threshold=config.spam_threshold,
            max_rounds=config.spam_max_rounds,
            min_judgments=config.spam_min_judgments,
            floor=config.worker_floor,
            sentence_ids=bundle.sentences,
            threads=config.thread_count,
            logger=logger,
        )
        metrics, trusted, rounds, floor = spam.metrics, spam.trusted, spam.rounds, spam.floor
    else:
        logger.info("Spam filtering disabled; reporting metrics only")
        trusted = list(bundle.judgments)
        metrics = worker_metrics(
            trusted, schema, config.spam_min_judgments, config.thread_count
        )
        rounds = 0
        floor = enforce_worker_floor(trusted, bundle.sentences, config.worker_floor)

    paths = [
        write_csv(
            output_path(config, "workers.csv"),
            WORKER_COLUMNS,
            ([getattr(m, c) for c in WORKER_COLUMNS] for m in metrics),
        ),
        write_csv(
            output_path(config, "thin_sentences.csv"),
            ["sentence_id", "worker_count"],
            ([sid, floor.worker_counts[sid]] for sid in floor.thin),
        ),
        write_bytes(
            output_path(config, "trusted_judgments.csv"), serialize_judgments(trusted)
        ),
        write_json(
            output_path(config, "workers.json"),
            {
                "rounds": rounds,
                "spam_threshold": config.spam_threshold,
                "workers": metrics,
                "thin_sentences": floor.thin,
            },
        ),
    ]
    return FilterWorkersResult(
        metrics=metrics,
        spammers=[m.worker_id for m in metrics if m.spam_flag],
        rounds=rounds,
        floor=floor,
        paths=paths,
    )
