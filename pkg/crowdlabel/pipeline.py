"""Shared stages of the subcommands: load, filter, score, pick thresholds, build gold.

Every subcommand recomputes what it needs from the configured input files, so
no stage depends on state left behind by another run.
"""
import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

from .config import RunConfig
from .exceptions import AdjudicationRequired, ConfigError, DataError
from .ingest import (
    DatasetBundle,
    LoadResult,
    load_bundle,
    load_schema,
    read_adjudications,
    serialize_queue,
    write_bytes,
)
from .models import AdjudicationRecord, Judgment
from .schema import RelationSchema, ValidationReport
from .scoring import (
    AgreementPoint,
    EvaluationSet,
    ScoreTable,
    agreement_sweep,
    best_threshold,
    build_evaluation_set,
    expert_label_map,
    score_sentences,
)
from .vectors import SentenceVector, sentence_vectors
from .worker_quality import (
    FloorReport,
    SpamFilterResult,
    enforce_worker_floor,
    filter_spammers,
)

QUEUE_FILE = "adjudication_queue.csv"
ADJUDICATIONS_FILE = "adjudications.csv"


def output_path(config: RunConfig, name: str) -> Path:
    return Path(config.output_dir) / name


def load_dataset(
    config: RunConfig, logger: logging.Logger, strict: bool = True
) -> LoadResult:
    schema = load_schema(config.schema_path)
    check_relations(config, schema)
    return load_bundle(
        schema,
        config.sentences_path,
        config.judgments_path,
        config.expert_path,
        strict=strict,
        logger=logger,
    )


def check_relations(config: RunConfig, schema: RelationSchema) -> None:
    unknown = [r for r in config.relations if not schema.is_relation(r)]
    if unknown:
        raise ConfigError(f"Target relation(s) not in the schema: {', '.join(unknown)}")


class TrustedData(NamedTuple):
    bundle: DatasetBundle
    report: ValidationReport
    spam: Optional[SpamFilterResult]
    floor: FloorReport
    judgments: List[Judgment]
    vectors: Dict[str, SentenceVector]
    scores: ScoreTable

    @property
    def schema(self) -> RelationSchema:
        return self.bundle.relation_schema


def trusted_data(config: RunConfig, logger: logging.Logger) -> TrustedData:
    """
    Load the dataset, remove spammers (unless disabled), apply the worker floor
    and score every remaining sentence.
    """
    loaded = load_dataset(config, logger)
    bundle = loaded.bundle
    schema = bundle.relation_schema
    spam = None
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
        trusted = spam.trusted
        floor = spam.floor
    else:
        trusted = list(bundle.judgments)
        floor = enforce_worker_floor(trusted, bundle.sentences, config.worker_floor)

    kept = set(floor.kept(config.allow_thin))
    if not config.allow_thin and floor.thin:
        logger.warning(
            f"Excluding {len(floor.thin)} sentence(s) with fewer than"
            f" {config.worker_floor} trusted workers"
        )
    judgments = [j for j in trusted if j.sentence_id in kept]
    vectors = sentence_vectors(judgments, schema, config.thread_count)
    scores = score_sentences(vectors, schema, config.thread_count, logger)
    return TrustedData(
        bundle=bundle,
        report=loaded.report,
        spam=spam,
        floor=floor,
        judgments=judgments,
        vectors=vectors,
        scores=scores,
    )


def expert_views(data: TrustedData, relations: List[str]) -> Dict[str, Dict[str, bool]]:
    labels = data.bundle.expert_labels
    if not labels:
        raise DataError("No expert labels available; configure expert_path")
    return {r: expert_label_map(labels, r, data.schema) for r in relations}


class ThresholdChoice(NamedTuple):
    relation: str
    threshold: float
    curve: List[AgreementPoint]


def choose_thresholds(
    data: TrustedData, config: RunConfig, relations: Optional[List[str]] = None
) -> Dict[str, ThresholdChoice]:
    """Sweep crowd/expert agreement over the grid and keep each relation's argmax."""
    relations = relations or config.relations
    experts = expert_views(data, relations)
    choices = {}
    for relation in relations:
        curve = agreement_sweep(
            data.scores.for_relation(relation),
            experts[relation],
            config.threshold_grid,
            config.thread_count,
        )
        choices[relation] = ThresholdChoice(relation, best_threshold(curve), curve)
    return choices


def adjudications_file(config: RunConfig) -> Path:
    """The configured adjudications file, or adjudications.csv in the output directory."""
    if config.adjudications_path is not None:
        return Path(config.adjudications_path)
    return output_path(config, ADJUDICATIONS_FILE)


def read_adjudication_records(config: RunConfig) -> List[AdjudicationRecord]:
    path = adjudications_file(config)
    if not path.is_file():
        return []
    return read_adjudications(path)


def evaluation_sets(
    data: TrustedData,
    config: RunConfig,
    logger: logging.Logger,
    threshold: Optional[float] = None,
    stop_on_pending: bool = True,
) -> Dict[str, EvaluationSet]:
    """
    Gold sets for every target relation at the given threshold, or at each
    relation's agreement-maximizing threshold. Pending disagreements are
    written to the adjudication queue and stop the run.
    """
    relations = config.relations
    experts = expert_views(data, relations)
    if threshold is None:
        thresholds = {
            r: c.threshold for r, c in choose_thresholds(data, config, relations).items()
        }
    else:
        thresholds = {r: threshold for r in relations}
    adjudications = read_adjudication_records(config)
    sets = {
        r: build_evaluation_set(
            data.scores.for_relation(r),
            experts[r],
            r,
            thresholds[r],
            adjudications,
            logger,
        )
        for r in relations
    }
    pending = [entry for r in relations for entry in sets[r].pending]
    if pending and stop_on_pending:
        queue = write_bytes(output_path(config, QUEUE_FILE), serialize_queue(pending))
        raise AdjudicationRequired(
            ", ".join(r for r in relations if sets[r].pending),
            [f"{e.sentence_id}/{e.relation}" for e in pending],
            str(queue),
        )
    return sets
