import logging
import sys
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, make_table
from ..exceptions import EXIT_OK, DataError
from ..ingest import serialize_training, write_bytes
from ..models import Provenance, TrainingInstance
from ..pipeline import TrustedData, output_path, trusted_data
from ..scoring import (
    build_baseline_training_set,
    build_crowd_training_set,
    build_expert_training_set,
    build_single_training_set,
    check_threshold,
)


def display_label(
    provenance: Provenance,
    threshold: Optional[float],
    relations: Optional[List[str]],
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = label(provenance, threshold, relations, config, logger)

    table = make_table(
        f"{provenance.value.title()} training sets",
        ["Relation", "Positive", "Negative", "File"],
        right=["Positive", "Negative"],
    )
    for relation, instances in result.training_sets.items():
        positives = sum(1 for i in instances if i.positive)
        table.add_row(
            relation,
            str(positives),
            str(len(instances) - positives),
            str(result.paths[relation]),
        )

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(str(p) for p in result.paths.values()),
        json_content={
            "result": "success",
            "provenance": provenance,
            "threshold": result.threshold,
            "paths": result.paths,
            "unlabeled": result.unlabeled,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class LabelResult(NamedTuple):
    provenance: Provenance
    threshold: Optional[float]
    training_sets: Dict[str, List[TrainingInstance]]
    unlabeled: Dict[str, List[str]]
    paths: Dict[str, Path]


def _training_set(
    provenance: Provenance,
    relation: str,
    threshold: float,
    data: TrustedData,
    config: RunConfig,
    logger: logging.Logger,
) -> Tuple[List[TrainingInstance], List[str]]:
    bundle = data.bundle
    if provenance == Provenance.CROWD:
        scores = data.scores.for_relation(relation)
        return build_crowd_training_set(scores, relation, threshold, logger), []
    if provenance == Provenance.BASELINE:
        sentences = bundle.sentences.values()
        return build_baseline_training_set(sentences, relation, data.schema), []
    if provenance == Provenance.SINGLE:
        single = build_single_training_set(data.judgments, relation, config.single_seed)
        return single, []
    if not bundle.expert_labels:
        raise DataError("No expert labels available; configure expert_path")
    expert = build_expert_training_set(
        bundle.sentences.values(), bundle.expert_labels, relation, data.schema
    )
    return expert.instances, expert.unlabeled


def label(
    provenance: Provenance,
    threshold: Optional[float] = None,
    relations: Optional[List[str]] = None,
    config: Optional[RunConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> LabelResult:
    """
    Build one training set per relation from the chosen label source and write
    training_<provenance>_<relation>.csv.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    t = check_threshold(config.threshold if threshold is None else threshold)
    if relations:
        config = config.model_copy(update={"relations": list(relations)})
    data = trusted_data(config, logger)

    training_sets: Dict[str, List[TrainingInstance]] = {}
    unlabeled: Dict[str, List[str]] = {}
    paths: Dict[str, Path] = {}
    for relation in config.relations:
        instances, missing = _training_set(provenance, relation, t, data, config, logger)
        training_sets[relation] = instances
        if missing:
            unlabeled[relation] = missing
            logger.info(
                f"{len(missing)} sentence(s) have no expert label for '{relation}'"
            )
        paths[relation] = write_bytes(
            output_path(config, f"training_{provenance.value}_{relation}.csv"),
            serialize_training(instances),
        )
    return LabelResult(
        provenance=provenance,
        threshold=t if provenance == Provenance.CROWD else None,
        training_sets=training_sets,
        unlabeled=unlabeled,
        paths=paths,
    )
