import logging
import sys
from pathlib import Path
from typing import Dict, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, make_table
from ..evaluation import SplitPlan, make_splits
from ..exceptions import EXIT_OK, DataError
from ..ingest import (
    ALWAYS_TRAIN,
    SPLIT_COLUMNS,
    SplitRows,
    parse_splits_file,
    write_csv,
)
from ..pipeline import load_dataset, output_path

SPLITS_FILE = "splits.csv"


def display_splits(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    plan, path = splits(config, logger)

    table = make_table(
        f"{plan.k} fold(s), seed {plan.seed}", ["Fold", "Sentences"], right=["Sentences"]
    )
    for fold, size in enumerate(plan.fold_sizes()):
        table.add_row(str(fold), str(size))
    table.add_row(ALWAYS_TRAIN, str(len(plan.always_train)))

    displayer.print(
        pretty_content=table,
        plain_content=str(path),
        json_content={"result": "success", "plan": plan, "path": path},
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class SplitsResult(NamedTuple):
    plan: SplitPlan
    path: Path


def splits(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> SplitsResult:
    """
    Partition the expert-annotated sentences into folds; every other sentence is
    written as ALWAYS_TRAIN. The seed and fold count are echoed in a comment line.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    bundle = load_dataset(config, logger).bundle
    if not bundle.expert_labels:
        raise DataError("No expert labels available; configure expert_path")
    expert_ids = sorted({l.sentence_id for l in bundle.expert_labels})
    stratify_by = None
    if config.stratified_splits:
        stratify_by = {sid: False for sid in expert_ids}
        for l in bundle.expert_labels:
            stratify_by[l.sentence_id] = stratify_by[l.sentence_id] or l.decision
    plan = make_splits(
        expert_ids,
        bundle.sentences,
        k=config.folds,
        seed=config.split_seed,
        stratify_by=stratify_by,
    )
    logger.info(f"Fold sizes: {plan.fold_sizes()}")

    rows = [[sid, fold] for sid, fold in plan.folds.items()]
    rows += [[sid, ALWAYS_TRAIN] for sid in plan.always_train]
    path = write_csv(
        output_path(config, SPLITS_FILE),
        SPLIT_COLUMNS,
        sorted(rows, key=lambda r: str(r[0])),
        comment=f"seed={plan.seed} k={plan.k} stratified={int(plan.stratified)}",
    )
    return SplitsResult(plan=plan, path=path)


def read_plan(path: Path) -> SplitPlan:
    """Load a splits file written by the splits subcommand back into a plan."""
    try:
        rows: SplitRows = parse_splits_file(path)
    except (IOError, OSError):
        raise DataError(f"Failed to read splits file {path}")
    if not rows.folds:
        raise DataError(f"Splits file {path} assigns no sentence to a fold")
    seed = 0
    stratified = False
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    if first.startswith("#"):
        fields: Dict[str, str] = {}
        for part in first.lstrip("# ").split():
            key, _, value = part.partition("=")
            fields[key] = value
        try:
            seed = int(fields.get("seed", "0"))
        except ValueError:
            raise DataError(f"Splits file {path} has a malformed seed comment")
        stratified = fields.get("stratified") == "1"
    return SplitPlan(
        k=max(rows.folds.values()) + 1,
        seed=seed,
        folds={sid: rows.folds[sid] for sid in sorted(rows.folds)},
        always_train=tuple(sorted(rows.always_train)),
        stratified=stratified,
    )
