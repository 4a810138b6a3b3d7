import logging
import sys
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, fmt_float, make_table
from ..evaluation import (
    LearningPoint,
    PredictionEvaluation,
    SplitPlan,
    evaluate_predictions,
    learning_curve,
)
from ..exceptions import EXIT_OK, ConfigError
from ..ingest import read_predictions, write_csv, write_json
from ..models import PredictionRecord
from ..pipeline import evaluation_sets, output_path, trusted_data
from .splits import read_plan

CURVE_COLUMNS = [
    "training_size",
    "precision",
    "recall",
    "f1",
    "accuracy",
    "weighted_precision",
    "weighted_recall",
    "weighted_f1",
    "pooled_f1",
    "pooled_weighted_f1",
]


def display_evaluate(
    predictions: Sequence[Path],
    splits_path: Optional[Path],
    training_sizes: Sequence[int],
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = evaluate(predictions, splits_path, training_sizes, config, logger)

    table = make_table(
        "Prediction quality" + (f" ({result.plan.k} folds)" if result.plan else ""),
        ["Relation", "P", "R", "F1", "P'", "R'", "F1'", "Accuracy"],
        right=["P", "R", "F1", "P'", "R'", "F1'", "Accuracy"],
    )
    for relation, ev in result.evaluations.items():
        m = ev.mean
        table.add_row(
            relation,
            *[
                fmt_float(v)
                for v in (
                    m.precision,
                    m.recall,
                    m.f1,
                    m.weighted_precision,
                    m.weighted_recall,
                    m.weighted_f1,
                    m.accuracy,
                )
            ],
        )

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            f"{r}\t{ev.mean.f1!r}\t{ev.mean.weighted_f1!r}"
            for r, ev in result.evaluations.items()
        ),
        json_content={
            "result": "success",
            "mean": {r: ev.mean for r, ev in result.evaluations.items()},
            "paths": result.paths,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class EvaluateResult(NamedTuple):
    evaluations: Dict[str, PredictionEvaluation]
    curves: Dict[str, List[LearningPoint]]
    plan: Optional[SplitPlan]
    paths: List[Path]


def curve_rows(points: Sequence[LearningPoint]) -> List[List[object]]:
    return [
        [
            p.training_size,
            p.mean.precision,
            p.mean.recall,
            p.mean.f1,
            p.mean.accuracy,
            p.mean.weighted_precision,
            p.mean.weighted_recall,
            p.mean.weighted_f1,
            p.pooled.f1,
            p.pooled.weighted_f1,
        ]
        for p in points
    ]


def evaluate(
    predictions: Sequence[Path],
    splits_path: Optional[Path] = None,
    training_sizes: Sequence[int] = (),
    config: Optional[RunConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> EvaluateResult:
    """
    Score prediction files against the gold set of every target relation, per
    fold when a splits file is given. Several prediction files need a training
    size each and form a learning curve; the largest one gives the report.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    if not predictions:
        raise ConfigError("At least one prediction file is required")
    if len(predictions) > 1 and len(training_sizes) != len(predictions):
        raise ConfigError(
            "Give one -n/--training-size per prediction file when evaluating"
            f" {len(predictions)} files"
        )
    if training_sizes and len(training_sizes) != len(predictions):
        raise ConfigError(
            f"Got {len(training_sizes)} training size(s) for {len(predictions)}"
            " prediction file(s)"
        )

    plan = read_plan(splits_path) if splits_path is not None else None
    loaded: List[List[PredictionRecord]] = [read_predictions(p) for p in predictions]
    main = (
        max(range(len(loaded)), key=lambda i: training_sizes[i]) if training_sizes else 0
    )

    data = trusted_data(config, logger)
    sets = evaluation_sets(data, config, logger)
    evaluations: Dict[str, PredictionEvaluation] = {}
    curves: Dict[str, List[LearningPoint]] = {}
    paths = []
    for relation, ev in sets.items():
        evaluations[relation] = evaluate_predictions(
            loaded[main], relation, ev.gold, ev.srs, plan, config.thread_count, logger
        )
        report = {
            "relation": relation,
            "threshold": ev.threshold,
            "gold_size": len(ev.gold),
            "folds": [
                {"fold": f.fold, "report": f.report}
                for f in evaluations[relation].folds
            ],
            "mean": evaluations[relation].mean,
            "pooled": evaluations[relation].pooled,
        }
        if training_sizes:
            curves[relation] = learning_curve(
                zip(training_sizes, loaded),
                relation,
                ev.gold,
                ev.srs,
                plan,
                config.thread_count,
            )
            report["training_size"] = training_sizes[main]
            paths.append(
                write_csv(
                    output_path(config, f"learning_curve_{relation}.csv"),
                    CURVE_COLUMNS,
                    curve_rows(curves[relation]),
                )
            )
        paths.append(write_json(output_path(config, f"report_{relation}.json"), report))
    return EvaluateResult(
        evaluations=evaluations, curves=curves, plan=plan, paths=paths
    )
