import logging
import sys
from pathlib import Path
from typing import Dict, List, Mapping, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, fmt_float, make_table
from ..evaluation import MetricsReport, SweepPoint, annotation_quality, threshold_sweep
from ..exceptions import EXIT_OK
from ..ingest import write_csv, write_json
from ..models import Record
from ..pipeline import evaluation_sets, expert_views, output_path, trusted_data
from ..scoring import build_baseline_training_set, build_single_training_set, labels_of

SWEEP_COLUMNS = [
    "threshold",
    "precision",
    "recall",
    "f1",
    "weighted_precision",
    "weighted_recall",
    "weighted_f1",
]


class SourceQuality(Record):
    """Quality of a binary label source on the part of the gold set it covers."""

    source: str
    covered: int
    report: MetricsReport


def display_weighted_eval(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = weighted_eval(config, logger)

    tables = []
    for relation, sweep in result.sweeps.items():
        table = make_table(
            f"Annotation quality for '{relation}'",
            ["Labels", "P", "R", "F1", "P'", "R'", "F1'"],
            right=["P", "R", "F1", "P'", "R'", "F1'"],
        )
        rows = [(f"crowd@{p.threshold:.2f}", p.report) for p in sweep]
        rows += [(s.source, s.report) for s in result.sources[relation]]
        for name, r in rows:
            table.add_row(
                name,
                *[
                    fmt_float(v)
                    for v in (
                        r.precision,
                        r.recall,
                        r.f1,
                        r.weighted_precision,
                        r.weighted_recall,
                        r.weighted_f1,
                    )
                ],
            )
        tables.append(table)

    for table in tables:
        displayer.print(
            pretty_content=table,
            plain_content=None,
            json_content=None,
            stream=sys.stdout,
            level=DisplayLevel.NORMAL,
        )
    displayer.print(
        pretty_content=None,
        plain_content="\n".join(str(p) for p in result.paths),
        json_content={"result": "success", "paths": result.paths},
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class WeightedEvalResult(NamedTuple):
    sweeps: Dict[str, List[SweepPoint]]
    sources: Dict[str, List[SourceQuality]]
    paths: List[Path]


def source_quality(
    source: str,
    candidate: Mapping[str, bool],
    gold: Mapping[str, bool],
    srs: Mapping[str, float],
) -> SourceQuality:
    covered = {sid: gold[sid] for sid in gold if sid in candidate}
    return SourceQuality(
        source=source,
        covered=len(covered),
        report=annotation_quality(candidate, covered, srs),
    )


def weighted_eval(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> WeightedEvalResult:
    """
    Standard and weighted quality of the crowd labels at every grid threshold,
    next to the expert, single-worker and baseline labels, against each
    relation's gold set. Writes sweep_<relation>.csv and quality_<relation>.json.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    data = trusted_data(config, logger)
    sets = evaluation_sets(data, config, logger)
    experts = expert_views(data, config.relations)
    sweeps: Dict[str, List[SweepPoint]] = {}
    sources: Dict[str, List[SourceQuality]] = {}
    paths = []
    for relation, ev in sets.items():
        sweeps[relation] = threshold_sweep(
            data.scores.for_relation(relation),
            ev.gold,
            ev.srs,
            config.threshold_grid,
            config.thread_count,
        )
        single = labels_of(
            build_single_training_set(data.judgments, relation, config.single_seed)
        )
        baseline = labels_of(
            build_baseline_training_set(
                data.bundle.sentences.values(), relation, data.schema
            )
        )
        sources[relation] = [
            source_quality("expert", experts[relation], ev.gold, ev.srs),
            source_quality("single", single, ev.gold, ev.srs),
            source_quality("baseline", baseline, ev.gold, ev.srs),
        ]
        paths.append(
            write_csv(
                output_path(config, f"sweep_{relation}.csv"),
                SWEEP_COLUMNS,
                (
                    [
                        p.threshold,
                        p.report.precision,
                        p.report.recall,
                        p.report.f1,
                        p.report.weighted_precision,
                        p.report.weighted_recall,
                        p.report.weighted_f1,
                    ]
                    for p in sweeps[relation]
                ),
            )
        )
        paths.append(
            write_json(
                output_path(config, f"quality_{relation}.json"),
                {
                    "relation": relation,
                    "gold_threshold": ev.threshold,
                    "gold_size": len(ev.gold),
                    "crowd": [
                        {"threshold": p.threshold, "report": p.report}
                        for p in sweeps[relation]
                    ],
                    "sources": sources[relation],
                },
            )
        )
    return WeightedEvalResult(sweeps=sweeps, sources=sources, paths=paths)
