import logging
import sys
from pathlib import Path
from typing import List, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, fmt_float, make_table
from ..exceptions import EXIT_OK
from ..ingest import write_csv, write_json
from ..pipeline import evaluation_sets, output_path, trusted_data
from ..stability import (
    OrderBand,
    StabilityCurve,
    mean_cosine_delta_curve,
    order_sensitivity_bands,
    quality_by_worker_count,
)

CURVE_COLUMNS = ["k", "value", "contributing_sentences"]
BAND_COLUMNS = ["k", "submission_order", "low", "high"]


def display_stability(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = stability(config, logger)

    f1 = {p.k: p.value for p in result.f1.points} if result.f1 else {}
    bands = {b.k: b for b in result.bands}
    table = make_table(
        "Stability by worker count",
        ["k", "Cosine delta", "Sentences", "Annotation F1", "Shuffled range"],
        right=["k", "Cosine delta", "Sentences", "Annotation F1"],
    )
    for p in result.cosine.points:
        band = bands.get(p.k)
        table.add_row(
            str(p.k),
            fmt_float(p.value),
            str(p.contributing_sentences),
            fmt_float(f1.get(p.k)),
            f"{band.low:.4f} - {band.high:.4f}" if band else "-",
        )

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            f"{p.k}\t{p.value!r}\t{p.contributing_sentences}" for p in result.cosine.points
        ),
        json_content={"result": "success", "paths": result.paths},
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class StabilityResult(NamedTuple):
    cosine: StabilityCurve
    f1: Optional[StabilityCurve]
    bands: List[OrderBand]
    paths: List[Path]


def stability(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> StabilityResult:
    """
    How much the sentence vectors still move as workers are added, and how the
    crowd labels' F1 against gold grows with the worker count. Shuffled-order
    bands are added when order_seeds are configured.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    data = trusted_data(config, logger)
    threads = config.thread_count
    k_max = config.stability_k_max
    cosine = mean_cosine_delta_curve(data.judgments, data.schema, k_max, None, threads)
    paths = [
        write_csv(
            output_path(config, "stability_cosine.csv"), CURVE_COLUMNS, cosine.rows()
        )
    ]

    f1 = None
    if data.bundle.expert_labels:
        sets = evaluation_sets(data, config, logger)
        f1 = quality_by_worker_count(
            data.judgments,
            data.schema,
            {r: ev.gold for r, ev in sets.items()},
            {r: ev.threshold for r, ev in sets.items()},
            k_max,
            None,
            threads,
        )
        paths.append(
            write_csv(
                output_path(config, "stability_f1.csv"), CURVE_COLUMNS, f1.rows()
            )
        )
    else:
        logger.warning("No expert labels; skipping the annotation F1 curve")

    bands: List[OrderBand] = []
    if config.order_seeds:
        bands = order_sensitivity_bands(
            data.judgments, data.schema, config.order_seeds, k_max, threads
        )
        paths.append(
            write_csv(
                output_path(config, "stability_bands.csv"),
                BAND_COLUMNS,
                bands,
                comment=f"order_seeds={','.join(str(s) for s in config.order_seeds)}",
            )
        )

    paths.append(
        write_json(
            output_path(config, "stability.json"),
            {
                "cosine_delta": cosine,
                "annotation_f1": f1,
                "order_bands": [b._asdict() for b in bands],
                "order_seeds": config.order_seeds,
            },
        )
    )
    return StabilityResult(cosine=cosine, f1=f1, bands=bands, paths=paths)
