import hashlib
import logging
import sys
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, make_table
from ..exceptions import EXIT_OK, DataError
from ..ingest import write_json
from ..models import Provenance
from ..pipeline import output_path
from .aggregate import aggregate
from .agreement import agreement_sweep
from .filter_workers import filter_workers
from .gold import build_gold
from .label import label
from .score import score
from .splits import splits
from .stability import stability
from .validate import validate
from .weighted_eval import weighted_eval

SUMMARY_FILE = "summary.json"


def display_report(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = report(config, logger)

    table = make_table("Pipeline report", ["Stage", "Artifacts"], right=["Artifacts"])
    for stage, paths in result.stages.items():
        table.add_row(stage, str(len(paths)))
    table.caption = f"Checksums in {result.path}"

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            f"{digest}  {name}" for name, digest in result.checksums.items()
        ),
        json_content={
            "result": "success",
            "artifacts": result.checksums,
            "path": result.path,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class ReportResult(NamedTuple):
    stages: Dict[str, List[Path]]
    checksums: Dict[str, str]
    path: Path


def sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def report(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> ReportResult:
    """
    Run every stage that needs no prediction files, in pipeline order, and
    list each artifact with its sha256 in summary.json.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    stages: Dict[str, List[Path]] = {}
    checked = validate(config, logger)
    stages["validate"] = [checked.path]
    if not checked.report.accepted:
        raise DataError(
            f"Dataset failed validation with {len(checked.report.errors)} error(s);"
            f" see {checked.path}"
        )

    stages["filter-workers"] = filter_workers(config, logger).paths
    stages["aggregate"] = [aggregate(config, logger).path]
    stages["score"] = score(config, logger).paths
    with_expert = config.expert_path is not None
    provenances = [p for p in Provenance if with_expert or p != Provenance.EXPERT]
    stages["label"] = [
        path
        for provenance in provenances
        for path in label(provenance, None, None, config, logger).paths.values()
    ]
    if with_expert:
        stages["agreement-sweep"] = agreement_sweep(config, logger).paths
        stages["build-gold"] = build_gold(None, config, logger).paths
        stages["splits"] = [splits(config, logger).path]
        stages["weighted-eval"] = weighted_eval(config, logger).paths
    else:
        logger.warning("No expert labels configured; skipping the gold-based stages")
    stages["stability"] = stability(config, logger).paths

    out = Path(config.output_dir)
    artifacts = sorted({p for paths in stages.values() for p in paths})
    checksums = {p.relative_to(out).as_posix(): sha256(p) for p in artifacts}
    path = write_json(
        output_path(config, SUMMARY_FILE),
        {
            "stages": {
                stage: sorted(p.relative_to(out).as_posix() for p in paths)
                for stage, paths in stages.items()
            },
            "artifacts": checksums,
        },
    )
    return ReportResult(stages=stages, checksums=checksums, path=path)
