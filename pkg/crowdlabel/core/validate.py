import logging
import sys
from pathlib import Path
from typing import NamedTuple, Optional

from ..base_logger import make_logger
from ..config import RunConfig, load_config
from ..display import Displayer, DisplayLevel, DisplayStyle, make_table
from ..exceptions import EXIT_DATA_ERROR, EXIT_OK
from ..ingest import write_json
from ..pipeline import load_dataset, output_path
from ..schema import ValidationReport

VALIDATION_FILE = "validation.json"
MAX_SHOWN = 50


def display_validate(
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    report, path = validate(config, logger)

    if report.accepted and not report.warnings:
        displayer.print(
            pretty_content="✅ Dataset is valid",
            plain_content="valid",
            json_content={"result": "success", "report": report, "path": path},
            stream=sys.stdout,
            level=DisplayLevel.NORMAL,
            style=DisplayStyle.SUCCESS,
        )
        return EXIT_OK

    table = make_table(
        f"{len(report.errors)} error(s), {len(report.warnings)} warning(s)",
        ["Severity", "Kind", "Record", "Sentence", "Worker", "Message"],
    )
    for v in report.violations[:MAX_SHOWN]:
        color = "[red]" if v.severity.value == "error" else "[yellow]"
        table.add_row(
            color + v.severity.value,
            v.kind,
            v.record,
            v.sentence_id or "-",
            v.worker_id or "-",
            v.message,
        )
    if len(report.violations) > MAX_SHOWN:
        table.caption = f"{len(report.violations) - MAX_SHOWN} more in {path}"

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(
            f"{v.severity.value}\t{v.kind}\t{v.record}\t{v.message}"
            for v in report.violations
        ),
        json_content={
            "result": "success" if report.accepted else "error",
            "report": report,
            "path": path,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK if report.accepted else EXIT_DATA_ERROR


class ValidateResult(NamedTuple):
    report: ValidationReport
    path: Path


def validate(
    config: Optional[RunConfig] = None, logger: Optional[logging.Logger] = None
) -> ValidateResult:
    """
    Check the configured dataset and write validation.json. Never raises for
    invariant violations; unreadable files still raise.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    loaded = load_dataset(config, logger, strict=False)
    report = loaded.report
    logger.info(
        f"Validation found {len(report.errors)} error(s) and"
        f" {len(report.warnings)} warning(s)"
    )
    path = write_json(output_path(config, VALIDATION_FILE), report)
    return ValidateResult(report=report, path=path)
