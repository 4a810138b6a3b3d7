"""Import adapters for crowd-platform exports.

The defaults follow the column layout of CrowdFlower "full" report exports as
published with the public medical relation extraction data: one row per
(worker, unit) with the unit's sentence, term offsets and the seed relation
repeated on every row. Any of the column names can be overridden in the
``adapter`` block of the run configuration.
"""
import logging
import re
from collections import defaultdict
from datetime import datetime
from typing import Dict, List, Mapping, NamedTuple, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict

from .base_logger import get_logger
from .exceptions import IngestError
from .ingest import Source, _float, _int, _opt, _rows
from .models import ExpertLabel, Judgment, Sentence, TermMention
from .schema import RelationSchema

DEFAULT_ANSWER_LABELS: Dict[str, str] = {
    "TREATS": "treat",
    "TREAT": "treat",
    "PREVENTS": "prevent",
    "PREVENT": "prevent",
    "DIAGNOSE_BY_TEST_OR_DRUG": "diagnose",
    "DIAGNOSES": "diagnose",
    "DIAGNOSE": "diagnose",
    "CAUSES": "cause",
    "CAUSE": "cause",
    "LOCATION": "location",
    "SYMPTOM": "symptom",
    "MANIFESTATION": "manifestation",
    "CONTRAINDICATES": "contraindicate",
    "CONTRAINDICATE": "contraindicate",
    "ASSOCIATED_WITH": "associated_with",
    "SIDE_EFFECT": "side_effect",
    "IS_A": "is_a",
    "PART_OF": "part_of",
    "OTHER": "other",
    "NONE": "none",
}

_BRACKETED = re.compile(r"\[([^\]]+)\]")
_SEPARATORS = re.compile(r"[\n;,|]+")


class AdapterMapping(BaseModel):
    unit_column: str = "_unit_id"
    worker_column: str = "_worker_id"
    created_column: str = "_created_at"
    created_format: str = "%m/%d/%Y %H:%M:%S"
    answer_column: str = "relation"
    sentence_column: str = "sentence"
    term1_column: str = "term1"
    term1_start_column: str = "b1"
    term1_end_column: str = "e1"
    term2_column: str = "term2"
    term2_start_column: str = "b2"
    term2_end_column: str = "e2"
    seed_column: str = "relation_type"
    end_inclusive: bool = False
    answer_labels: Dict[str, str] = DEFAULT_ANSWER_LABELS

    model_config = ConfigDict(extra="forbid", frozen=True)


def _label_key(label: str) -> str:
    return re.sub(r"[\s\-]+", "_", label.strip().strip("[]").upper())


def map_answer(
    cell: str, mapping: AdapterMapping, schema: RelationSchema, line: int
) -> Set[str]:
    labels = _BRACKETED.findall(cell) or _SEPARATORS.split(cell)
    labels_upper = {_label_key(k): v for k, v in mapping.answer_labels.items()}
    selections = set()
    for label in labels:
        if not label.strip():
            continue
        key = _label_key(label)
        option = labels_upper.get(key, key.lower())
        if not schema.has_option(option):
            raise IngestError(f"unknown answer label '{label.strip()}'", "crowd export", line)
        selections.add(option)
    if not selections:
        raise IngestError("empty selection", "crowd export", line)
    return selections


def _seed(value: str, mapping: AdapterMapping, schema: RelationSchema) -> str:
    if schema.is_relation(value.strip()):
        return value.strip()
    labels_upper = {_label_key(k): v for k, v in mapping.answer_labels.items()}
    return labels_upper.get(_label_key(value), value.strip().lower())


class ImportResult(NamedTuple):
    sentences: List[Sentence]
    judgments: List[Judgment]
    repeated_rows: int


def import_crowd_export(
    source: Source,
    schema: RelationSchema,
    mapping: Optional[AdapterMapping] = None,
    logger: Optional[logging.Logger] = None,
) -> ImportResult:
    """
    Convert a crowd-platform export into sentences and judgments. Submission order
    within a unit follows the creation timestamp, then row order.
    """
    mapping = mapping or AdapterMapping()
    logger = get_logger(logger)
    kind = "crowd export"
    required = [
        mapping.unit_column,
        mapping.worker_column,
        mapping.answer_column,
        mapping.sentence_column,
        mapping.term1_column,
        mapping.term1_start_column,
        mapping.term1_end_column,
        mapping.term2_column,
        mapping.term2_start_column,
        mapping.term2_end_column,
        mapping.seed_column,
    ]

    sentences: Dict[str, Sentence] = {}
    arrivals: Dict[str, List[Tuple[datetime, int, str, Set[str]]]] = defaultdict(list)
    repeated = 0
    for line, row in _rows(source, kind, required):
        unit = row[mapping.unit_column].strip()
        if unit not in sentences:
            offset = 1 if mapping.end_inclusive else 0
            text = row[mapping.sentence_column]
            terms = []
            for prefix in ("term1", "term2"):
                start_cell = row[getattr(mapping, f"{prefix}_start_column")]
                end_cell = row[getattr(mapping, f"{prefix}_end_column")]
                start = _int(start_cell, f"{prefix} start", kind, line)
                end = _int(end_cell, f"{prefix} end", kind, line)
                terms.append(
                    TermMention(
                        surface=row[getattr(mapping, f"{prefix}_column")],
                        start=start,
                        end=end + offset,
                    )
                )
            sentences[unit] = Sentence(
                id=unit,
                text=text,
                term1=terms[0],
                term2=terms[1],
                seed_relation=_seed(row[mapping.seed_column], mapping, schema),
            )
        else:
            repeated += 1

        created_raw = _opt(row, mapping.created_column)
        created = datetime.min
        if created_raw is not None:
            try:
                created = datetime.strptime(created_raw, mapping.created_format)
            except ValueError:
                raise IngestError(
                    f"timestamp '{created_raw}' does not match '{mapping.created_format}'",
                    kind,
                    line,
                )
        arrivals[unit].append(
            (
                created,
                line,
                row[mapping.worker_column].strip(),
                map_answer(row[mapping.answer_column], mapping, schema, line),
            )
        )

    judgments = []
    for unit in sentences:
        for index, (_, _, worker, selections) in enumerate(sorted(arrivals[unit])):
            judgments.append(
                Judgment(
                    worker_id=worker,
                    sentence_id=unit,
                    selections=frozenset(selections),
                    submission_index=index,
                )
            )
    logger.info(
        f"Imported {len(sentences)} sentence(s) and {len(judgments)} judgment(s)"
    )
    return ImportResult(
        sentences=list(sentences.values()), judgments=judgments, repeated_rows=repeated
    )


def import_expert_column(
    source: Source,
    sentences: Mapping[str, Sentence],
    sentence_column: str = "SID",
    expert_column: str = "expert",
) -> List[ExpertLabel]:
    """
    Read a ground-truth file carrying a signed expert column (positive = relation
    present, negative = absent, zero or blank = not annotated) and attach each
    decision to the sentence's seed relation.
    """
    kind = "expert column"
    labels = []
    for line, row in _rows(source, kind, [sentence_column, expert_column]):
        raw = _opt(row, expert_column)
        if raw is None:
            continue
        value = _float(raw, expert_column, kind, line)
        if value == 0:
            continue
        sentence_id = row[sentence_column].strip()
        sentence = sentences.get(sentence_id)
        if sentence is None:
            raise IngestError(f"unknown sentence '{sentence_id}'", kind, line)
        labels.append(
            ExpertLabel(
                sentence_id=sentence_id,
                relation=sentence.seed_relation,
                decision=value > 0,
            )
        )
    return labels
