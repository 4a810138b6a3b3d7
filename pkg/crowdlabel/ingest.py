"""Parsers and writers for every crowdlabel file format.

All tabular files are UTF-8 CSV with a header row, comma delimiter and RFC-4180
quoting. Multi-select cells separate option identifiers with ';'.
"""
import csv
import io
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import (
    IO,
    Any,
    Dict,
    Iterable,
    Iterator,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import ruamel.yaml
from pydantic import ValidationError

from .base_logger import get_logger
from .exceptions import ConfigError, DataError, IngestError
from .models import (
    AdjudicationRecord,
    ExpertLabel,
    Judgment,
    PredictionRecord,
    Record,
    Resolution,
    Sentence,
    TermMention,
    TrainingInstance,
    dumps,
)
from .schema import (
    DEFAULT_SCHEMA,
    RelationSchema,
    ValidationReport,
    deduplicate_judgments,
    validate_dataset,
)

Source = Union[bytes, IO[bytes], IO[str]]
Row = Sequence[Any]

SELECTION_DELIM = ";"

SENTENCE_COLUMNS = [
    "id",
    "text",
    "term1",
    "term1_start",
    "term1_end",
    "term2",
    "term2_start",
    "term2_end",
    "seed_relation",
    "source_tag",
]
JUDGMENT_COLUMNS = ["worker_id", "sentence_id", "selections", "submission_index"]
EXPERT_COLUMNS = ["sentence_id", "relation", "decision"]
ADJUDICATION_COLUMNS = ["sentence_id", "relation", "resolution"]
PREDICTION_COLUMNS = ["sentence_id", "relation", "score"]
TRAINING_COLUMNS = ["sentence_id", "relation", "weight"]
GOLD_COLUMNS = ["sentence_id", "label"]
SCORE_COLUMNS = ["sentence_id", "relation", "srs"]
QUEUE_COLUMNS = ["sentence_id", "relation", "srs", "expert_decision", "resolution"]
SPLIT_COLUMNS = ["sentence_id", "fold"]
ALWAYS_TRAIN = "ALWAYS_TRAIN"


class DatasetBundle(Record):
    relation_schema: RelationSchema
    sentences: Dict[str, Sentence]
    judgments: Tuple[Judgment, ...]
    expert_labels: Optional[Tuple[ExpertLabel, ...]] = None


def _text_stream(source: Source) -> IO[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"), newline="")
    if isinstance(source, io.TextIOBase):
        return source  # type: ignore[return-value]
    return io.TextIOWrapper(source, encoding="utf-8", newline="")  # type: ignore[arg-type]


def _rows(
    source: Source, kind: str, required: Sequence[str]
) -> Iterator[Tuple[int, Dict[str, str]]]:
    reader = csv.DictReader(_text_stream(source))
    try:
        header = reader.fieldnames or []
    except (csv.Error, UnicodeDecodeError) as e:
        raise IngestError(f"unreadable header ({e})", kind=kind, line=1)
    missing = [c for c in required if c not in header]
    if missing:
        raise IngestError(f"missing column(s) {', '.join(missing)}", kind=kind, line=1)
    try:
        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                raise IngestError(
                    f"malformed row: expected {len(header)} fields", kind=kind, line=line
                )
            yield line, row
    except (csv.Error, UnicodeDecodeError) as e:
        raise IngestError(f"malformed CSV ({e})", kind=kind, line=reader.line_num)


def _int(value: str, column: str, kind: str, line: int) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise IngestError(f"{column} must be an integer, got '{value}'", kind, line)


def _float(value: str, column: str, kind: str, line: int) -> float:
    try:
        v = float(value.strip())
    except ValueError:
        raise IngestError(f"{column} must be a number, got '{value}'", kind, line)
    if not math.isfinite(v):
        raise IngestError(f"{column} must be finite, got '{value}'", kind, line)
    return v


def _opt(row: Mapping[str, str], column: str) -> Optional[str]:
    value = (row.get(column) or "").strip()
    return value or None


def parse_sentences(source: Source) -> List[Sentence]:
    kind = "sentences"
    sentences = []
    for line, row in _rows(source, kind, SENTENCE_COLUMNS[:-1]):
        text = row["text"]
        terms = []
        for name in ("term1", "term2"):
            start = _int(row[f"{name}_start"], f"{name}_start", kind, line)
            end = _int(row[f"{name}_end"], f"{name}_end", kind, line)
            if not 0 <= start < end <= len(text):
                raise IngestError(
                    f"{name} span [{start}, {end}) outside text of length {len(text)}",
                    kind,
                    line,
                )
            terms.append(
                TermMention(
                    surface=row[name],
                    start=start,
                    end=end,
                    category=_opt(row, f"{name}_category"),
                )
            )
        sentence_id = row["id"].strip()
        if not sentence_id:
            raise IngestError("empty sentence id", kind, line)
        sentences.append(
            Sentence(
                id=sentence_id,
                text=text,
                term1=terms[0],
                term2=terms[1],
                seed_relation=row["seed_relation"].strip(),
                source_tag=_opt(row, "source_tag"),
            )
        )
    return sentences


def parse_selections(cell: str, schema: RelationSchema, kind: str, line: int) -> Set[str]:
    selections = {s.strip() for s in cell.split(SELECTION_DELIM) if s.strip()}
    if not selections:
        raise IngestError("empty selection", kind, line)
    for option in sorted(selections):
        if not schema.has_option(option):
            raise IngestError(f"unknown option identifier '{option}'", kind, line)
    return selections


def parse_judgments(source: Source, schema: RelationSchema) -> List[Judgment]:
    kind = "judgments"
    judgments = []
    arrivals: Dict[str, int] = defaultdict(int)
    for line, row in _rows(source, kind, JUDGMENT_COLUMNS[:-1]):
        sentence_id = row["sentence_id"].strip()
        selections = parse_selections(row["selections"], schema, kind, line)
        explicit = _opt(row, "submission_index")
        if explicit is not None:
            index = _int(explicit, "submission_index", kind, line)
            if index < 0:
                raise IngestError("submission_index must be >= 0", kind, line)
        else:
            index = arrivals[sentence_id]
        arrivals[sentence_id] += 1
        judgments.append(
            Judgment(
                worker_id=row["worker_id"].strip(),
                sentence_id=sentence_id,
                selections=frozenset(selections),
                submission_index=index,
            )
        )
    return judgments


def _enum_value(value: str, allowed: Mapping[str, Any], column: str, kind: str, line: int) -> Any:
    key = value.strip().lower()
    if key not in allowed:
        raise IngestError(
            f"unknown {column} '{value}', expected one of {', '.join(allowed)}",
            kind,
            line,
        )
    return allowed[key]


DECISIONS = {"1": True, "0": False}
RESOLUTIONS = {r.value: r for r in Resolution}


def parse_expert_labels(source: Source) -> List[ExpertLabel]:
    kind = "expert"
    return [
        ExpertLabel(
            sentence_id=row["sentence_id"].strip(),
            relation=row["relation"].strip(),
            decision=_enum_value(row["decision"], DECISIONS, "decision", kind, line),
        )
        for line, row in _rows(source, kind, EXPERT_COLUMNS)
    ]


def parse_adjudications(source: Source) -> List[AdjudicationRecord]:
    kind = "adjudications"
    records: Dict[Tuple[str, str], AdjudicationRecord] = {}
    for line, row in _rows(source, kind, ADJUDICATION_COLUMNS):
        record = AdjudicationRecord(
            sentence_id=row["sentence_id"].strip(),
            relation=row["relation"].strip(),
            resolution=_enum_value(
                row["resolution"], RESOLUTIONS, "resolution", kind, line
            ),
        )
        key = (record.sentence_id, record.relation)
        if key in records:
            raise IngestError(
                f"second adjudication for ({record.sentence_id}, {record.relation})",
                kind,
                line,
            )
        records[key] = record
    return list(records.values())


def parse_predictions(source: Source) -> List[PredictionRecord]:
    kind = "predictions"
    return [
        PredictionRecord(
            sentence_id=row["sentence_id"].strip(),
            relation=row["relation"].strip(),
            score=_float(row["score"], "score", kind, line),
        )
        for line, row in _rows(source, kind, PREDICTION_COLUMNS)
    ]


def parse_gold(source: Source) -> Dict[str, bool]:
    kind = "gold"
    return {
        row["sentence_id"].strip(): _enum_value(
            row["label"], DECISIONS, "label", kind, line
        )
        for line, row in _rows(source, kind, GOLD_COLUMNS)
    }


class QueueEntry(NamedTuple):
    sentence_id: str
    relation: str
    srs: float
    expert_decision: bool
    resolution: Optional[Resolution]


def parse_adjudication_queue(source: Source) -> List[QueueEntry]:
    kind = "adjudication_queue"
    entries = []
    for line, row in _rows(source, kind, QUEUE_COLUMNS[:-1]):
        resolution = _opt(row, "resolution")
        entries.append(
            QueueEntry(
                sentence_id=row["sentence_id"].strip(),
                relation=row["relation"].strip(),
                srs=_float(row["srs"], "srs", kind, line),
                expert_decision=_enum_value(
                    row["expert_decision"], DECISIONS, "expert_decision", kind, line
                ),
                resolution=(
                    None
                    if resolution is None
                    else _enum_value(resolution, RESOLUTIONS, "resolution", kind, line)
                ),
            )
        )
    return entries


class SplitRows(NamedTuple):
    folds: Dict[str, int]
    always_train: List[str]


def parse_splits(source: Source) -> SplitRows:
    kind = "splits"
    folds: Dict[str, int] = {}
    always_train = []
    for line, row in _rows(source, kind, SPLIT_COLUMNS):
        sentence_id = row["sentence_id"].strip()
        fold = row["fold"].strip()
        if fold == ALWAYS_TRAIN:
            always_train.append(sentence_id)
        else:
            folds[sentence_id] = _int(fold, "fold", kind, line)
    return SplitRows(folds=folds, always_train=always_train)


def _strip_comments(source: Source) -> bytes:
    raw = source if isinstance(source, bytes) else _text_stream(source).read()
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    return "".join(
        line for line in text.splitlines(keepends=True) if not line.startswith("#")
    ).encode("utf-8")


def parse_splits_file(path: Path) -> SplitRows:
    with open(path, "rb") as f:
        return parse_splits(_strip_comments(f.read()))


# schema documents


def parse_schema(text: str) -> RelationSchema:
    yaml = ruamel.yaml.YAML(typ="safe", pure=True)
    try:
        doc = yaml.load(text)
    except ruamel.yaml.YAMLError as e:
        raise ConfigError(f"Failed to parse schema document: {e}")
    if not isinstance(doc, dict):
        raise ConfigError("Schema document must be a mapping")
    try:
        return RelationSchema.model_validate(doc)
    except ValidationError as e:
        raise ConfigError(f"Invalid schema document: {e.errors()[0]['msg']}")


def serialize_schema(schema: RelationSchema) -> str:
    yaml = ruamel.yaml.YAML(typ="safe", pure=True)
    yaml.default_flow_style = False
    doc = {
        "relations": list(schema.relations),
        "sentinel_other": schema.sentinel_other,
        "sentinel_none": schema.sentinel_none,
        "umls_map": {k: sorted(v) for k, v in schema.umls_map.items()},
        "overlap_exclusions": {k: sorted(v) for k, v in schema.overlap_exclusions.items()},
    }
    buf = io.StringIO()
    yaml.dump(doc, buf)
    return buf.getvalue()


def load_schema(path: Optional[Path]) -> RelationSchema:
    if path is None:
        return DEFAULT_SCHEMA
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (IOError, OSError):
        raise ConfigError(f"Failed to read schema file {path}")
    return parse_schema(text)


# writers


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(header: Sequence[str], rows: Iterable[Row]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue().encode("utf-8")


def write_bytes(path: Path, content: bytes) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(content)
    return path


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Row], comment: Optional[str] = None
) -> Path:
    content = to_csv(header, rows)
    if comment:
        content = f"# {comment}\r\n".encode("utf-8") + content
    return write_bytes(path, content)


def write_json(path: Path, content: Any) -> Path:
    return write_bytes(path, (dumps(content) + "\n").encode("utf-8"))


def serialize_sentences(sentences: Iterable[Sentence]) -> bytes:
    rows = []
    with_categories = False
    listed = list(sentences)
    for s in listed:
        with_categories = with_categories or bool(s.term1.category or s.term2.category)
    header = SENTENCE_COLUMNS + (
        ["term1_category", "term2_category"] if with_categories else []
    )
    for s in listed:
        row: List[Any] = [
            s.id,
            s.text,
            s.term1.surface,
            s.term1.start,
            s.term1.end,
            s.term2.surface,
            s.term2.start,
            s.term2.end,
            s.seed_relation,
            s.source_tag,
        ]
        if with_categories:
            row += [s.term1.category, s.term2.category]
        rows.append(row)
    return to_csv(header, rows)


def serialize_judgments(judgments: Iterable[Judgment]) -> bytes:
    return to_csv(
        JUDGMENT_COLUMNS,
        (
            [
                j.worker_id,
                j.sentence_id,
                SELECTION_DELIM.join(sorted(j.selections)),
                j.submission_index,
            ]
            for j in judgments
        ),
    )


def serialize_expert_labels(labels: Iterable[ExpertLabel]) -> bytes:
    return to_csv(
        EXPERT_COLUMNS, ([l.sentence_id, l.relation, l.decision] for l in labels)
    )


def serialize_adjudications(records: Iterable[AdjudicationRecord]) -> bytes:
    return to_csv(
        ADJUDICATION_COLUMNS,
        ([r.sentence_id, r.relation, r.resolution.value] for r in records),
    )


def serialize_predictions(predictions: Iterable[PredictionRecord]) -> bytes:
    return to_csv(
        PREDICTION_COLUMNS, ([p.sentence_id, p.relation, p.score] for p in predictions)
    )


def serialize_training(instances: Iterable[TrainingInstance]) -> bytes:
    return to_csv(
        TRAINING_COLUMNS, ([i.sentence_id, i.relation, i.weight] for i in instances)
    )


def serialize_gold(gold: Mapping[str, bool]) -> bytes:
    return to_csv(GOLD_COLUMNS, ([sid, gold[sid]] for sid in sorted(gold)))


def serialize_queue(entries: Iterable[QueueEntry]) -> bytes:
    return to_csv(
        QUEUE_COLUMNS,
        (
            [
                e.sentence_id,
                e.relation,
                e.srs,
                e.expert_decision,
                e.resolution.value if e.resolution else None,
            ]
            for e in entries
        ),
    )


def _read(path: Optional[Path], what: str) -> bytes:
    if path is None:
        raise ConfigError(f"No {what} file configured")
    try:
        with open(path, "rb") as f:
            return f.read()
    except (IOError, OSError):
        raise DataError(f"Failed to read {what} file {path}")


def read_sentences(path: Optional[Path]) -> List[Sentence]:
    return parse_sentences(_read(path, "sentences"))


def read_judgments(path: Optional[Path], schema: RelationSchema) -> List[Judgment]:
    return parse_judgments(_read(path, "judgments"), schema)


def read_expert_labels(path: Optional[Path]) -> List[ExpertLabel]:
    return parse_expert_labels(_read(path, "expert"))


def read_adjudications(path: Optional[Path]) -> List[AdjudicationRecord]:
    return parse_adjudications(_read(path, "adjudications"))


def read_predictions(path: Optional[Path]) -> List[PredictionRecord]:
    return parse_predictions(_read(path, "predictions"))


def read_gold(path: Path) -> Dict[str, bool]:
    return parse_gold(_read(path, "gold"))


class LoadResult(NamedTuple):
    bundle: DatasetBundle
    report: ValidationReport
    dropped_duplicates: List[Judgment]


def load_bundle(
    schema: RelationSchema,
    sentences_path: Optional[Path],
    judgments_path: Optional[Path],
    expert_path: Optional[Path] = None,
    strict: bool = True,
    logger: Optional[logging.Logger] = None,
) -> LoadResult:
    """
    Read and validate a dataset. Duplicate judgments are resolved (lowest
    submission_index wins) and reported; any other error-severity violation
    raises DataError when strict.
    """
    logger = get_logger(logger)
    sentences = read_sentences(sentences_path)
    judgments = read_judgments(judgments_path, schema)
    expert = read_expert_labels(expert_path) if expert_path else None
    logger.info(
        f"Read {len(sentences)} sentence(s), {len(judgments)} judgment(s),"
        f" {len(expert) if expert is not None else 0} expert label(s)"
    )

    report = validate_dataset(sentences, judgments, schema, expert)
    dedup = deduplicate_judgments(judgments)
    for dup in dedup.dropped:
        logger.warning(
            f"Ignoring duplicate judgment of {dup.sentence_id} by {dup.worker_id}"
        )
    blocking = [v for v in report.errors if v.kind != "duplicate judgment"]
    if strict and blocking:
        first = blocking[0]
        raise DataError(
            f"Dataset failed validation with {len(blocking)} error(s); first:"
            f" {first.record} {first.kind}: {first.message}"
        )

    bundle = DatasetBundle(
        relation_schema=schema,
        sentences={s.id: s for s in sentences},
        judgments=tuple(dedup.kept),
        expert_labels=tuple(expert) if expert is not None else None,
    )
    return LoadResult(bundle=bundle, report=report, dropped_duplicates=dedup.dropped)
