import unicodedata
from collections import defaultdict
from enum import Enum
from typing import Any, Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import PrivateAttr, field_serializer, model_validator

from .models import Array, ExpertLabel, Judgment, Record, Sentence


class RelationSchema(Record):
    """
    Ordered vocabulary of relation options. Every annotation vector has one
    component per relation followed by the OTHER and NONE sentinels.
    """

    relations: Tuple[str, ...]
    sentinel_other: str = "other"
    sentinel_none: str = "none"
    umls_map: Dict[str, FrozenSet[str]] = {}
    overlap_exclusions: Dict[str, FrozenSet[str]] = {}

    _index: Dict[str, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_identifiers(self) -> "RelationSchema":
        options = self.options
        duplicates = sorted({o for o in options if options.count(o) > 1})
        if duplicates:
            raise ValueError(f"duplicate option identifiers: {', '.join(duplicates)}")
        if not self.relations:
            raise ValueError("a schema needs at least one relation")
        for field_name in ("umls_map", "overlap_exclusions"):
            mapping: Dict[str, FrozenSet[str]] = getattr(self, field_name)
            unknown = sorted(k for k in mapping if k not in self.relations)
            if unknown:
                raise ValueError(f"{field_name} names unknown relations: {unknown}")
        for rel, excluded in self.overlap_exclusions.items():
            unknown = sorted(e for e in excluded if e not in self.relations)
            if unknown:
                raise ValueError(
                    f"overlap_exclusions[{rel}] names unknown relations: {unknown}"
                )
        return self

    def model_post_init(self, __context: Any) -> None:
        self._index.update({option: i for i, option in enumerate(self.options)})

    @field_serializer("umls_map", "overlap_exclusions")
    def _sorted_sets(self, mapping: Dict[str, FrozenSet[str]]) -> Dict[str, List[str]]:
        return {k: sorted(v) for k, v in mapping.items()}

    @property
    def options(self) -> Tuple[str, ...]:
        return self.relations + (self.sentinel_other, self.sentinel_none)

    @property
    def dimension(self) -> int:
        return len(self.relations) + 2

    def has_option(self, option: str) -> bool:
        return option in self._index

    def is_relation(self, option: str) -> bool:
        return option in self._index and self._index[option] < len(self.relations)

    def index(self, option: str) -> int:
        try:
            return self._index[option]
        except KeyError:
            raise KeyError(f"'{option}' is not an option of this schema")

    def unit_vector(self, option: str) -> Array:
        vec = np.zeros(self.dimension, dtype=np.int64)
        vec[self.index(option)] = 1
        return vec

    def overlaps(self, target: str, other: str) -> bool:
        return other in self.overlap_exclusions.get(target, frozenset())


DEFAULT_RELATIONS: Tuple[str, ...] = (
    "treat",
    "prevent",
    "diagnose",
    "cause",
    "location",
    "symptom",
    "manifestation",
    "contraindicate",
    "associated_with",
    "side_effect",
    "is_a",
    "part_of",
)

DEFAULT_UMLS_MAP: Dict[str, FrozenSet[str]] = {
    "treat": frozenset({"may_treat"}),
    "prevent": frozenset({"may_prevent"}),
    "diagnose": frozenset({"may_diagnose"}),
    "cause": frozenset({"cause_of", "has_causative_agent"}),
    "location": frozenset({"disease_has_primary_anatomic_site", "has_finding_site"}),
    "symptom": frozenset({"disease_has_finding", "disease_may_have_finding"}),
    "manifestation": frozenset({"has_manifestation"}),
    "contraindicate": frozenset({"contraindicated_drug"}),
    "associated_with": frozenset({"associated_with"}),
    "side_effect": frozenset({"side_effect"}),
    "is_a": frozenset({"is_a"}),
    "part_of": frozenset({"part_of"}),
}

DEFAULT_SCHEMA = RelationSchema(relations=DEFAULT_RELATIONS, umls_map=DEFAULT_UMLS_MAP)


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class Violation(Record):
    severity: Severity
    kind: str
    record: str
    message: str
    sentence_id: Optional[str] = None
    worker_id: Optional[str] = None


class ValidationReport(Record):
    violations: Tuple[Violation, ...] = ()

    @property
    def errors(self) -> List[Violation]:
        return [v for v in self.violations if v.severity == Severity.ERROR]

    @property
    def warnings(self) -> List[Violation]:
        return [v for v in self.violations if v.severity == Severity.WARNING]

    @property
    def accepted(self) -> bool:
        return not self.errors


def normalize_surface(text: str) -> str:
    return " ".join(unicodedata.normalize("NFC", text).split())


class DedupResult(NamedTuple):
    kept: List[Judgment]
    dropped: List[Judgment]


def _kept_positions(judgments: Sequence[Judgment]) -> FrozenSet[int]:
    best: Dict[Tuple[str, str], int] = {}
    for i, j in enumerate(judgments):
        key = (j.worker_id, j.sentence_id)
        if key not in best or j.submission_index < judgments[best[key]].submission_index:
            best[key] = i
    return frozenset(best.values())


def deduplicate_judgments(judgments: Sequence[Judgment]) -> DedupResult:
    """
    Keep one judgment per (worker, sentence): the one with the lowest
    submission_index; ties keep the first in input order.
    """
    keep = _kept_positions(judgments)
    kept = [j for i, j in enumerate(judgments) if i in keep]
    dropped = [j for i, j in enumerate(judgments) if i not in keep]
    return DedupResult(kept=kept, dropped=dropped)


def _check_sentence(
    i: int, sentence: Sentence, schema: RelationSchema
) -> List[Violation]:
    found = []
    where = f"sentences[{i}]"

    def add(kind: str, message: str, severity: Severity = Severity.ERROR) -> None:
        found.append(
            Violation(
                severity=severity,
                kind=kind,
                record=where,
                message=message,
                sentence_id=sentence.id,
            )
        )

    for name, term in (("term1", sentence.term1), ("term2", sentence.term2)):
        if not (0 <= term.start < term.end <= len(sentence.text)):
            add(
                "span out of range",
                f"{name} span [{term.start}, {term.end}) outside text of length"
                f" {len(sentence.text)}",
            )
            continue
        observed = normalize_surface(sentence.text[term.start : term.end])
        if observed != normalize_surface(term.surface):
            add(
                "surface mismatch",
                f"{name} surface '{term.surface}' differs from text '{observed}'",
                Severity.WARNING,
            )
    if sentence.term1.overlaps(sentence.term2):
        add("overlapping terms", "term1 and term2 spans overlap")
    if not schema.is_relation(sentence.seed_relation):
        add(
            "invalid seed relation",
            f"seed relation '{sentence.seed_relation}' is not a schema relation",
        )
    return found


def _check_judgment(
    i: int, judgment: Judgment, schema: RelationSchema, sentence_ids: FrozenSet[str]
) -> List[Violation]:
    found = []

    def add(kind: str, message: str) -> None:
        found.append(
            Violation(
                severity=Severity.ERROR,
                kind=kind,
                record=f"judgments[{i}]",
                message=message,
                sentence_id=judgment.sentence_id,
                worker_id=judgment.worker_id,
            )
        )

    if not judgment.selections:
        add("empty selection", "judgment selects no option")
    unknown = sorted(s for s in judgment.selections if not schema.has_option(s))
    if unknown:
        add("unknown option", f"unknown option(s): {', '.join(unknown)}")
    if schema.sentinel_none in judgment.selections and len(judgment.selections) > 1:
        add("NONE not sole selection", "NONE is combined with other options")
    if judgment.sentence_id not in sentence_ids:
        add(
            "dangling sentence reference",
            f"sentence '{judgment.sentence_id}' does not exist",
        )
    return found


def validate_dataset(
    sentences: Sequence[Sentence],
    judgments: Sequence[Judgment],
    schema: RelationSchema,
    expert_labels: Optional[Sequence[ExpertLabel]] = None,
) -> ValidationReport:
    """
    Check every record invariant and list each violation with its coordinates.
    Never raises.
    """
    violations: List[Violation] = []

    seen: Dict[str, int] = {}
    for i, sentence in enumerate(sentences):
        if sentence.id in seen:
            violations.append(
                Violation(
                    severity=Severity.ERROR,
                    kind="duplicate sentence",
                    record=f"sentences[{i}]",
                    message=f"sentence id already used at sentences[{seen[sentence.id]}]",
                    sentence_id=sentence.id,
                )
            )
        else:
            seen[sentence.id] = i
        violations.extend(_check_sentence(i, sentence, schema))

    sentence_ids = frozenset(seen)
    for i, judgment in enumerate(judgments):
        violations.extend(_check_judgment(i, judgment, schema, sentence_ids))

    keep = _kept_positions(judgments)
    for i, dup in enumerate(judgments):
        if i in keep:
            continue
        violations.append(
            Violation(
                severity=Severity.ERROR,
                kind="duplicate judgment",
                record=f"judgments[{i}]",
                message=(
                    "worker already judged this sentence with a lower"
                    " submission_index; this judgment is ignored"
                ),
                sentence_id=dup.sentence_id,
                worker_id=dup.worker_id,
            )
        )

    by_id = {s.id: s for s in sentences}
    labelled: Dict[str, List[int]] = defaultdict(list)
    for i, label in enumerate(expert_labels or []):
        labelled[label.sentence_id].append(i)
        where = f"expert[{i}]"
        sentence = by_id.get(label.sentence_id)
        if sentence is None:
            violations.append(
                Violation(
                    severity=Severity.ERROR,
                    kind="dangling sentence reference",
                    record=where,
                    message=f"sentence '{label.sentence_id}' does not exist",
                    sentence_id=label.sentence_id,
                )
            )
        elif label.relation != sentence.seed_relation:
            violations.append(
                Violation(
                    severity=Severity.ERROR,
                    kind="expert relation is not the seed",
                    record=where,
                    message=(
                        f"expert judged '{label.relation}' but the seed relation is"
                        f" '{sentence.seed_relation}'"
                    ),
                    sentence_id=label.sentence_id,
                )
            )
    for sentence_id, rows in sorted(labelled.items()):
        if len(rows) > 1:
            violations.append(
                Violation(
                    severity=Severity.ERROR,
                    kind="duplicate expert label",
                    record=f"expert[{rows[1]}]",
                    message=f"sentence has {len(rows)} expert labels",
                    sentence_id=sentence_id,
                )
            )

    return ValidationReport(violations=tuple(violations))
