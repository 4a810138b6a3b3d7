"""Annotation vectors, sentence vectors and cosine similarity.

Vectors are integer numpy arrays with one component per schema option. They
stay exact until a cosine is taken, so summation order never changes a result.
"""
import math
from collections import defaultdict
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .exceptions import DimensionMismatchError, EmptySentenceError
from .host import pmap
from .models import Array, Judgment
from .schema import RelationSchema


def _frozen(components: Array) -> Array:
    components.setflags(write=False)
    return components


@dataclass(frozen=True, eq=False)
class AnnotationVector:
    worker_id: str
    sentence_id: str
    components: Array


@dataclass(frozen=True, eq=False)
class SentenceVector:
    sentence_id: str
    components: Array
    worker_count: int

    def __getitem__(self, option_index: int) -> int:
        return int(self.components[option_index])

    def as_dict(self, schema: RelationSchema) -> Dict[str, int]:
        return {o: int(self.components[schema.index(o)]) for o in schema.options}


def annotation_vector(judgment: Judgment, schema: RelationSchema) -> AnnotationVector:
    components = np.zeros(schema.dimension, dtype=np.int64)
    for option in judgment.selections:
        components[schema.index(option)] = 1
    return AnnotationVector(
        worker_id=judgment.worker_id,
        sentence_id=judgment.sentence_id,
        components=_frozen(components),
    )


def sentence_vector(
    judgments: Sequence[Judgment], schema: RelationSchema, sentence_id: Optional[str] = None
) -> SentenceVector:
    if not judgments:
        raise EmptySentenceError(
            f"no judgments for sentence{' ' + sentence_id if sentence_id else ''}"
        )
    total = np.zeros(schema.dimension, dtype=np.int64)
    for judgment in judgments:
        total += annotation_vector(judgment, schema).components
    return SentenceVector(
        sentence_id=sentence_id or judgments[0].sentence_id,
        components=_frozen(total),
        worker_count=len(judgments),
    )


def group_by_sentence(judgments: Iterable[Judgment]) -> Dict[str, List[Judgment]]:
    """
    Judgments per sentence, sentences in id order and each list in submission
    order (ties by worker id).
    """
    grouped: Dict[str, List[Judgment]] = defaultdict(list)
    for judgment in judgments:
        grouped[judgment.sentence_id].append(judgment)
    return {
        sid: sorted(grouped[sid], key=lambda j: (j.submission_index, j.worker_id))
        for sid in sorted(grouped)
    }


def sentence_vectors(
    judgments: Iterable[Judgment], schema: RelationSchema, threads: Optional[int] = 1
) -> Dict[str, SentenceVector]:
    grouped = group_by_sentence(judgments)
    vectors = pmap(
        lambda sid: sentence_vector(grouped[sid], schema, sid), list(grouped), threads
    )
    return {v.sentence_id: v for v in vectors}


def is_zero(components: Array) -> bool:
    return not np.any(components)


def cosine(u: Array, v: Array) -> float:
    """
    Cosine similarity of two vectors; 0.0 when either has zero norm.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise DimensionMismatchError(
            f"Vectors must have the same dimension, got {u.shape} and {v.shape}"
        )
    uu = float(np.dot(u, u))
    vv = float(np.dot(v, v))
    if uu == 0 or vv == 0:
        return 0.0
    return float(np.dot(u, v)) / math.sqrt(uu * vv)


def reduced(components: Array) -> Array:
    """Divide an integer vector by the gcd of its components."""
    divisor = int(np.gcd.reduce(components)) if components.size else 0
    if divisor <= 1:
        return components
    return components // divisor


def truncate(value: float, places: int = 2) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_DOWN))
