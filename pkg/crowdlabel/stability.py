"""How sentence vectors and annotation quality settle as workers are added.

Workers enter each sentence in submission order. Passing an ``order_seed``
replaces that order with a seeded shuffle per sentence; curves built that way
are marked as order-sensitivity extensions in every output.
"""
import math
from enum import Enum
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .evaluation import annotation_quality, micro_average
from .exceptions import ConfigError
from .host import counter_rng, pmap
from .models import Array, Judgment, Record
from .schema import RelationSchema
from .vectors import annotation_vector, cosine, group_by_sentence, reduced

MAX_DEFAULT_K = 20


class CurveKind(str, Enum):
    COSINE_DELTA = "cosine_delta"
    ANNOTATION_F1 = "annotation_f1"


class StabilityPoint(Record):
    k: int
    value: float
    contributing_sentences: int


class StabilityCurve(Record):
    kind: CurveKind
    points: Tuple[StabilityPoint, ...]
    order_seed: Optional[int] = None

    @property
    def extension(self) -> bool:
        return self.order_seed is not None

    def value_at(self, k: int) -> float:
        for point in self.points:
            if point.k == k:
                return point.value
        raise KeyError(f"No point at k={k}")

    def rows(self) -> List[Tuple[int, float, int]]:
        return [(p.k, p.value, p.contributing_sentences) for p in self.points]


def _ordered(
    judgments: Sequence[Judgment], sentence_id: str, order_seed: Optional[int]
) -> List[Judgment]:
    ordered = sorted(judgments, key=lambda j: (j.submission_index, j.worker_id))
    if order_seed is None:
        return ordered
    perm = counter_rng("order", order_seed, sentence_id).permutation(len(ordered))
    return [ordered[int(i)] for i in perm]


def incremental_vectors(
    judgments: Sequence[Judgment],
    schema: RelationSchema,
    order_seed: Optional[int] = None,
) -> List[Array]:
    """V_1..V_n where V_k sums the first k workers' annotation vectors."""
    if not judgments:
        return []
    ordered = _ordered(judgments, judgments[0].sentence_id, order_seed)
    prefixes = []
    total = np.zeros(schema.dimension, dtype=np.int64)
    for judgment in ordered:
        total = total + annotation_vector(judgment, schema).components
        prefixes.append(total)
    return prefixes


def _default_k_max(grouped: Mapping[str, Sequence[Judgment]]) -> int:
    most = max((len(g) for g in grouped.values()), default=0)
    return min(most, MAX_DEFAULT_K)


def mean_cosine_delta_curve(
    judgments: Sequence[Judgment],
    schema: RelationSchema,
    k_max: Optional[int] = None,
    order_seed: Optional[int] = None,
    threads: Optional[int] = 1,
) -> StabilityCurve:
    """
    Point k is the mean of 1 - cos(V_{k-1}, V_k) over sentences with at least k
    workers, for k = 2..k_max.
    """
    grouped = group_by_sentence(judgments)
    k_max = _default_k_max(grouped) if k_max is None else k_max
    if k_max < 2:
        raise ConfigError(f"k_max must be at least 2, got {k_max}")

    def _deltas(sid: str) -> List[float]:
        prefixes = incremental_vectors(grouped[sid], schema, order_seed)[:k_max]
        return [
            max(0.0, 1 - cosine(prefixes[k - 2], prefixes[k - 1]))
            for k in range(2, len(prefixes) + 1)
        ]

    per_sentence = pmap(_deltas, list(grouped), threads)
    points = []
    for k in range(2, k_max + 1):
        values = [d[k - 2] for d in per_sentence if len(d) >= k - 1]
        if not values:
            continue
        points.append(
            StabilityPoint(
                k=k,
                value=math.fsum(values) / len(values),
                contributing_sentences=len(values),
            )
        )
    return StabilityCurve(
        kind=CurveKind.COSINE_DELTA, points=tuple(points), order_seed=order_seed
    )


def _prefix_srs(
    prefixes: Sequence[Array], k: int, relation: str, schema: RelationSchema
) -> float:
    # sentences with fewer than k workers use all of them
    prefix = prefixes[min(k, len(prefixes)) - 1]
    return cosine(reduced(prefix), schema.unit_vector(relation))


def quality_by_worker_count(
    judgments: Sequence[Judgment],
    schema: RelationSchema,
    golds: Mapping[str, Mapping[str, bool]],
    thresholds: Mapping[str, float],
    k_max: Optional[int] = None,
    order_seed: Optional[int] = None,
    threads: Optional[int] = 1,
) -> StabilityCurve:
    """
    Micro-averaged annotation F1 over the relations in golds when each
    sentence's scores come from its first min(k, n) workers only. The
    contributing count at k is the number of gold sentences with at least k
    workers.
    """
    grouped = group_by_sentence(judgments)
    k_max = _default_k_max(grouped) if k_max is None else k_max
    if k_max < 1:
        raise ConfigError(f"k_max must be at least 1, got {k_max}")
    missing = sorted(r for r in golds if r not in thresholds)
    if missing:
        raise ConfigError(f"No threshold for relation(s) {', '.join(missing)}")

    gold_ids = sorted({sid for gold in golds.values() for sid in gold if sid in grouped})
    prefixes: Dict[str, List[Array]] = dict(
        zip(
            gold_ids,
            pmap(
                lambda sid: incremental_vectors(grouped[sid], schema, order_seed),
                gold_ids,
                threads,
            ),
        )
    )

    def _point(k: int) -> StabilityPoint:
        reports = []
        for relation in sorted(golds):
            gold = golds[relation]
            candidate = {
                sid: _prefix_srs(prefixes[sid], k, relation, schema)
                >= thresholds[relation]
                for sid in gold
                if sid in prefixes
            }
            reports.append(annotation_quality(candidate, gold))
        return StabilityPoint(
            k=k,
            value=micro_average(reports).f1,
            contributing_sentences=sum(1 for sid in gold_ids if len(prefixes[sid]) >= k),
        )

    points = pmap(_point, range(1, k_max + 1), threads)
    return StabilityCurve(
        kind=CurveKind.ANNOTATION_F1, points=tuple(points), order_seed=order_seed
    )


class OrderBand(NamedTuple):
    k: int
    submission_order: float
    low: float
    high: float


def order_sensitivity_bands(
    judgments: Sequence[Judgment],
    schema: RelationSchema,
    seeds: Sequence[int],
    k_max: Optional[int] = None,
    threads: Optional[int] = 1,
) -> List[OrderBand]:
    """
    Range of the cosine-delta curve over seeded shuffles of the worker order,
    next to the submission-order value.
    """
    if not seeds:
        raise ConfigError("order_sensitivity_bands needs at least one seed")
    base = mean_cosine_delta_curve(judgments, schema, k_max, None, threads)
    shuffled = [
        mean_cosine_delta_curve(judgments, schema, k_max, seed, threads) for seed in seeds
    ]
    bands = []
    for point in base.points:
        values = [c.value_at(point.k) for c in shuffled]
        bands.append(
            OrderBand(
                k=point.k, submission_order=point.value, low=min(values), high=max(values)
            )
        )
    return bands
