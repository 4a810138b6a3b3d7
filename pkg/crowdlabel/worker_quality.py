"""Disagreement-based worker metrics and iterative spam removal."""
import logging
from collections import defaultdict
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .base_logger import get_logger
from .exceptions import ConfigError, UnknownWorkerError
from .host import pmap
from .models import Array, Judgment, Record
from .schema import RelationSchema
from .vectors import annotation_vector, cosine

# a faithful worker right half the time among 20% spammers scores about 0.45
# on 15-worker sentences; a uniform spammer about 0.14
DEFAULT_SPAM_THRESHOLD = 0.28


class WorkerMetrics(Record):
    worker_id: str
    worker_sentence_agreement: float
    worker_worker_agreement: Optional[float]
    judged_sentences: int
    spam_flag: bool = False
    removal_round: Optional[int] = None
    review_flag: bool = False
    insufficient_evidence: bool = False


class _AgreementIndex(NamedTuple):
    annotations: Dict[Tuple[str, str], Array]
    by_worker: Dict[str, List[str]]
    by_sentence: Dict[str, List[str]]
    totals: Dict[str, Array]


def _index(judgments: Iterable[Judgment], schema: RelationSchema) -> _AgreementIndex:
    annotations: Dict[Tuple[str, str], Array] = {}
    by_worker: Dict[str, List[str]] = defaultdict(list)
    by_sentence: Dict[str, List[str]] = defaultdict(list)
    totals: Dict[str, Array] = {}
    for j in judgments:
        vec = annotation_vector(j, schema).components
        annotations[(j.worker_id, j.sentence_id)] = vec
        by_worker[j.worker_id].append(j.sentence_id)
        by_sentence[j.sentence_id].append(j.worker_id)
        if j.sentence_id in totals:
            totals[j.sentence_id] = totals[j.sentence_id] + vec
        else:
            totals[j.sentence_id] = vec.copy()
    return _AgreementIndex(
        annotations=annotations,
        by_worker={w: sorted(s) for w, s in by_worker.items()},
        by_sentence={s: sorted(w) for s, w in by_sentence.items()},
        totals=totals,
    )


def _sentence_agreement(worker_id: str, index: _AgreementIndex) -> float:
    sentences = index.by_worker[worker_id]
    total = 0.0
    for sid in sentences:
        own = index.annotations[(worker_id, sid)]
        # a sole worker leaves a zero vector, which contributes 0
        total += cosine(own, index.totals[sid] - own)
    return total / len(sentences)


def _worker_agreement(worker_id: str, index: _AgreementIndex) -> Optional[float]:
    values = []
    for sid in index.by_worker[worker_id]:
        own = index.annotations[(worker_id, sid)]
        for other in index.by_sentence[sid]:
            if other != worker_id:
                values.append(cosine(own, index.annotations[(other, sid)]))
    if not values:
        return None
    return sum(values) / len(values)


def _require_worker(worker_id: str, index: _AgreementIndex) -> None:
    if worker_id not in index.by_worker:
        raise UnknownWorkerError(f"Worker {worker_id} has no judgments")


def worker_sentence_agreement(
    worker_id: str, judgments: Sequence[Judgment], schema: RelationSchema
) -> float:
    """
    Mean over the worker's sentences of cos(W, V - W), the agreement of the
    worker's annotation vector with the sum of everybody else's.
    """
    index = _index(judgments, schema)
    _require_worker(worker_id, index)
    return _sentence_agreement(worker_id, index)


def worker_worker_agreement(
    worker_id: str, judgments: Sequence[Judgment], schema: RelationSchema
) -> Optional[float]:
    """
    Mean pairwise cosine with every co-worker on every shared sentence, or None
    when the worker never shares a sentence.
    """
    index = _index(judgments, schema)
    _require_worker(worker_id, index)
    return _worker_agreement(worker_id, index)


def _metrics(
    worker_id: str, index: _AgreementIndex, min_judgments: int
) -> WorkerMetrics:
    wwa = _worker_agreement(worker_id, index)
    judged = len(index.by_worker[worker_id])
    return WorkerMetrics(
        worker_id=worker_id,
        worker_sentence_agreement=_sentence_agreement(worker_id, index),
        worker_worker_agreement=wwa,
        judged_sentences=judged,
        review_flag=wwa is None,
        insufficient_evidence=judged < min_judgments,
    )


def worker_metrics(
    judgments: Sequence[Judgment],
    schema: RelationSchema,
    min_judgments: int = 3,
    threads: Optional[int] = 1,
) -> List[WorkerMetrics]:
    index = _index(judgments, schema)
    return pmap(
        lambda w: _metrics(w, index, min_judgments), sorted(index.by_worker), threads
    )


class FloorReport(NamedTuple):
    floor: int
    worker_counts: Dict[str, int]
    thin: List[str]

    def kept(self, allow_thin: bool = False) -> List[str]:
        if allow_thin:
            return sorted(self.worker_counts)
        thin = set(self.thin)
        return [sid for sid in sorted(self.worker_counts) if sid not in thin]


def enforce_worker_floor(
    judgments: Iterable[Judgment], sentence_ids: Iterable[str], floor: int = 10
) -> FloorReport:
    """
    List sentences whose trusted worker count is below the floor. Sentences that
    lost every worker count as 0.
    """
    counts: Dict[str, int] = {sid: 0 for sid in sentence_ids}
    for j in judgments:
        counts[j.sentence_id] = counts.get(j.sentence_id, 0) + 1
    ordered = {sid: counts[sid] for sid in sorted(counts)}
    return FloorReport(
        floor=floor,
        worker_counts=ordered,
        thin=[sid for sid, n in ordered.items() if n < floor],
    )


class SpamFilterResult(NamedTuple):
    trusted: List[Judgment]
    metrics: List[WorkerMetrics]
    history: List[List[WorkerMetrics]]
    rounds: int
    floor: FloorReport

    @property
    def spammers(self) -> List[str]:
        return [m.worker_id for m in self.metrics if m.spam_flag]


def filter_spammers(
    judgments: Sequence[Judgment],
    schema: RelationSchema,
    threshold: float = DEFAULT_SPAM_THRESHOLD,
    max_rounds: int = 10,
    min_judgments: int = 3,
    floor: int = 10,
    sentence_ids: Optional[Iterable[str]] = None,
    threads: Optional[int] = 1,
    logger: Optional[logging.Logger] = None,
) -> SpamFilterResult:
    """
    Repeatedly remove every worker whose worker-sentence agreement is below the
    threshold and recompute the metrics of the survivors, until a round removes
    nobody or max_rounds is reached. Workers with fewer than min_judgments
    judgments are reported but never removed.
    """
    logger = get_logger(logger)
    if not 0 <= threshold <= 1:
        raise ConfigError(f"Spam threshold must lie in [0, 1], got {threshold}")
    if max_rounds < 1:
        raise ConfigError(f"max_rounds must be at least 1, got {max_rounds}")

    active = {j.worker_id for j in judgments}
    latest: Dict[str, WorkerMetrics] = {}
    history: List[List[WorkerMetrics]] = []
    removed_last_round = False
    for round_ in range(1, max_rounds + 1):
        current = [j for j in judgments if j.worker_id in active]
        metrics = worker_metrics(current, schema, min_judgments, threads)
        history.append(metrics)
        flagged = [
            m
            for m in metrics
            if m.worker_sentence_agreement < threshold and not m.insufficient_evidence
        ]
        for m in metrics:
            latest[m.worker_id] = m
        logger.info(
            f"Spam round {round_}: {len(metrics)} worker(s), {len(flagged)} removed"
        )
        removed_last_round = bool(flagged)
        if not flagged:
            break
        for m in flagged:
            latest[m.worker_id] = m.model_copy(
                update={"spam_flag": True, "removal_round": round_}
            )
            active.discard(m.worker_id)

    trusted = [j for j in judgments if j.worker_id in active]
    if removed_last_round:
        logger.warning(
            f"Spam filtering stopped after max_rounds={max_rounds} with removals still"
            " happening"
        )
        for m in worker_metrics(trusted, schema, min_judgments, threads):
            latest[m.worker_id] = m

    final = [latest[w] for w in sorted(latest)]
    for m in final:
        if m.review_flag:
            logger.warning(f"Worker {m.worker_id} shares no sentence with another worker")

    if sentence_ids is None:
        sentence_ids = {j.sentence_id for j in judgments}
    report = enforce_worker_floor(trusted, sentence_ids, floor)
    if report.thin:
        logger.warning(
            f"{len(report.thin)} sentence(s) have fewer than {floor} trusted workers"
        )
    return SpamFilterResult(
        trusted=trusted,
        metrics=final,
        history=history,
        rounds=len(history),
        floor=report,
    )
