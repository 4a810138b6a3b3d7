"""Sentence-relation scores, thresholding, training sets and gold construction."""
import logging
from typing import (
    Dict,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
)

from .base_logger import get_logger
from .exceptions import ConfigError
from .host import counter_rng, pmap
from .ingest import QueueEntry
from .models import (
    AdjudicationRecord,
    ExpertLabel,
    Judgment,
    Provenance,
    Record,
    Resolution,
    Sentence,
    TrainingInstance,
)
from .schema import RelationSchema
from .vectors import SentenceVector, cosine, group_by_sentence, is_zero, reduced


class SentenceRelationScore(Record):
    sentence_id: str
    relation: str
    srs: float
    zero_norm: bool = False


def sentence_relation_score(
    vector: SentenceVector, relation: str, schema: RelationSchema
) -> SentenceRelationScore:
    """srs(s, r) = cos(V_s, e_r) = V_s[r] / |V_s|."""
    components = reduced(vector.components)
    return SentenceRelationScore(
        sentence_id=vector.sentence_id,
        relation=relation,
        srs=cosine(components, schema.unit_vector(relation)),
        zero_norm=is_zero(components),
    )


class ScoreTable(NamedTuple):
    """srs for every (sentence, option) pair, sentences in id order."""

    options: Tuple[str, ...]
    scores: Dict[str, Dict[str, float]]
    zero_norm: List[str]

    def srs(self, sentence_id: str, relation: str) -> float:
        return self.scores[sentence_id][relation]

    def for_relation(self, relation: str) -> Dict[str, float]:
        return {sid: row[relation] for sid, row in self.scores.items()}

    def rows(self) -> List[Tuple[str, str, float]]:
        return [
            (sid, option, row[option])
            for sid, row in self.scores.items()
            for option in self.options
        ]


def score_sentences(
    vectors: Mapping[str, SentenceVector],
    schema: RelationSchema,
    threads: Optional[int] = 1,
    logger: Optional[logging.Logger] = None,
) -> ScoreTable:
    logger = get_logger(logger)

    def _row(sid: str) -> Dict[str, float]:
        return {
            o: sentence_relation_score(vectors[sid], o, schema).srs
            for o in schema.options
        }

    ids = sorted(vectors)
    rows = pmap(_row, ids, threads)
    zero = [sid for sid in ids if is_zero(vectors[sid].components)]
    for sid in zero:
        logger.warning(f"Sentence {sid} has an all-zero vector; its scores are 0")
    return ScoreTable(
        options=schema.options, scores=dict(zip(ids, rows)), zero_norm=zero
    )


def check_threshold(t: float) -> float:
    if not 0 <= t <= 1:
        raise ConfigError(f"Threshold must lie in [0, 1], got {t}")
    return t


def apply_threshold(srs: float, t: float) -> float:
    """
    Signed training weight: srs itself when srs >= t, otherwise srs - 1, which
    rescales negatives into [-1, 0).
    """
    check_threshold(t)
    return srs if srs >= t else srs - 1


def crowd_labels(scores: Mapping[str, float], t: float) -> Dict[str, bool]:
    check_threshold(t)
    return {sid: scores[sid] >= t for sid in sorted(scores)}


def build_crowd_training_set(
    scores: Mapping[str, float],
    relation: str,
    t: float,
    logger: Optional[logging.Logger] = None,
) -> List[TrainingInstance]:
    logger = get_logger(logger)
    check_threshold(t)
    if t == 0:
        logger.warning("Threshold 0 makes every crowd label positive")
    return [
        TrainingInstance(
            sentence_id=sid,
            relation=relation,
            weight=apply_threshold(scores[sid], t),
            provenance=Provenance.CROWD,
        )
        for sid in sorted(scores)
    ]


def build_baseline_training_set(
    sentences: Iterable[Sentence], relation: str, schema: RelationSchema
) -> List[TrainingInstance]:
    """
    Distant-supervision labels: positive when the seed relation is the target,
    negative when it is another relation that does not overlap the target.
    """
    instances = []
    for sentence in sorted(sentences, key=lambda s: s.id):
        if sentence.seed_relation == relation:
            weight = 1.0
        elif schema.overlaps(relation, sentence.seed_relation):
            continue
        else:
            weight = -1.0
        instances.append(
            TrainingInstance(
                sentence_id=sentence.id,
                relation=relation,
                weight=weight,
                provenance=Provenance.BASELINE,
            )
        )
    return instances


def expert_label_map(
    expert_labels: Iterable[ExpertLabel], relation: str, schema: RelationSchema
) -> Dict[str, bool]:
    """
    Expert view of one relation: the expert's decisions on sentences seeded with
    it, plus negatives reused from other relations' expert positives. A decision
    on the relation itself wins over a reused negative.
    """
    direct: Dict[str, bool] = {}
    reused: Dict[str, bool] = {}
    for label in expert_labels:
        if label.relation == relation:
            direct[label.sentence_id] = label.decision
        elif label.decision and not schema.overlaps(relation, label.relation):
            reused[label.sentence_id] = False
    merged = {**reused, **direct}
    return {sid: merged[sid] for sid in sorted(merged)}


class ExpertSetResult(NamedTuple):
    instances: List[TrainingInstance]
    unlabeled: List[str]


def build_expert_training_set(
    sentences: Iterable[Sentence],
    expert_labels: Iterable[ExpertLabel],
    relation: str,
    schema: RelationSchema,
) -> ExpertSetResult:
    labels = expert_label_map(expert_labels, relation, schema)
    instances = [
        TrainingInstance(
            sentence_id=sid,
            relation=relation,
            weight=1.0 if decision else -1.0,
            provenance=Provenance.EXPERT,
        )
        for sid, decision in labels.items()
    ]
    all_ids = sorted(s.id for s in sentences)
    return ExpertSetResult(
        instances=instances, unlabeled=[sid for sid in all_ids if sid not in labels]
    )


def pick_single_worker(
    judgments: Sequence[Judgment], sentence_id: str, rng_seed: int
) -> Judgment:
    """
    One judgment drawn uniformly from the sentence's judgments, ordered by
    submission_index then worker id.
    """
    ordered = sorted(judgments, key=lambda j: (j.submission_index, j.worker_id))
    pick = int(counter_rng("single", rng_seed, sentence_id).integers(len(ordered)))
    return ordered[pick]


def build_single_training_set(
    judgments: Iterable[Judgment], relation: str, rng_seed: int
) -> List[TrainingInstance]:
    instances = []
    for sid, group in group_by_sentence(judgments).items():
        chosen = pick_single_worker(group, sid, rng_seed)
        instances.append(
            TrainingInstance(
                sentence_id=sid,
                relation=relation,
                weight=1.0 if relation in chosen.selections else -1.0,
                provenance=Provenance.SINGLE,
            )
        )
    return instances


def labels_of(instances: Iterable[TrainingInstance]) -> Dict[str, bool]:
    return {i.sentence_id: i.positive for i in sorted(instances, key=lambda i: i.sentence_id)}


class AgreementPoint(NamedTuple):
    threshold: float
    agreement: float
    matches: int
    total: int


def _agreement_point(
    scores: Mapping[str, float], expert: Mapping[str, bool], t: float
) -> AgreementPoint:
    check_threshold(t)
    common = [sid for sid in sorted(expert) if sid in scores]
    matches = sum(1 for sid in common if (scores[sid] >= t) == expert[sid])
    return AgreementPoint(
        threshold=t,
        agreement=matches / len(common) if common else 0.0,
        matches=matches,
        total=len(common),
    )


def crowd_expert_agreement(
    scores: Mapping[str, float], expert: Mapping[str, bool], t: float
) -> float:
    """
    Fraction of expert-labelled sentences whose thresholded crowd label matches
    the expert. Sentences without a crowd score are left out.
    """
    return _agreement_point(scores, expert, t).agreement


def agreement_sweep(
    scores: Mapping[str, float],
    expert: Mapping[str, bool],
    grid: Sequence[float],
    threads: Optional[int] = 1,
) -> List[AgreementPoint]:
    return pmap(lambda t: _agreement_point(scores, expert, t), sorted(grid), threads)


def best_threshold(curve: Sequence[AgreementPoint]) -> float:
    """Argmax of the agreement curve; ties go to the smallest threshold."""
    if not curve:
        raise ConfigError("Cannot pick a threshold from an empty sweep")
    best = max(curve, key=lambda p: (p.agreement, -p.threshold))
    return best.threshold


class EvaluationSet(NamedTuple):
    relation: str
    threshold: float
    gold: Dict[str, bool]
    srs: Dict[str, float]
    agreed: List[str]
    adjudicated: List[str]
    dropped_unresolved: List[str]
    unscored: List[str]
    pending: List[QueueEntry]


def build_evaluation_set(
    scores: Mapping[str, float],
    expert: Mapping[str, bool],
    relation: str,
    t: float,
    adjudications: Optional[Iterable[AdjudicationRecord]] = None,
    logger: Optional[logging.Logger] = None,
) -> EvaluationSet:
    """
    Gold labels for one relation. Where crowd-at-t and expert agree the expert
    label stands; disagreements take their adjudication, unresolved ones are
    dropped, and missing ones are returned as pending queue entries.
    """
    logger = get_logger(logger)
    check_threshold(t)
    resolutions = {
        a.sentence_id: a.resolution for a in adjudications or [] if a.relation == relation
    }
    gold: Dict[str, bool] = {}
    agreed, adjudicated, dropped, unscored = [], [], [], []
    pending = []
    for sid in sorted(expert):
        if sid not in scores:
            unscored.append(sid)
            continue
        crowd = scores[sid] >= t
        if crowd == expert[sid]:
            gold[sid] = expert[sid]
            agreed.append(sid)
            continue
        resolution = resolutions.get(sid)
        if resolution is None:
            pending.append(
                QueueEntry(
                    sentence_id=sid,
                    relation=relation,
                    srs=scores[sid],
                    expert_decision=expert[sid],
                    resolution=None,
                )
            )
        elif resolution == Resolution.UNRESOLVED:
            dropped.append(sid)
        else:
            gold[sid] = resolution == Resolution.POSITIVE
            adjudicated.append(sid)

    if unscored:
        logger.warning(
            f"{len(unscored)} expert-labelled sentence(s) have no crowd score for"
            f" '{relation}'"
        )
    if dropped:
        logger.warning(
            f"Dropped {len(dropped)} unresolved sentence(s) from the '{relation}'"
            " evaluation set"
        )
    return EvaluationSet(
        relation=relation,
        threshold=t,
        gold=gold,
        srs={sid: scores[sid] for sid in gold},
        agreed=agreed,
        adjudicated=adjudicated,
        dropped_unresolved=dropped,
        unscored=unscored,
        pending=pending,
    )


class ClarityReport(NamedTuple):
    sentence_clarity: Dict[str, float]
    relation_clarity: Dict[str, Optional[float]]


def clarity_report(table: ScoreTable, schema: RelationSchema) -> ClarityReport:
    """
    Sentence clarity is the highest srs over the schema's relations; relation
    clarity is the mean srs over the sentences where the relation got a vote.
    """
    sentence_clarity = {
        sid: max(row[r] for r in schema.relations) for sid, row in table.scores.items()
    }
    relation_clarity: Dict[str, Optional[float]] = {}
    for relation in schema.relations:
        voted = [row[relation] for row in table.scores.values() if row[relation] > 0]
        relation_clarity[relation] = sum(voted) / len(voted) if voted else None
    return ClarityReport(
        sentence_clarity=sentence_clarity, relation_clarity=relation_clarity
    )


class Disagreement(NamedTuple):
    sentence_id: str
    relation: str
    srs: float
    crowd_weight: float
    expert_decision: bool
    text: str


def disagreement_report(
    scores: Mapping[str, float],
    expert: Mapping[str, bool],
    relation: str,
    t: float,
    sentences: Mapping[str, Sentence],
) -> List[Disagreement]:
    rows = []
    for sid in sorted(expert):
        if sid not in scores or (scores[sid] >= t) == expert[sid]:
            continue
        sentence = sentences.get(sid)
        rows.append(
            Disagreement(
                sentence_id=sid,
                relation=relation,
                srs=scores[sid],
                crowd_weight=apply_threshold(scores[sid], t),
                expert_decision=expert[sid],
                text=sentence.text if sentence else "",
            )
        )
    return rows
