"""Synthetic crowd corpora with known latent truth.

Every random draw comes from a generator keyed by (seed, purpose, record id),
so a corpus is identical whether sentences are generated in sequence or in
parallel.
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import ConfigError
from .host import counter_rng, pmap
from .ingest import DatasetBundle
from .models import (
    AdjudicationRecord,
    ExpertLabel,
    Judgment,
    Record,
    Resolution,
    Sentence,
    TermMention,
)
from .schema import DEFAULT_SCHEMA, RelationSchema

ADJUDICATE_POSITIVE_AT = 2 / 3


class SimConfig(BaseModel):
    n_sentences: int = Field(default=50, ge=1)
    n_workers: int = Field(default=20, ge=1)
    workers_per_sentence: int = Field(default=15, ge=1)
    seed_relations: Optional[List[str]] = None
    ambiguous_fraction: float = Field(default=0.25, ge=0, le=1)
    ambiguous_split: float = Field(default=0.5, gt=0, lt=1)
    faithful_reliability: float = Field(default=0.9, ge=0, le=1)
    spam_fraction: float = Field(default=0.0, ge=0, le=1)
    seed_noise: float = Field(default=0.2, ge=0, le=1)
    expert_fraction: float = Field(default=1.0, ge=0, le=1)
    expert_accuracy: float = Field(default=1.0, ge=0, le=1)
    seed: int = 0

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _check_sizes(self) -> "SimConfig":
        if self.workers_per_sentence > self.n_workers:
            raise ValueError(
                f"workers_per_sentence ({self.workers_per_sentence}) exceeds n_workers"
                f" ({self.n_workers})"
            )
        return self

    @property
    def n_spammers(self) -> int:
        return int(self.spam_fraction * self.n_workers + 0.5)


class WorkerType(str, Enum):
    FAITHFUL = "faithful"
    SPAM = "spam"


class LatentTruth(Record):
    distributions: Dict[str, Dict[str, float]]
    worker_types: Dict[str, WorkerType]
    worker_reliability: Dict[str, float]

    def relation_of(self, sentence_id: str) -> str:
        dist = self.distributions[sentence_id]
        return max(sorted(dist), key=lambda r: dist[r])

    @property
    def spammers(self) -> List[str]:
        return sorted(w for w, t in self.worker_types.items() if t == WorkerType.SPAM)


def _ids(prefix: str, n: int) -> List[str]:
    width = len(str(n))
    return [f"{prefix}{i:0{width}d}" for i in range(1, n + 1)]


def _relations(config: SimConfig, schema: RelationSchema) -> List[str]:
    relations = list(config.seed_relations or schema.relations)
    unknown = [r for r in relations if not schema.is_relation(r)]
    if unknown:
        raise ConfigError(f"Simulation names unknown relation(s) {', '.join(unknown)}")
    return relations


def _sentence(sid: str, index: int, seed_relation: str) -> Sentence:
    head, tail = f"TERM{index}A", f"TERM{index}B"
    text = f"{head} and {tail} appear together in synthetic sentence {index}."
    start2 = len(head) + 5
    return Sentence(
        id=sid,
        text=text,
        term1=TermMention(surface=head, start=0, end=len(head)),
        term2=TermMention(surface=tail, start=start2, end=start2 + len(tail)),
        seed_relation=seed_relation,
        source_tag="simulated",
    )


def _latent(
    sid: str, config: SimConfig, relations: List[str]
) -> Tuple[Dict[str, float], str]:
    rng = counter_rng(config.seed, "latent", sid)
    first = relations[int(rng.integers(len(relations)))]
    dist = {first: 1.0}
    if len(relations) > 1 and rng.random() < config.ambiguous_fraction:
        others = [r for r in relations if r != first]
        second = others[int(rng.integers(len(others)))]
        dist = {first: config.ambiguous_split, second: 1 - config.ambiguous_split}
    seed_relation = first
    if len(relations) > 1 and rng.random() < config.seed_noise:
        unrelated = [r for r in relations if r not in dist]
        if unrelated:
            seed_relation = unrelated[int(rng.integers(len(unrelated)))]
    return dist, seed_relation


def _selection(
    sid: str,
    worker: str,
    dist: Dict[str, float],
    reliability: float,
    config: SimConfig,
    schema: RelationSchema,
) -> str:
    rng = counter_rng(config.seed, "cell", sid, worker)
    if rng.random() < reliability:
        relations = sorted(dist)
        weights = [dist[r] for r in relations]
        return relations[int(rng.choice(len(relations), p=weights))]
    return schema.options[int(rng.integers(schema.dimension))]


def _workers(config: SimConfig) -> Tuple[Dict[str, WorkerType], Dict[str, float]]:
    worker_ids = _ids("w", config.n_workers)
    order = counter_rng(config.seed, "spam").permutation(len(worker_ids))
    spam = {worker_ids[int(i)] for i in order[: config.n_spammers]}
    types = {
        w: WorkerType.SPAM if w in spam else WorkerType.FAITHFUL for w in worker_ids
    }
    reliability = {
        w: 0.0 if t == WorkerType.SPAM else config.faithful_reliability
        for w, t in types.items()
    }
    return types, reliability


def generate(
    config: SimConfig,
    schema: Optional[RelationSchema] = None,
    threads: Optional[int] = 1,
) -> Tuple[DatasetBundle, LatentTruth]:
    """
    Draw a corpus: each sentence gets a latent relation distribution (a point
    mass, or a two-relation split for ambiguous sentences); faithful workers
    sample from it with probability equal to their reliability and pick a
    uniform option otherwise; spammers always pick uniformly.
    """
    schema = schema or DEFAULT_SCHEMA
    relations = _relations(config, schema)
    types, reliability = _workers(config)
    worker_ids = sorted(types)
    sentence_ids = _ids("sim", config.n_sentences)

    def _one(
        index: int,
    ) -> Tuple[Sentence, Dict[str, float], List[Judgment], Optional[ExpertLabel]]:
        sid = sentence_ids[index]
        dist, seed_relation = _latent(sid, config, relations)
        assigned = counter_rng(config.seed, "assign", sid).choice(
            len(worker_ids), size=config.workers_per_sentence, replace=False
        )
        judgments = []
        for position, w in enumerate(assigned):
            worker = worker_ids[int(w)]
            option = _selection(sid, worker, dist, reliability[worker], config, schema)
            judgments.append(
                Judgment(
                    worker_id=worker,
                    sentence_id=sid,
                    selections=frozenset({option}),
                    submission_index=position,
                )
            )
        rng = counter_rng(config.seed, "expert", sid)
        expert = None
        if rng.random() < config.expert_fraction:
            truth = dist.get(seed_relation, 0.0) >= 0.5
            if rng.random() >= config.expert_accuracy:
                truth = not truth
            expert = ExpertLabel(sentence_id=sid, relation=seed_relation, decision=truth)
        return _sentence(sid, index + 1, seed_relation), dist, judgments, expert

    drawn = pmap(_one, range(config.n_sentences), threads)
    bundle = DatasetBundle(
        relation_schema=schema,
        sentences={s.id: s for s, _, _, _ in drawn},
        judgments=tuple(j for _, _, js, _ in drawn for j in js),
        expert_labels=tuple(e for _, _, _, e in drawn if e is not None),
    )
    truth = LatentTruth(
        distributions={s.id: d for s, d, _, _ in drawn},
        worker_types=types,
        worker_reliability=reliability,
    )
    return bundle, truth


def oracle_adjudications(
    truth: LatentTruth, sentence_ids: List[str], relations: List[str]
) -> List[AdjudicationRecord]:
    """
    Adjudicate from latent truth: positive when the relation carries at least
    two thirds of the sentence's latent mass, negative when it carries none,
    unresolved otherwise.
    """
    records = []
    for sid in sorted(sentence_ids):
        dist = truth.distributions[sid]
        for relation in relations:
            p = dist.get(relation, 0.0)
            if p >= ADJUDICATE_POSITIVE_AT:
                resolution = Resolution.POSITIVE
            elif p == 0:
                resolution = Resolution.NEGATIVE
            else:
                resolution = Resolution.UNRESOLVED
            records.append(
                AdjudicationRecord(sentence_id=sid, relation=relation, resolution=resolution)
            )
    return records
