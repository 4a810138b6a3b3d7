from typing import List, Tuple

import pytest
from pydantic import ValidationError

from crowdlabel.exceptions import ConfigError
from crowdlabel.ingest import DatasetBundle
from crowdlabel.models import Resolution
from crowdlabel.schema import DEFAULT_SCHEMA, validate_dataset
from crowdlabel.scoring import ScoreTable, score_sentences
from crowdlabel.simulator import (
    LatentTruth,
    SimConfig,
    WorkerType,
    generate,
    oracle_adjudications,
)
from crowdlabel.vectors import sentence_vectors
from crowdlabel.worker_quality import filter_spammers

CONFIG = SimConfig(
    n_sentences=40,
    n_workers=20,
    workers_per_sentence=10,
    seed_relations=["treat", "cause", "symptom", "diagnose"],
    spam_fraction=0.2,
    seed=11,
)


def test_generation_is_deterministic() -> None:
    first = generate(CONFIG)
    again = generate(CONFIG, threads=4)
    assert first == again
    other, _ = generate(CONFIG.model_copy(update={"seed": 12}))
    assert other.judgments != first[0].judgments


def test_generated_corpus_is_valid() -> None:
    bundle, truth = generate(CONFIG)
    report = validate_dataset(
        list(bundle.sentences.values()),
        bundle.judgments,
        DEFAULT_SCHEMA,
        bundle.expert_labels,
    )
    assert report.violations == ()
    assert len(bundle.sentences) == 40
    assert len(bundle.judgments) == 400
    assert len(truth.spammers) == 4
    for dist in truth.distributions.values():
        assert sum(dist.values()) == pytest.approx(1.0)


def test_planted_spammers_are_filtered() -> None:
    bundle, truth = generate(CONFIG.model_copy(update={"n_sentences": 80}))
    result = filter_spammers(list(bundle.judgments), DEFAULT_SCHEMA, floor=5)
    assert result.spammers == truth.spammers


def test_perfect_expert_follows_latent_truth() -> None:
    bundle, truth = generate(CONFIG)
    assert bundle.expert_labels is not None
    assert len(bundle.expert_labels) == 40
    for label in bundle.expert_labels:
        dist = truth.distributions[label.sentence_id]
        assert label.decision == (dist.get(label.relation, 0.0) >= 0.5)


def test_invalid_configs() -> None:
    with pytest.raises(ValidationError):
        SimConfig(n_workers=5, workers_per_sentence=6)
    with pytest.raises(ConfigError):
        generate(SimConfig(seed_relations=["heal"]))


def test_oracle_adjudications() -> None:
    truth = LatentTruth(
        distributions={
            "a": {"cause": 1.0},
            "b": {"cause": 0.5, "treat": 0.5},
            "c": {"treat": 0.7, "cause": 0.3},
        },
        worker_types={"w1": WorkerType.FAITHFUL},
        worker_reliability={"w1": 0.9},
    )
    records = oracle_adjudications(truth, ["c", "a", "b"], ["cause", "treat"])
    resolutions = {(r.sentence_id, r.relation): r.resolution for r in records}
    assert resolutions == {
        ("a", "cause"): Resolution.POSITIVE,
        ("a", "treat"): Resolution.NEGATIVE,
        ("b", "cause"): Resolution.UNRESOLVED,
        ("b", "treat"): Resolution.UNRESOLVED,
        ("c", "cause"): Resolution.UNRESOLVED,
        ("c", "treat"): Resolution.POSITIVE,
    }
    assert [r.sentence_id for r in records][::2] == ["a", "b", "c"]
    assert truth.relation_of("c") == "treat"


SEEDS = range(20)


def scored(config: SimConfig) -> Tuple[DatasetBundle, LatentTruth, ScoreTable]:
    bundle, truth = generate(config)
    vectors = sentence_vectors(list(bundle.judgments), DEFAULT_SCHEMA)
    return bundle, truth, score_sentences(vectors, DEFAULT_SCHEMA)


def test_top_score_recovers_latent_relation_over_seeds() -> None:
    hits = total = 0
    for seed in SEEDS:
        config = SimConfig(ambiguous_fraction=0.0, faithful_reliability=0.9, seed=seed)
        _, truth, table = scored(config)
        for sid, row in table.scores.items():
            top = max(DEFAULT_SCHEMA.options, key=lambda o: row[o])
            hits += top == truth.relation_of(sid)
            total += 1
    assert total == 20 * 50
    assert hits / total >= 0.95


@pytest.mark.parametrize("ambiguous_fraction", [0.0, 0.25])
def test_spam_filter_at_half_reliability_gap_over_seeds(
    ambiguous_fraction: float,
) -> None:
    # faithful workers at reliability 0.5 against spammers at 0
    found = missed = wrong = 0
    for seed in SEEDS:
        config = SimConfig(
            n_sentences=40,
            n_workers=20,
            workers_per_sentence=15,
            ambiguous_fraction=ambiguous_fraction,
            faithful_reliability=0.5,
            spam_fraction=0.2,
            seed=seed,
        )
        bundle, truth = generate(config)
        assert len(truth.spammers) == 4
        result = filter_spammers(list(bundle.judgments), DEFAULT_SCHEMA, floor=0)
        flagged, planted = set(result.spammers), set(truth.spammers)
        found += len(flagged & planted)
        missed += len(planted - flagged)
        wrong += len(flagged - planted)
    assert found / (found + wrong) >= 0.9
    assert found / (found + missed) >= 0.9


def mean_true_score(table: ScoreTable, truth: LatentTruth) -> float:
    sids = sorted(table.scores)
    return sum(table.srs(sid, truth.relation_of(sid)) for sid in sids) / len(sids)


def test_reliable_crowds_score_higher_over_seeds() -> None:
    for seed in SEEDS:
        _, truth, sharp = scored(SimConfig(faithful_reliability=1.0, seed=seed))
        _, _, blurred = scored(SimConfig(faithful_reliability=0.5, seed=seed))
        assert mean_true_score(sharp, truth) > mean_true_score(blurred, truth)


def test_even_ambiguity_caps_scores() -> None:
    config = SimConfig(ambiguous_fraction=1.0, ambiguous_split=0.5, seed=3)
    _, truth, table = scored(config)
    for sid, dist in truth.distributions.items():
        assert sorted(dist.values()) == [0.5, 0.5]
        latent: List[float] = [table.srs(sid, relation) for relation in dist]
        assert sum(latent) / 2 < 0.85


def test_single_planted_spammer_is_found() -> None:
    config = SimConfig(
        n_sentences=20,
        n_workers=15,
        workers_per_sentence=15,
        spam_fraction=1 / 15,
        seed=42,
    )
    bundle, truth = generate(config)
    assert len(truth.spammers) == 1
    result = filter_spammers(list(bundle.judgments), DEFAULT_SCHEMA)
    assert result.spammers == truth.spammers


def test_noiseless_crowd_scores_one() -> None:
    config = SimConfig(ambiguous_fraction=0.0, faithful_reliability=1.0, seed=5)
    _, truth, table = scored(config)
    for sid in truth.distributions:
        assert table.srs(sid, truth.relation_of(sid)) == 1.0
