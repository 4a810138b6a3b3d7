import math
from typing import Dict, List, Tuple

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdlabel.exceptions import ConfigError
from crowdlabel.models import (
    AdjudicationRecord,
    ExpertLabel,
    Judgment,
    Provenance,
    Resolution,
    Sentence,
)
from crowdlabel.schema import DEFAULT_SCHEMA, RelationSchema
from crowdlabel.scoring import (
    AgreementPoint,
    ScoreTable,
    agreement_sweep,
    apply_threshold,
    best_threshold,
    build_baseline_training_set,
    build_crowd_training_set,
    build_evaluation_set,
    build_expert_training_set,
    build_single_training_set,
    clarity_report,
    crowd_expert_agreement,
    disagreement_report,
    expert_label_map,
    score_sentences,
    sentence_relation_score,
)
from crowdlabel.vectors import sentence_vectors, truncate

from .conftest import SENTENCE_1_COUNTS, SENTENCE_2_COUNTS, judgments_from_counts


@pytest.fixture
def table(pair_judgments: List[Judgment]) -> ScoreTable:
    return score_sentences(sentence_vectors(pair_judgments, DEFAULT_SCHEMA), DEFAULT_SCHEMA)


# option, s1 srs, s1 printed weight, s2 srs, s2 printed weight at t = 0.5
WORKED_EXAMPLE = [
    ("treat", 0.0, -1.0, 0.36, -0.64),
    ("prevent", 0.0, -1.0, 0.12, -0.88),
    ("diagnose", 0.09, -0.91, 0.84, 0.84),
    ("cause", 0.96, 0.96, 0.0, -1.0),
    ("location", 0.09, -0.91, 0.0, -1.0),
    ("symptom", 0.19, -0.81, 0.0, -1.0),
    ("manifestation", 0.0, -1.0, 0.0, -1.0),
    ("contraindicate", 0.0, -1.0, 0.0, -1.0),
    ("associated_with", 0.09, -0.91, 0.36, -0.64),
    ("side_effect", 0.0, -1.0, 0.0, -1.0),
    ("is_a", 0.0, -1.0, 0.0, -1.0),
    ("part_of", 0.0, -1.0, 0.0, -1.0),
    ("other", 0.0, -1.0, 0.12, -0.88),
    ("none", 0.0, -1.0, 0.0, -1.0),
]
WORKED_CELLS = [
    (sid, option, srs, weight)
    for option, srs1, weight1, srs2, weight2 in WORKED_EXAMPLE
    for sid, srs, weight in (("s1", srs1, weight1), ("s2", srs2, weight2))
]


def printed_weight(srs: float, t: float) -> float:
    weight = apply_threshold(srs, t)
    return truncate(weight) if weight >= 0 else truncate(srs) - 1


def test_worked_example_covers_every_option() -> None:
    assert [row[0] for row in WORKED_EXAMPLE] == list(DEFAULT_SCHEMA.options)
    assert len(WORKED_CELLS) == 28


@pytest.mark.parametrize("sid, option, srs, weight", WORKED_CELLS)
def test_worked_example_table(
    table: ScoreTable, sid: str, option: str, srs: float, weight: float
) -> None:
    score = table.srs(sid, option)
    assert truncate(score) == pytest.approx(srs, abs=1e-12)
    assert printed_weight(score, 0.5) == pytest.approx(weight, abs=1e-12)


def test_score_is_component_over_norm(pair_judgments: List[Judgment]) -> None:
    vector = sentence_vectors(pair_judgments, DEFAULT_SCHEMA)["s1"]
    score = sentence_relation_score(vector, "cause", DEFAULT_SCHEMA)
    assert score.srs == pytest.approx(10 / math.sqrt(107))
    assert not score.zero_norm


def test_negative_weights_print_as_truncated_minus_one(table: ScoreTable) -> None:
    weight = apply_threshold(table.srs("s1", "diagnose"), 0.5)
    assert weight == pytest.approx(1 / math.sqrt(107) - 1)
    assert truncate(table.srs("s1", "diagnose")) - 1 == pytest.approx(-0.91)


def test_apply_threshold() -> None:
    assert apply_threshold(0.7, 0.5) == 0.7
    assert apply_threshold(0.5, 0.5) == 0.5
    assert apply_threshold(0.2, 0.5) == pytest.approx(-0.8)
    assert apply_threshold(0.0, 0.5) == -1.0
    with pytest.raises(ConfigError):
        apply_threshold(0.5, 1.2)


def test_crowd_training_set(table: ScoreTable) -> None:
    instances = build_crowd_training_set(table.for_relation("cause"), "cause", 0.5)
    assert [i.sentence_id for i in instances] == ["s1", "s2"]
    assert instances[0].weight == pytest.approx(10 / math.sqrt(107))
    assert instances[0].positive
    assert instances[1].weight == -1.0
    assert all(i.provenance == Provenance.CROWD for i in instances)


def test_threshold_zero_makes_everything_positive(table: ScoreTable) -> None:
    instances = build_crowd_training_set(table.for_relation("treat"), "treat", 0.0)
    assert all(i.positive for i in instances)


def test_baseline_training_set(pair_sentences: List[Sentence]) -> None:
    instances = build_baseline_training_set(pair_sentences, "cause", DEFAULT_SCHEMA)
    assert [(i.sentence_id, i.weight) for i in instances] == [("s1", 1.0), ("s2", -1.0)]

    overlapping = RelationSchema(
        relations=DEFAULT_SCHEMA.relations,
        overlap_exclusions={"cause": frozenset({"diagnose"})},
    )
    instances = build_baseline_training_set(pair_sentences, "cause", overlapping)
    assert [i.sentence_id for i in instances] == ["s1"]


def test_expert_map_reuses_other_positives(pair_expert: List[ExpertLabel]) -> None:
    assert expert_label_map(pair_expert, "cause", DEFAULT_SCHEMA) == {
        "s1": True,
        "s2": False,
    }
    assert expert_label_map(pair_expert, "diagnose", DEFAULT_SCHEMA) == {
        "s1": False,
        "s2": True,
    }


def test_direct_decision_beats_reused_negative() -> None:
    labels = [
        ExpertLabel(sentence_id="s1", relation="treat", decision=True),
        ExpertLabel(sentence_id="s1", relation="cause", decision=True),
    ]
    assert expert_label_map(labels, "cause", DEFAULT_SCHEMA) == {"s1": True}


def test_expert_training_set_lists_unlabeled(
    pair_sentences: List[Sentence],
) -> None:
    labels = [ExpertLabel(sentence_id="s1", relation="cause", decision=False)]
    result = build_expert_training_set(pair_sentences, labels, "cause", DEFAULT_SCHEMA)
    assert [(i.sentence_id, i.weight) for i in result.instances] == [("s1", -1.0)]
    assert result.unlabeled == ["s2"]


def test_single_worker_set_is_seeded(pair_judgments: List[Judgment]) -> None:
    first = build_single_training_set(pair_judgments, "cause", 7)
    again = build_single_training_set(list(reversed(pair_judgments)), "cause", 7)
    assert first == again
    assert [i.sentence_id for i in first] == ["s1", "s2"]
    assert {i.weight for i in first} <= {1.0, -1.0}
    # s2 has no cause vote, whoever is drawn
    assert first[1].weight == -1.0


def test_agreement_and_best_threshold(table: ScoreTable) -> None:
    scores = table.for_relation("diagnose")
    expert = {"s1": False, "s2": True}
    assert crowd_expert_agreement(scores, expert, 0.5) == 1.0
    assert crowd_expert_agreement(scores, expert, 0.05) == 0.5
    curve = agreement_sweep(scores, expert, [0.9, 0.05, 0.5, 0.3])
    assert [p.threshold for p in curve] == [0.05, 0.3, 0.5, 0.9]
    assert best_threshold(curve) == 0.3


def test_best_threshold_ties_go_low() -> None:
    curve = [
        AgreementPoint(threshold=0.7, agreement=0.8, matches=4, total=5),
        AgreementPoint(threshold=0.4, agreement=0.8, matches=4, total=5),
        AgreementPoint(threshold=0.2, agreement=0.6, matches=3, total=5),
    ]
    assert best_threshold(curve) == 0.4
    with pytest.raises(ConfigError):
        best_threshold([])


SCORES = {"a": 0.9, "b": 0.2, "c": 0.6, "d": 0.1}
EXPERT: Dict[str, bool] = {"a": True, "b": True, "c": False, "d": False, "e": True}


def test_evaluation_set_needs_adjudication() -> None:
    ev = build_evaluation_set(SCORES, EXPERT, "cause", 0.5)
    assert ev.agreed == ["a", "d"]
    assert [p.sentence_id for p in ev.pending] == ["b", "c"]
    assert ev.pending[0].expert_decision
    assert ev.unscored == ["e"]
    assert ev.gold == {"a": True, "d": False}


def test_evaluation_set_with_adjudications() -> None:
    adjudications = [
        AdjudicationRecord(sentence_id="b", relation="cause", resolution=Resolution.POSITIVE),
        AdjudicationRecord(
            sentence_id="c", relation="cause", resolution=Resolution.UNRESOLVED
        ),
        AdjudicationRecord(sentence_id="d", relation="treat", resolution=Resolution.POSITIVE),
    ]
    ev = build_evaluation_set(SCORES, EXPERT, "cause", 0.5, adjudications)
    assert ev.pending == []
    assert ev.gold == {"a": True, "b": True, "d": False}
    assert ev.adjudicated == ["b"]
    assert ev.dropped_unresolved == ["c"]
    assert ev.srs == {"a": 0.9, "b": 0.2, "d": 0.1}


def test_disagreement_report(pair_sentences: List[Sentence]) -> None:
    sentences = {s.id: s for s in pair_sentences}
    rows = disagreement_report({"s1": 0.3, "s2": 0.8}, {"s1": True, "s2": True}, "cause", 0.5, sentences)
    assert [r.sentence_id for r in rows] == ["s1"]
    assert rows[0].crowd_weight == pytest.approx(-0.7)
    assert rows[0].text == sentences["s1"].text


def test_clarity(table: ScoreTable) -> None:
    clarity = clarity_report(table, DEFAULT_SCHEMA)
    assert clarity.sentence_clarity["s1"] == pytest.approx(10 / math.sqrt(107))
    assert clarity.sentence_clarity["s2"] == pytest.approx(7 / math.sqrt(69))
    assert clarity.relation_clarity["diagnose"] == pytest.approx(
        (1 / math.sqrt(107) + 7 / math.sqrt(69)) / 2
    )
    assert clarity.relation_clarity["is_a"] is None


def test_zero_threshold_keeps_zero_score_positive() -> None:
    # [-1, 0) u [t, 1] contains 0 when t is 0
    assert apply_threshold(0.0, 0.0) == 0.0
    instances = build_crowd_training_set({"s1": 0.0, "s2": 0.4}, "treat", 0.0)
    assert [(i.weight, i.positive) for i in instances] == [(0.0, True), (0.4, True)]


unit = st.floats(min_value=0, max_value=1)


@settings(max_examples=500)
@given(unit, unit, unit)
def test_apply_threshold_is_monotone(low: float, high: float, t: float) -> None:
    low, high = sorted((low, high))
    assert apply_threshold(low, t) <= apply_threshold(high, t)
    weight = apply_threshold(low, t)
    assert (t <= weight <= 1) or (-1 <= weight < 0)


@settings(max_examples=500)
@given(st.floats(min_value=1e-6, max_value=1))
def test_apply_threshold_jumps_by_one_at_t(t: float) -> None:
    below = math.nextafter(t, 0.0)
    assert apply_threshold(t, t) == t
    assert apply_threshold(t, t) - apply_threshold(below, t) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("factor", [2, 3, 7])
def test_scores_do_not_depend_on_crowd_size(factor: int) -> None:
    def scaled(counts: Dict[str, int]) -> Dict[str, int]:
        return {option: n * factor for option, n in counts.items()}

    base = judgments_from_counts("s1", SENTENCE_1_COUNTS) + judgments_from_counts(
        "s2", SENTENCE_2_COUNTS
    )
    bigger = judgments_from_counts("s1", scaled(SENTENCE_1_COUNTS)) + judgments_from_counts(
        "s2", scaled(SENTENCE_2_COUNTS)
    )
    small = score_sentences(sentence_vectors(base, DEFAULT_SCHEMA), DEFAULT_SCHEMA)
    large = score_sentences(sentence_vectors(bigger, DEFAULT_SCHEMA), DEFAULT_SCHEMA)
    assert large.rows() == small.rows()
    for relation in DEFAULT_SCHEMA.relations:
        assert build_crowd_training_set(
            large.for_relation(relation), relation, 0.5
        ) == build_crowd_training_set(small.for_relation(relation), relation, 0.5)


scored_expert = st.dictionaries(
    st.text(alphabet="abcdef", min_size=1, max_size=2),
    st.tuples(unit, st.booleans()),
    min_size=1,
    max_size=20,
)


@settings(max_examples=300)
@given(scored_expert, st.lists(unit, min_size=1, max_size=12, unique=True))
def test_agreement_sweep_matches_recount(
    cases: Dict[str, Tuple[float, bool]], grid: List[float]
) -> None:
    scores = {sid: c[0] for sid, c in cases.items()}
    expert = {sid: c[1] for sid, c in cases.items()}
    curve = agreement_sweep(scores, expert, grid)
    assert [p.threshold for p in curve] == sorted(grid)
    for point in curve:
        matches = 0
        for sid in cases:
            if (scores[sid] >= point.threshold) == expert[sid]:
                matches += 1
        assert (point.matches, point.total) == (matches, len(cases))
        assert point.agreement == matches / len(cases)
    top = max(p.agreement for p in curve)
    assert best_threshold(curve) == min(p.threshold for p in curve if p.agreement == top)


def test_single_worker_draw_follows_vote_share_over_seeds() -> None:
    # 3 of 15 workers chose treat
    judgments = judgments_from_counts("s1", {"treat": 3, "cause": 12})
    draws = 4000
    positives = sum(
        build_single_training_set(judgments, "treat", seed)[0].positive
        for seed in range(draws)
    )
    assert positives / draws == pytest.approx(0.2, abs=0.03)
