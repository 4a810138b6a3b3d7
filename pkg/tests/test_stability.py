from typing import Dict, List, Tuple

import pytest

from crowdlabel.exceptions import ConfigError
from crowdlabel.models import Judgment, Resolution
from crowdlabel.schema import DEFAULT_SCHEMA
from crowdlabel.simulator import LatentTruth, SimConfig, generate, oracle_adjudications
from crowdlabel.stability import (
    CurveKind,
    incremental_vectors,
    mean_cosine_delta_curve,
    order_sensitivity_bands,
    quality_by_worker_count,
)

from .conftest import SENTENCE_1_COUNTS, judgments_from_counts


@pytest.fixture(scope="module")
def simulated() -> List[Judgment]:
    config = SimConfig(
        n_sentences=12,
        n_workers=10,
        workers_per_sentence=8,
        seed_relations=["treat", "cause", "symptom"],
        seed=3,
    )
    bundle, _ = generate(config)
    return list(bundle.judgments)


def test_incremental_vectors_follow_submission_order() -> None:
    judgments = judgments_from_counts("s1", SENTENCE_1_COUNTS)
    prefixes = incremental_vectors(list(reversed(judgments)), DEFAULT_SCHEMA)
    assert len(prefixes) == 15
    assert [int(p.sum()) for p in prefixes] == list(range(1, 16))
    # w01 voted diagnose
    assert prefixes[0][DEFAULT_SCHEMA.index("diagnose")] == 1
    assert int(prefixes[-1][DEFAULT_SCHEMA.index("cause")]) == 10


def test_cosine_delta_curve(simulated: List[Judgment]) -> None:
    curve = mean_cosine_delta_curve(simulated, DEFAULT_SCHEMA, k_max=8)
    assert curve.kind == CurveKind.COSINE_DELTA
    assert [p.k for p in curve.points] == list(range(2, 9))
    assert all(p.value >= 0 for p in curve.points)
    assert all(p.contributing_sentences == 12 for p in curve.points)
    assert not curve.extension


def test_identical_workers_never_move_the_vector() -> None:
    judgments = judgments_from_counts("s1", {"cause": 6})
    curve = mean_cosine_delta_curve(judgments, DEFAULT_SCHEMA, k_max=6)
    assert all(p.value == 0.0 for p in curve.points)


def test_k_max_below_two() -> None:
    with pytest.raises(ConfigError):
        mean_cosine_delta_curve(judgments_from_counts("s1", {"cause": 3}), DEFAULT_SCHEMA, k_max=1)


def test_k_beyond_the_crowd_is_skipped() -> None:
    judgments = judgments_from_counts("s1", {"cause": 3})
    curve = mean_cosine_delta_curve(judgments, DEFAULT_SCHEMA, k_max=5)
    assert [p.k for p in curve.points] == [2, 3]


def test_curves_do_not_depend_on_threads(simulated: List[Judgment]) -> None:
    one = mean_cosine_delta_curve(simulated, DEFAULT_SCHEMA, 8, threads=1)
    four = mean_cosine_delta_curve(simulated, DEFAULT_SCHEMA, 8, threads=4)
    assert one == four


def test_quality_by_worker_count() -> None:
    judgments = judgments_from_counts("s1", SENTENCE_1_COUNTS)
    gold = {"cause": {"s1": True}}
    curve = quality_by_worker_count(judgments, DEFAULT_SCHEMA, gold, {"cause": 0.5}, k_max=3)
    assert curve.kind == CurveKind.ANNOTATION_F1
    # the first worker voted diagnose, the second cause
    assert [p.value for p in curve.points] == [0.0, 1.0, 1.0]
    assert [p.contributing_sentences for p in curve.points] == [1, 1, 1]
    with pytest.raises(ConfigError):
        quality_by_worker_count(judgments, DEFAULT_SCHEMA, gold, {}, k_max=3)


def test_order_bands_bracket_shuffles(simulated: List[Judgment]) -> None:
    bands = order_sensitivity_bands(simulated, DEFAULT_SCHEMA, [1, 2, 3], k_max=6)
    assert [b.k for b in bands] == list(range(2, 7))
    for band in bands:
        assert 0 <= band.low <= band.high
    shuffled = mean_cosine_delta_curve(simulated, DEFAULT_SCHEMA, 6, order_seed=2)
    assert shuffled.extension
    assert all(b.low <= shuffled.value_at(b.k) <= b.high for b in bands)
    with pytest.raises(ConfigError):
        order_sensitivity_bands(simulated, DEFAULT_SCHEMA, [], k_max=6)


@pytest.fixture(scope="module")
def seven() -> Tuple[List[Judgment], LatentTruth]:
    """Default-sized corpus of seed 7: 50 sentences, 15 workers each."""
    bundle, truth = generate(SimConfig(seed=7))
    return list(bundle.judgments), truth


def test_cosine_delta_shrinks_with_crowd_size(
    seven: Tuple[List[Judgment], LatentTruth]
) -> None:
    judgments, _ = seven
    curve = mean_cosine_delta_curve(judgments, DEFAULT_SCHEMA, k_max=15)
    assert curve.points[-1].k == 15
    assert curve.value_at(15) < curve.value_at(3)


def test_quality_settles_by_ten_workers(seven: Tuple[List[Judgment], LatentTruth]) -> None:
    judgments, truth = seven
    relations = list(DEFAULT_SCHEMA.relations)
    golds: Dict[str, Dict[str, bool]] = {r: {} for r in relations}
    for record in oracle_adjudications(truth, sorted(truth.distributions), relations):
        if record.resolution != Resolution.UNRESOLVED:
            golds[record.relation][record.sentence_id] = (
                record.resolution == Resolution.POSITIVE
            )
    curve = quality_by_worker_count(
        judgments, DEFAULT_SCHEMA, golds, {r: 0.5 for r in relations}, k_max=15
    )
    assert [p.k for p in curve.points] == list(range(1, 16))
    assert curve.value_at(10) == pytest.approx(curve.value_at(15), abs=0.02)
