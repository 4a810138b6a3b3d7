from pathlib import Path
from typing import Dict, List

import pytest

from crowdlabel.ingest import (
    serialize_expert_labels,
    serialize_judgments,
    serialize_sentences,
    write_bytes,
)
from crowdlabel.models import ExpertLabel, Judgment, Sentence, TermMention
from crowdlabel.schema import DEFAULT_SCHEMA, RelationSchema

# worker votes per option of the two sentences of the worked example
SENTENCE_1_COUNTS = {
    "diagnose": 1,
    "cause": 10,
    "location": 1,
    "symptom": 2,
    "associated_with": 1,
}
SENTENCE_2_COUNTS = {
    "treat": 3,
    "prevent": 1,
    "diagnose": 7,
    "associated_with": 3,
    "other": 1,
}


def make_sentence(sid: str, seed_relation: str, text: str = "") -> Sentence:
    text = text or f"ANTIBIOTICS may relate to INFECTION in case {sid}."
    start2 = text.index("INFECTION")
    return Sentence(
        id=sid,
        text=text,
        term1=TermMention(surface="ANTIBIOTICS", start=0, end=len("ANTIBIOTICS")),
        term2=TermMention(surface="INFECTION", start=start2, end=start2 + 9),
        seed_relation=seed_relation,
    )


def judgments_from_counts(
    sentence_id: str, counts: Dict[str, int], schema: RelationSchema = DEFAULT_SCHEMA
) -> List[Judgment]:
    """One single-selection judgment per vote, workers w01, w02, ... in option order."""
    judgments = []
    for option in schema.options:
        for _ in range(counts.get(option, 0)):
            n = len(judgments) + 1
            judgments.append(
                Judgment(
                    worker_id=f"w{n:02d}",
                    sentence_id=sentence_id,
                    selections=frozenset({option}),
                    submission_index=n - 1,
                )
            )
    return judgments


@pytest.fixture
def schema() -> RelationSchema:
    return DEFAULT_SCHEMA


@pytest.fixture
def pair_sentences() -> List[Sentence]:
    return [make_sentence("s1", "cause"), make_sentence("s2", "diagnose")]


@pytest.fixture
def pair_judgments() -> List[Judgment]:
    return judgments_from_counts("s1", SENTENCE_1_COUNTS) + judgments_from_counts(
        "s2", SENTENCE_2_COUNTS
    )


@pytest.fixture
def pair_expert() -> List[ExpertLabel]:
    return [
        ExpertLabel(sentence_id="s1", relation="cause", decision=True),
        ExpertLabel(sentence_id="s2", relation="diagnose", decision=True),
    ]


@pytest.fixture
def pair_dir(
    tmp_path: Path,
    pair_sentences: List[Sentence],
    pair_judgments: List[Judgment],
    pair_expert: List[ExpertLabel],
) -> Path:
    """The worked example as files, with a config that keeps both sentences."""
    write_bytes(tmp_path / "sentences.csv", serialize_sentences(pair_sentences))
    write_bytes(tmp_path / "judgments.csv", serialize_judgments(pair_judgments))
    write_bytes(tmp_path / "expert.csv", serialize_expert_labels(pair_expert))
    (tmp_path / "crowdlabel.yml").write_text(
        "sentences_path: sentences.csv\n"
        "judgments_path: judgments.csv\n"
        "expert_path: expert.csv\n"
        "output_dir: out\n"
        "relations: [cause, diagnose]\n"
        "filter_spam: false\n"
        "worker_floor: 10\n"
        "threads: 1\n",
        encoding="utf-8",
    )
    return tmp_path
