import dataclasses
import json
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_serializer

Array = npt.NDArray[Any]


class Record(BaseModel):
    """Base class for immutable crowdlabel records."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    @staticmethod
    def _name_to_display_name(name: str) -> str:
        return name.replace("_", " ").title()

    @property
    def pretty(self) -> Dict[str, Tuple[str, str]]:
        name_to_pretty = dict()
        for name in type(self).model_fields:
            val = getattr(self, name)
            if val is None:
                pretty_val = "-"
            elif isinstance(val, float):
                pretty_val = f"{val:.4f}"
            elif isinstance(val, (set, frozenset)):
                pretty_val = ", ".join(sorted(val))
            elif isinstance(val, Enum):
                pretty_val = str(val.value).title()
            else:
                pretty_val = str(val)
            name_to_pretty[name] = (self._name_to_display_name(name), pretty_val)

        return name_to_pretty


class Resolution(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNRESOLVED = "unresolved"


class Provenance(str, Enum):
    CROWD = "crowd"
    BASELINE = "baseline"
    EXPERT = "expert"
    SINGLE = "single"


class TermMention(Record):
    surface: str
    start: int
    end: int
    category: Optional[str] = None

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    def overlaps(self, other: "TermMention") -> bool:
        return self.start < other.end and other.start < self.end


class Sentence(Record):
    id: str
    text: str
    term1: TermMention
    term2: TermMention
    seed_relation: str
    source_tag: Optional[str] = None


class Judgment(Record):
    worker_id: str
    sentence_id: str
    selections: FrozenSet[str]
    submission_index: int = Field(ge=0)

    @field_serializer("selections")
    def _sorted_selections(self, selections: FrozenSet[str]) -> List[str]:
        return sorted(selections)


class ExpertLabel(Record):
    sentence_id: str
    relation: str
    decision: bool


class AdjudicationRecord(Record):
    sentence_id: str
    relation: str
    resolution: Resolution


class PredictionRecord(Record):
    sentence_id: str
    relation: str
    score: float

    @property
    def positive(self) -> bool:
        # real-valued confidences and 0/1 decisions both binarize at 0
        return self.score > 0


class TrainingInstance(Record):
    sentence_id: str
    relation: str
    weight: float
    provenance: Provenance

    @property
    def positive(self) -> bool:
        return self.weight >= 0


class CrowdLabelEncoder(json.JSONEncoder):
    def default(self, o: Any) -> Any:
        if isinstance(o, BaseModel):
            return o.model_dump(mode="json")
        if dataclasses.is_dataclass(o) and not isinstance(o, type):
            return {f.name: getattr(o, f.name) for f in dataclasses.fields(o)}
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, (set, frozenset)):
            return sorted(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if hasattr(o, "_asdict"):
            return o._asdict()
        return str(o)


def dumps(content: Any) -> str:
    """Deterministic JSON rendering shared by every report writer."""
    return json.dumps(content, cls=CrowdLabelEncoder, sort_keys=True, indent=2)
