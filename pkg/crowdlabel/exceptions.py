from typing import Any, Dict, List, Optional

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_CONFIG_ERROR = 2


class CrowdLabelError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code

    @property
    def details(self) -> Dict[str, Any]:
        return {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "result": "error",
            "kind": self.__class__.__name__,
            "message": str(self),
            "details": self.details,
        }


class DataError(CrowdLabelError):
    def __init__(self, message: str):
        super().__init__(message, exit_code=EXIT_DATA_ERROR)


class ConfigError(CrowdLabelError):
    def __init__(self, message: str):
        super().__init__(message, exit_code=EXIT_CONFIG_ERROR)


class IngestError(DataError):
    def __init__(self, message: str, kind: str, line: Optional[int] = None):
        where = f"{kind}" if line is None else f"{kind}, line {line}"
        super().__init__(f"{where}: {message}")
        self.kind = kind
        self.line = line

    @property
    def details(self) -> Dict[str, Any]:
        return {"file_kind": self.kind, "line": self.line}


class DimensionMismatchError(DataError):
    pass


class EmptySentenceError(DataError):
    pass


class UnknownWorkerError(DataError):
    pass


class CoverageError(DataError):
    def __init__(self, message: str, missing: List[str]):
        shown = ", ".join(missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        super().__init__(f"{message}: {shown}{more}")
        self.missing = missing

    @property
    def details(self) -> Dict[str, Any]:
        return {"missing_sentence_ids": self.missing}


class AdjudicationRequired(DataError):
    def __init__(self, relation: str, pending: List[str], queue_path: Optional[str]):
        where = f", queue written to {queue_path}" if queue_path else ""
        super().__init__(
            f"{len(pending)} crowd/expert disagreement(s) for '{relation}' need"
            f" adjudication{where}"
        )
        self.relation = relation
        self.pending = pending
        self.queue_path = queue_path

    @property
    def details(self) -> Dict[str, Any]:
        return {
            "relation": self.relation,
            "pending_sentence_ids": self.pending,
            "queue_path": self.queue_path,
        }
