import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import ruamel.yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .adapters import AdapterMapping
from .exceptions import ConfigError
from .host import resolve_threads
from .simulator import SimConfig
from .worker_quality import DEFAULT_SPAM_THRESHOLD

CONFIG_ENV_VAR = "CROWDLABEL_CONFIG"
DEFAULT_CONFIG_FILE = Path("crowdlabel.yml")

PATH_FIELDS = [
    "schema_path",
    "sentences_path",
    "judgments_path",
    "expert_path",
    "adjudications_path",
    "output_dir",
]


def _default_grid() -> List[float]:
    return [round(0.05 * i, 2) for i in range(1, 20)]


class RunConfig(BaseModel):
    schema_path: Optional[Path] = None
    sentences_path: Optional[Path] = None
    judgments_path: Optional[Path] = None
    expert_path: Optional[Path] = None
    adjudications_path: Optional[Path] = None
    output_dir: Path = Path("out")
    relations: List[str] = Field(default_factory=lambda: ["cause", "treat"])
    spam_threshold: float = Field(default=DEFAULT_SPAM_THRESHOLD, ge=0, le=1)
    spam_max_rounds: int = Field(default=10, ge=1)
    spam_min_judgments: int = Field(default=3, ge=1)
    filter_spam: bool = True
    worker_floor: int = Field(default=10, ge=0)
    allow_thin: bool = False
    threshold: float = Field(default=0.5, ge=0, le=1)
    threshold_grid: List[float] = Field(default_factory=_default_grid)
    folds: int = Field(default=5, ge=1)
    split_seed: int = 0
    single_seed: int = 0
    stratified_splits: bool = False
    mcnemar_correction: bool = True
    stability_k_max: Optional[int] = Field(default=None, ge=2)
    order_seeds: List[int] = Field(default_factory=list)
    threads: Optional[int] = Field(default=None, ge=1)
    simulation: SimConfig = Field(default_factory=SimConfig)
    adapter: AdapterMapping = Field(default_factory=AdapterMapping)

    model_config = ConfigDict(extra="forbid", frozen=False)

    @field_validator("threshold_grid")
    @classmethod
    def _check_grid(cls, grid: List[float]) -> List[float]:
        if not grid:
            raise ValueError("threshold_grid must not be empty")
        for t in grid:
            if not 0 <= t <= 1:
                raise ValueError(f"threshold_grid value {t} outside [0, 1]")
        return sorted(set(grid))

    @property
    def thread_count(self) -> int:
        return resolve_threads(self.threads)

    def resolve_paths(self, base: Path) -> "RunConfig":
        """Make relative paths relative to the configuration document's directory."""
        for name in PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not value.is_absolute():
                setattr(self, name, base / value)
        return self


def _load_config_file(config_file_path: Path) -> Dict[str, Any]:
    """
    Read the configuration file into a dictionary. A missing file means defaults.
    """
    if not config_file_path.is_file():
        empty_config: Dict[str, Any] = dict()
        return empty_config

    yaml = ruamel.yaml.YAML(typ="safe")
    with open(config_file_path, "r") as f:
        config: Optional[Dict[str, Any]] = yaml.load(f)

    return config or {}


def config_path(path: Optional[Path] = None) -> Path:
    if path is not None:
        return Path(path)
    from_env = os.environ.get(CONFIG_ENV_VAR)
    if from_env:
        return Path(from_env).expanduser()
    return DEFAULT_CONFIG_FILE


def load_config(path: Optional[Path] = None) -> RunConfig:
    """
    Read the configuration file and parse it into a RunConfig. The file is taken
    from the argument, then $CROWDLABEL_CONFIG, then ./crowdlabel.yml.
    """
    config_file = config_path(path)
    if path is not None and not config_file.is_file():
        raise ConfigError(f"Config file {config_file} does not exist")
    try:
        config_dict = _load_config_file(config_file)
    except (IOError, OSError, ruamel.yaml.YAMLError):
        raise ConfigError(f"Failed to parse config file {config_file}")
    if not isinstance(config_dict, dict):
        raise ConfigError(f"Failed to parse config file {config_file}")

    try:
        run_config = RunConfig.model_validate(config_dict)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigError(
            f"Invalid config file at {config_file}: {where}: {first['msg']}"
        )

    return run_config.resolve_paths(config_file.parent)
