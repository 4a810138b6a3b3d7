from pathlib import Path

import pytest

from crowdlabel.config import CONFIG_ENV_VAR, RunConfig, load_config
from crowdlabel.exceptions import ConfigError


def test_defaults() -> None:
    config = RunConfig()
    assert config.threshold_grid[0] == 0.05
    assert config.threshold_grid[-1] == 0.95
    assert len(config.threshold_grid) == 19
    assert config.folds == 5
    assert config.thread_count >= 1
    assert config.spam_threshold == 0.28
    assert not config.allow_thin


def test_paths_are_relative_to_the_file(tmp_path: Path) -> None:
    (tmp_path / "run.yml").write_text(
        "sentences_path: data/sentences.csv\noutput_dir: /tmp/elsewhere\n",
        encoding="utf-8",
    )
    config = load_config(tmp_path / "run.yml")
    assert config.sentences_path == tmp_path / "data" / "sentences.csv"
    assert config.output_dir == Path("/tmp/elsewhere")


def test_environment_variable(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    (tmp_path / "env.yml").write_text("relations: [treat]\n", encoding="utf-8")
    monkeypatch.setenv(CONFIG_ENV_VAR, str(tmp_path / "env.yml"))
    assert load_config().relations == ["treat"]


def test_missing_default_file_means_defaults(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    monkeypatch.chdir(tmp_path)
    assert load_config().relations == ["cause", "treat"]


@pytest.mark.parametrize(
    "document",
    [
        "threshold_grid: []\n",
        "threshold_grid: [0.2, 1.4]\n",
        "folds: 0\n",
        "unknown_key: 1\n",
        "simulation:\n  n_workers: 2\n  workers_per_sentence: 3\n",
        "- not a mapping\n",
    ],
)
def test_invalid_documents(tmp_path: Path, document: str) -> None:
    (tmp_path / "bad.yml").write_text(document, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yml")


def test_grid_is_sorted_and_deduplicated(tmp_path: Path) -> None:
    (tmp_path / "grid.yml").write_text("threshold_grid: [0.5, 0.1, 0.5]\n", encoding="utf-8")
    assert load_config(tmp_path / "grid.yml").threshold_grid == [0.1, 0.5]
