import json
import math
import runpy
import sys
from pathlib import Path
from typing import List

import pytest
from click.testing import CliRunner, Result

from crowdlabel.cli import cli
from crowdlabel.exceptions import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_OK
from crowdlabel.ingest import parse_adjudication_queue, parse_adjudications

SIMULATION_CONFIG = """\
output_dir: sim
relations: [cause, treat]
worker_floor: 10
simulation:
  n_sentences: 30
  n_workers: 15
  workers_per_sentence: 12
  seed: 7
"""


def run(*args: str) -> Result:
    return CliRunner().invoke(cli, list(args), catch_exceptions=False)


def config_of(root: Path) -> str:
    return str(root / "crowdlabel.yml")


@pytest.fixture
def simulated(tmp_path: Path) -> Path:
    (tmp_path / "simulate.yml").write_text(SIMULATION_CONFIG, encoding="utf-8")
    result = run("simulate", "-q", "-c", str(tmp_path / "simulate.yml"))
    assert result.exit_code == EXIT_OK
    return tmp_path / "sim"


def test_simulate_writes_runnable_corpus(simulated: Path) -> None:
    for name in (
        "sentences.csv",
        "judgments.csv",
        "expert.csv",
        "adjudications.csv",
        "latent.json",
        "crowdlabel.yml",
    ):
        assert (simulated / name).is_file()
    latent = json.loads((simulated / "latent.json").read_text())
    assert latent["simulation"]["seed"] == 7
    assert latent["simulation"]["seed_relations"] == ["cause", "treat"]


def test_report_runs_every_stage(simulated: Path) -> None:
    result = run("report", "-q", "-c", config_of(simulated))
    assert result.exit_code == EXIT_OK
    summary = json.loads((simulated / "out" / "summary.json").read_text())
    assert set(summary["stages"]) == {
        "validate",
        "filter-workers",
        "aggregate",
        "score",
        "label",
        "agreement-sweep",
        "build-gold",
        "splits",
        "weighted-eval",
        "stability",
    }
    for name, digest in summary["artifacts"].items():
        assert (simulated / "out" / name).is_file()
        assert len(digest) == 64
    assert "training_expert_cause.csv" in summary["stages"]["label"]


def test_artifacts_do_not_depend_on_threads(simulated: Path) -> None:
    config = config_of(simulated)
    one = run("report", "-q", "-c", config, "-o", str(simulated / "one"), "--threads", "1")
    four = run("report", "-q", "-c", config, "-o", str(simulated / "four"), "--threads", "4")
    assert one.exit_code == four.exit_code == EXIT_OK
    summary_one = (simulated / "one" / "summary.json").read_bytes()
    summary_four = (simulated / "four" / "summary.json").read_bytes()
    assert summary_one == summary_four


def test_same_seed_same_corpus(tmp_path: Path) -> None:
    (tmp_path / "simulate.yml").write_text(SIMULATION_CONFIG, encoding="utf-8")
    config = str(tmp_path / "simulate.yml")
    run("simulate", "-q", "-c", config, "-o", str(tmp_path / "a"))
    run("simulate", "-q", "-c", config, "-o", str(tmp_path / "b"), "--threads", "3")
    run("simulate", "-q", "-c", config, "-o", str(tmp_path / "c"), "--seed", "8")
    judgments = [(tmp_path / d / "judgments.csv").read_bytes() for d in "abc"]
    assert judgments[0] == judgments[1]
    assert judgments[0] != judgments[2]


def test_label_crowd_weights(pair_dir: Path) -> None:
    result = run(
        "label", "-q", "--provenance", "crowd", "-t", "0.5", "-r", "cause",
        "-c", config_of(pair_dir),
    )
    assert result.exit_code == EXIT_OK
    content = (pair_dir / "out" / "training_crowd_cause.csv").read_bytes()
    lines = content.decode("utf-8").split("\r\n")
    assert lines[0] == "sentence_id,relation,weight"
    s1 = lines[1].split(",")
    assert s1[:2] == ["s1", "cause"]
    assert float(s1[2]) == pytest.approx(10 / math.sqrt(107))
    assert lines[2] == "s2,cause,-1.0"
    assert not (pair_dir / "out" / "training_crowd_diagnose.csv").exists()


def test_label_expert_needs_labels(pair_dir: Path) -> None:
    config = pair_dir / "crowdlabel.yml"
    config.write_text(
        config.read_text().replace("expert_path: expert.csv\n", ""), encoding="utf-8"
    )
    result = run("label", "-q", "--provenance", "expert", "-c", str(config))
    assert result.exit_code == EXIT_DATA_ERROR
    error = json.loads((pair_dir / "out" / "error.json").read_text())
    assert error["kind"] == "DataError"


def write_predictions(path: Path, rows: List[str]) -> str:
    path.write_text("sentence_id,relation,score\n" + "".join(rows), encoding="utf-8")
    return str(path)


def test_evaluate_reports_missing_predictions(pair_dir: Path) -> None:
    partial = write_predictions(
        pair_dir / "partial.csv",
        ["s1,cause,0.9\n", "s1,diagnose,-0.2\n", "s2,diagnose,0.7\n"],
    )
    result = run("evaluate", "-q", partial, "-c", config_of(pair_dir))
    assert result.exit_code == EXIT_DATA_ERROR
    error_path = pair_dir / "out" / "error.json"
    error = json.loads(error_path.read_text())
    assert error["kind"] == "CoverageError"
    assert error["details"]["missing_sentence_ids"] == ["s2"]

    complete = write_predictions(
        pair_dir / "complete.csv",
        ["s1,cause,0.9\n", "s2,cause,-1\n", "s1,diagnose,-0.2\n", "s2,diagnose,0.7\n"],
    )
    result = run("evaluate", "-q", complete, "-c", config_of(pair_dir))
    assert result.exit_code == EXIT_OK
    assert not error_path.exists()
    report = json.loads((pair_dir / "out" / "report_cause.json").read_text())
    assert report["gold_size"] == 2
    assert report["pooled"]["f1"] == 1.0


def test_evaluate_several_files_need_sizes(pair_dir: Path) -> None:
    first = write_predictions(pair_dir / "a.csv", ["s1,cause,1\n"])
    second = write_predictions(pair_dir / "b.csv", ["s1,cause,1\n"])
    result = run("evaluate", "-q", first, second, "-c", config_of(pair_dir))
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_mcnemar(pair_dir: Path) -> None:
    right = write_predictions(
        pair_dir / "right.csv",
        ["s1,cause,1\n", "s2,cause,0\n", "s1,diagnose,0\n", "s2,diagnose,1\n"],
    )
    wrong = write_predictions(
        pair_dir / "wrong.csv",
        ["s1,cause,0\n", "s2,cause,1\n", "s1,diagnose,1\n", "s2,diagnose,0\n"],
    )
    result = run("mcnemar", "-q", right, wrong, "--no-correction", "-c", config_of(pair_dir))
    assert result.exit_code == EXIT_OK
    assert (pair_dir / "out" / "mcnemar.json").is_file()

    result = run("mcnemar", "-q", right, wrong, "--exact", "-c", config_of(pair_dir))
    assert result.exit_code == EXIT_OK
    document = json.loads((pair_dir / "out" / "mcnemar.json").read_text())
    cause = document["tests"]["cause"]
    assert (cause["b"], cause["c"], cause["exact"]) == (2, 0, True)
    assert cause["chi_square"] is None
    assert cause["p_value"] == pytest.approx(0.5)


def test_adjudication_round_trip(pair_dir: Path) -> None:
    config = config_of(pair_dir)
    out = pair_dir / "out"
    result = run("build-gold", "-q", "-t", "0.99", "-c", config)
    assert result.exit_code == EXIT_DATA_ERROR
    error = json.loads((out / "error.json").read_text())
    assert error["kind"] == "AdjudicationRequired"
    assert error["details"]["pending_sentence_ids"] == ["s1/cause", "s2/diagnose"]

    result = run("adjudicate-export", "-q", "-t", "0.99", "-c", config)
    assert result.exit_code == EXIT_OK
    queue = out / "adjudication_queue.csv"
    entries = parse_adjudication_queue(queue.read_bytes())
    assert [(e.sentence_id, e.relation) for e in entries] == [
        ("s1", "cause"),
        ("s2", "diagnose"),
    ]

    queue.write_bytes(queue.read_bytes().replace(b",1,\r\n", b",1,positive\r\n", 1))
    result = run("adjudicate-import", "-q", str(queue), "-c", config)
    assert result.exit_code == EXIT_OK
    records = parse_adjudications((out / "adjudications.csv").read_bytes())
    assert [(r.sentence_id, r.relation) for r in records] == [("s1", "cause")]

    # s2/diagnose is still open
    assert run("build-gold", "-q", "-t", "0.99", "-c", config).exit_code == EXIT_DATA_ERROR


def test_build_gold_at_best_threshold(pair_dir: Path) -> None:
    result = run("build-gold", "-q", "-c", config_of(pair_dir))
    assert result.exit_code == EXIT_OK
    gold = (pair_dir / "out" / "gold_diagnose.csv").read_bytes()
    assert gold == b"sentence_id,label\r\ns1,0\r\ns2,1\r\n"
    document = json.loads((pair_dir / "out" / "gold_cause.json").read_text())
    assert document["threshold"] == 0.05


def test_missing_config_file(tmp_path: Path) -> None:
    result = run("validate", "-q", "-c", str(tmp_path / "nowhere.yml"))
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_invalid_config_value(tmp_path: Path) -> None:
    (tmp_path / "crowdlabel.yml").write_text("spam_threshold: 3\n", encoding="utf-8")
    result = run("validate", "-q", "-c", config_of(tmp_path))
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_unknown_target_relation(pair_dir: Path) -> None:
    result = run(
        "label", "-q", "--provenance", "crowd", "-r", "heal", "-c", config_of(pair_dir)
    )
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_json_and_plain_are_exclusive(pair_dir: Path) -> None:
    result = run("validate", "-j", "-p", "-c", config_of(pair_dir))
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_validate_writes_report(pair_dir: Path) -> None:
    result = run("validate", "-q", "-c", config_of(pair_dir))
    assert result.exit_code == EXIT_OK
    report = json.loads((pair_dir / "out" / "validation.json").read_text())
    assert report["violations"] == []


@pytest.fixture
def thin_dir(pair_dir: Path) -> Path:
    """The worked example with one more worker on s2 and a floor only s2 reaches."""
    with (pair_dir / "judgments.csv").open("ab") as f:
        f.write(b"w99,s2,other,15\r\n")
    config = pair_dir / "crowdlabel.yml"
    config.write_text(
        config.read_text().replace("worker_floor: 10\n", "worker_floor: 16\n"),
        encoding="utf-8",
    )
    return pair_dir


def scored_sentences(root: Path) -> List[str]:
    lines = (root / "out" / "scores.csv").read_bytes().decode("utf-8").split("\r\n")
    return sorted({line.split(",")[0] for line in lines[1:] if line})


def test_thin_sentences_excluded_by_default(thin_dir: Path) -> None:
    result = run("score", "-q", "-c", config_of(thin_dir))
    assert result.exit_code == EXIT_OK
    assert scored_sentences(thin_dir) == ["s2"]

    result = run("score", "-q", "--allow-thin", "-c", config_of(thin_dir))
    assert result.exit_code == EXIT_OK
    assert scored_sentences(thin_dir) == ["s1", "s2"]


def test_allow_thin_reaches_training_sets(thin_dir: Path) -> None:
    config = config_of(thin_dir)
    training = thin_dir / "out" / "training_crowd_cause.csv"
    args = ("label", "-q", "--provenance", "crowd", "-t", "0.5", "-r", "cause")

    assert run(*args, "-c", config).exit_code == EXIT_OK
    ids = [line.split(",")[0] for line in training.read_text().splitlines()[1:]]
    assert ids == ["s2"]

    assert run(*args, "--allow-thin", "-c", config).exit_code == EXIT_OK
    ids = [line.split(",")[0] for line in training.read_text().splitlines()[1:]]
    assert ids == ["s1", "s2"]


def test_binary_entry_script(
    monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    script = Path(__file__).parents[1] / "installer" / "crowdlabel_pyinstaller_wrapper.py"
    monkeypatch.setattr(sys, "argv", ["/tmp/_MEI1234/crowdlabel", "--help"])
    with pytest.raises(SystemExit) as exit_info:
        runpy.run_path(str(script), run_name="__main__")
    assert exit_info.value.code == EXIT_OK
    assert capsys.readouterr().out.startswith("Usage: crowdlabel ")
