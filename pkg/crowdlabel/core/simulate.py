import io
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional

import ruamel.yaml

from ..base_logger import make_logger
from ..config import DEFAULT_CONFIG_FILE, RunConfig, load_config
from ..display import Displayer, DisplayLevel, make_table
from ..exceptions import EXIT_OK
from ..ingest import (
    load_schema,
    serialize_adjudications,
    serialize_expert_labels,
    serialize_judgments,
    serialize_sentences,
    write_bytes,
    write_json,
)
from ..pipeline import check_relations, output_path
from ..simulator import LatentTruth, generate, oracle_adjudications


def display_simulate(
    seed: Optional[int],
    config: RunConfig,
    displayer: Displayer,
    logger: logging.Logger,
) -> int:
    result = simulate(seed, config, logger)

    table = make_table(f"Simulated corpus (seed {result.seed})", ["Artifact"])
    for path in result.paths:
        table.add_row(str(path))
    table.caption = f"{len(result.truth.spammers)} spammer(s) planted"

    displayer.print(
        pretty_content=table,
        plain_content="\n".join(str(p) for p in result.paths),
        json_content={
            "result": "success",
            "seed": result.seed,
            "spammers": result.truth.spammers,
            "paths": result.paths,
        },
        stream=sys.stdout,
        level=DisplayLevel.NORMAL,
    )
    return EXIT_OK


class SimulateResult(NamedTuple):
    seed: int
    truth: LatentTruth
    paths: List[Path]


def _run_config_document(config: RunConfig) -> str:
    document: Dict[str, Any] = {
        "sentences_path": "sentences.csv",
        "judgments_path": "judgments.csv",
        "expert_path": "expert.csv",
        "adjudications_path": "adjudications.csv",
        "output_dir": "out",
        "relations": list(config.relations),
        "worker_floor": config.worker_floor,
    }
    if config.schema_path is not None:
        document["schema_path"] = str(Path(config.schema_path).resolve())
    yaml = ruamel.yaml.YAML(typ="safe", pure=True)
    yaml.default_flow_style = False
    buf = io.StringIO()
    yaml.dump(document, buf)
    return buf.getvalue()


def simulate(
    seed: Optional[int] = None,
    config: Optional[RunConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> SimulateResult:
    """
    Draw a synthetic corpus with planted spammers and ambiguity, a simulated
    expert and oracle adjudications, plus a configuration file that runs the
    whole pipeline on it.
    """
    if not config:
        config = load_config()
    if not logger:
        logger = make_logger()

    schema = load_schema(config.schema_path)
    check_relations(config, schema)
    sim = config.simulation
    if seed is not None:
        sim = sim.model_copy(update={"seed": seed})
    if sim.seed_relations is None:
        sim = sim.model_copy(update={"seed_relations": list(config.relations)})
    bundle, truth = generate(sim, schema, config.thread_count)
    adjudications = oracle_adjudications(
        truth, list(bundle.sentences), list(config.relations)
    )
    logger.info(
        f"Simulated {len(bundle.sentences)} sentence(s) and {len(bundle.judgments)}"
        f" judgment(s) with seed {sim.seed}"
    )

    paths = [
        write_bytes(
            output_path(config, "sentences.csv"),
            serialize_sentences(bundle.sentences.values()),
        ),
        write_bytes(
            output_path(config, "judgments.csv"), serialize_judgments(bundle.judgments)
        ),
        write_bytes(
            output_path(config, "expert.csv"),
            serialize_expert_labels(bundle.expert_labels or ()),
        ),
        write_bytes(
            output_path(config, "adjudications.csv"),
            serialize_adjudications(adjudications),
        ),
        write_json(
            output_path(config, "latent.json"),
            {"simulation": sim, "truth": truth},
        ),
        write_bytes(
            output_path(config, DEFAULT_CONFIG_FILE.name),
            _run_config_document(config).encode("utf-8"),
        ),
    ]
    return SimulateResult(seed=sim.seed, truth=truth, paths=paths)
