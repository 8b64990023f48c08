"""Run logs: line-delimited records, resumable and byte-reproducible.

A run directory holds:

    config.txt   full resolved configuration (key = value lines)
    log.jsonl    one JSON record per line; no timestamps
    times.jsonl  wall-clock sidecar, one entry per generation

The first log record is a header carrying the schema version and a config
hash. Readers reject logs whose major schema version they do not know.
Keeping timestamps out of log.jsonl makes two runs with the same seed and
config byte-identical.
"""

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evolution
from .config import ConfigError, ExperimentConfig, config_hash, echo_text
from .evolution import SCHEMA_VERSION, Individual
from .genotype import Genotype
from .morphology import develop_body


class LogError(ValueError):
    """Missing, truncated or incompatible run data."""


def _dumps(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), ensure_ascii=False)


class RunWriter:
    """Appends records to log.jsonl and wall times to times.jsonl."""

    def __init__(self, run_dir, append: bool = False):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        mode = "a" if append else "w"
        self._log = open(self.run_dir / "log.jsonl", mode, encoding="utf-8")
        self._times = open(self.run_dir / "times.jsonl", mode, encoding="utf-8")
        self._last_generation = None

    def write(self, record: dict):
        self._log.write(_dumps(record) + "\n")
        self._log.flush()
        gen = record.get("generation")
        if record.get("type") == "population" and gen is not None:
            self._note_time(gen)

    def _note_time(self, generation: int):
        self._times.write(_dumps({"generation": generation, "wall": time.time()}) + "\n")
        self._times.flush()

    def close(self):
        self._log.close()
        self._times.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_config(run_dir, cfg: ExperimentConfig):
    Path(run_dir).mkdir(parents=True, exist_ok=True)
    (Path(run_dir) / "config.txt").write_text(echo_text(cfg), encoding="utf-8")


@dataclass
class RunLog:
    """Parsed contents of one run's log."""

    header: dict
    individuals: dict
    populations: list
    env_changes: list

    @property
    def last_complete_generation(self) -> int | None:
        if not self.populations:
            return None
        return self.populations[-1]["generation"]

    def population_record(self, generation: int) -> dict:
        for rec in self.populations:
            if rec["generation"] == generation:
                return rec
        raise LogError(f"no population record for generation {generation}")


def read_log(run_dir) -> RunLog:
    """Parse log.jsonl, tolerating a truncated final line."""
    path = Path(run_dir) / "log.jsonl"
    if not path.exists():
        raise LogError(f"no log.jsonl in {run_dir}")
    header = None
    individuals: dict = {}
    populations: list = []
    env_changes: list = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError:
                if line.endswith("\n"):
                    raise LogError(f"{path}: line {lineno} is not valid JSON")
                break  # trailing partial line from an interrupted run
            kind = record.get("type")
            if kind == "header":
                _check_schema(record, path)
                header = record
            elif kind == "individual":
                individuals[record["id"]] = record
            elif kind == "population":
                populations.append(record)
            elif kind == "env_change":
                env_changes.append(record)
            else:
                raise LogError(f"{path}: line {lineno} has unknown record type {kind!r}")
    if header is None:
        raise LogError(f"{path}: missing header record")
    return RunLog(header, individuals, populations, env_changes)


def _check_schema(header: dict, path):
    version = str(header.get("schema", ""))
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise LogError(
            f"{path}: log schema {version!r} is not readable by this "
            f"version (expected major {SCHEMA_VERSION.split('.', 1)[0]})"
        )


@dataclass
class ResumeState:
    population: list
    next_generation: int


def _individual_from_record(record: dict, fitness: float | None = None) -> Individual:
    genotype = Genotype.from_obj(record["genotype"])
    tree = develop_body(genotype.body)
    return Individual(
        id=record["id"],
        generation=record["generation"],
        parents=tuple(record["parents"]),
        genotype=genotype,
        tree=tree,
        learned=np.array(record["learned"], dtype=float),
        fitness_before=record["fitness_before"],
        fitness_after=record["fitness_after"],
        fitness=record["fitness_after"] if fitness is None else fitness,
        curve=[(i, r) for i, r in record["curve"]],
        terrain=record["terrain"],
    )


def load_resume_state(run_dir, cfg: ExperimentConfig) -> ResumeState | None:
    """Rebuild the population of the last complete generation.

    Returns None when the log already covers the configured generation
    count. Raises LogError when the stored config hash does not match.
    """
    log = read_log(run_dir)
    if log.header.get("config") != config_hash(cfg):
        raise LogError(
            f"{run_dir}: existing log was produced with a different configuration"
        )
    last = log.last_complete_generation
    if last is None:
        raise LogError(f"{run_dir}: log holds no complete generation; delete it to restart")
    pop_rec = log.populations[-1]
    population = []
    for mid, fit in zip(pop_rec["members"], pop_rec["fitness"]):
        if mid not in log.individuals:
            raise LogError(f"{run_dir}: population references unknown individual {mid}")
        ind = _individual_from_record(log.individuals[mid], fitness=fit)
        ind.terrain = pop_rec["terrain"]
        population.append(ind)
    if last >= cfg.generations:
        return None
    return ResumeState(population, last + 1)


def truncate_after_last_population(run_dir) -> None:
    """Drop any records after the last complete generation.

    An interrupted run can leave individual records of an unfinished
    generation; resuming regenerates them, so the valid prefix is kept
    and the rest rewritten away.
    """
    path = Path(run_dir) / "log.jsonl"
    lines = []
    last_population = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.endswith("\n"):
                break
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                break
            lines.append(line)
            if record.get("type") == "population":
                last_population = len(lines)
    if last_population is None:
        raise LogError(f"{path}: log holds no complete generation; delete it to restart")
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(lines[:last_population])


def load_run_config(run_dir) -> ExperimentConfig:
    path = Path(run_dir) / "config.txt"
    if not path.exists():
        raise LogError(f"no config.txt in {run_dir}")
    from .config import parse_config_text

    try:
        overrides = parse_config_text(path.read_text(encoding="utf-8"))
    except ConfigError as exc:
        raise LogError(f"{path}: {exc}") from None
    return ExperimentConfig(**overrides)


def replay_individual(run_dir, individual_id: int) -> dict:
    """Re-simulate one logged individual with its learned controller.

    Returns the logged and replayed fitness plus the trajectory, so the
    caller can check for drift.
    """
    from .controller import build_network
    from .environment import fitness, flat_terrain, rugged_terrain
    from .simbackend import evaluate

    cfg = load_run_config(run_dir)
    log = read_log(run_dir)
    if individual_id not in log.individuals:
        raise LogError(f"{run_dir}: no individual {individual_id} in the log")
    rec = log.individuals[individual_id]
    genotype = Genotype.from_obj(rec["genotype"])
    tree = develop_body(genotype.body)
    network = build_network(tree, genotype.brain)
    network.set_weights(np.array(rec["learned"], dtype=float))
    if rec["terrain"] == "flat":
        terrain = flat_terrain()
    else:
        terrain = rugged_terrain(cfg.rugged_amplitude, cfg.rugged_wavelength,
                                 cfg.rugged_octaves, cfg.terrain_seed)
    task = cfg.task_spec()
    trajectory = evaluate(tree, network, terrain, task, cfg.surrogate_params())
    replayed = fitness(trajectory, task)
    return {
        "logged": rec["fitness_after"],
        "replayed": replayed,
        "trajectory": trajectory,
    }


def run_and_log(cfg: ExperimentConfig, run_dir, resume: bool = False):
    """Drive evolution.run with file-backed logging in run_dir."""
    run_dir = Path(run_dir)
    log_path = run_dir / "log.jsonl"
    state = None
    if resume and log_path.exists():
        truncate_after_last_population(run_dir)
        state = load_resume_state(run_dir, cfg)
        if state is None:
            return None  # already complete
    elif log_path.exists():
        raise LogError(f"{run_dir} already holds a log; pass resume to continue it")
    write_config(run_dir, cfg)
    with RunWriter(run_dir, append=state is not None) as writer:
        return evolution.run(cfg, writer, resume=state)
