"""File-backed run logs: round trips, corruption handling, resume, replay."""

import json

import numpy as np
import pytest

from bodybrain.runstore import (
    LogError,
    RunWriter,
    load_resume_state,
    load_run_config,
    read_log,
    replay_individual,
    run_and_log,
    truncate_after_last_population,
    write_config,
)
from conftest import tiny_config

HEADER = {"type": "header", "schema": "1.0", "config": "x" * 64}


def _write_lines(run_dir, records):
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "log.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def test_writer_reader_round_trip(tmp_path):
    records = [
        HEADER,
        {"type": "individual", "id": 0, "generation": 0},
        {"type": "population", "generation": 0, "members": [0], "fitness": [1.0],
         "terrain": "flat"},
        {"type": "env_change", "generation": 1, "survivors": []},
    ]
    with RunWriter(tmp_path) as writer:
        for rec in records:
            writer.write(rec)
    log = read_log(tmp_path)
    assert log.header == HEADER
    assert log.individuals[0]["generation"] == 0
    assert log.populations[0]["members"] == [0]
    assert len(log.env_changes) == 1
    assert log.last_complete_generation == 0


def test_times_file_tracks_population_records(tmp_path):
    with RunWriter(tmp_path) as writer:
        writer.write(HEADER)
        writer.write({"type": "individual", "id": 0, "generation": 0})
        writer.write({"type": "population", "generation": 0, "members": [],
                      "fitness": [], "terrain": "flat"})
        writer.write({"type": "population", "generation": 1, "members": [],
                      "fitness": [], "terrain": "flat"})
    lines = (tmp_path / "times.jsonl").read_text().splitlines()
    assert len(lines) == 2
    stamps = [json.loads(l) for l in lines]
    assert [s["generation"] for s in stamps] == [0, 1]
    assert all("wall" in s for s in stamps)


def test_read_log_tolerates_truncated_final_line(tmp_path):
    _write_lines(tmp_path, [HEADER, {"type": "individual", "id": 0, "generation": 0}])
    with open(tmp_path / "log.jsonl", "a", encoding="utf-8") as fh:
        fh.write('{"type": "population", "generation": 0, "mem')  # no newline
    log = read_log(tmp_path)
    assert log.individuals and not log.populations


def test_read_log_rejects_midfile_corruption(tmp_path):
    tmp_path.joinpath("log.jsonl").write_text(
        json.dumps(HEADER) + "\n" + "{broken json}\n" +
        json.dumps({"type": "individual", "id": 0, "generation": 0}) + "\n"
    )
    with pytest.raises(LogError, match="not valid JSON"):
        read_log(tmp_path)


def test_read_log_requires_header(tmp_path):
    _write_lines(tmp_path, [{"type": "individual", "id": 0, "generation": 0}])
    with pytest.raises(LogError, match="missing header"):
        read_log(tmp_path)


def test_read_log_unknown_record_type(tmp_path):
    _write_lines(tmp_path, [HEADER, {"type": "mystery"}])
    with pytest.raises(LogError, match="unknown record type"):
        read_log(tmp_path)


def test_read_log_missing_file(tmp_path):
    with pytest.raises(LogError, match="no log.jsonl"):
        read_log(tmp_path)


def test_schema_major_version_gate(tmp_path):
    _write_lines(tmp_path, [{"type": "header", "schema": "2.0", "config": "c"}])
    with pytest.raises(LogError, match="schema"):
        read_log(tmp_path)
    _write_lines(tmp_path, [{"type": "header", "schema": "1.5", "config": "c"}])
    read_log(tmp_path)  # same major version stays readable


def test_config_round_trip(tmp_path):
    cfg = tiny_config(setup="Rugged_1", mode="darwinian", master_seed=7)
    write_config(tmp_path, cfg)
    assert load_run_config(tmp_path) == cfg


def test_load_run_config_missing(tmp_path):
    with pytest.raises(LogError, match="no config.txt"):
        load_run_config(tmp_path)


def test_run_and_log_produces_complete_log(tmp_path):
    cfg = tiny_config()
    result = run_and_log(cfg, tmp_path / "run")
    assert result is not None
    log = read_log(tmp_path / "run")
    assert log.last_complete_generation == 2
    assert len(log.individuals) == 8
    assert load_run_config(tmp_path / "run") == cfg


def test_run_and_log_refuses_to_clobber(tmp_path):
    cfg = tiny_config()
    run_and_log(cfg, tmp_path / "run")
    with pytest.raises(LogError, match="resume"):
        run_and_log(cfg, tmp_path / "run")


def test_resume_on_complete_run_returns_none(tmp_path):
    cfg = tiny_config()
    run_and_log(cfg, tmp_path / "run")
    assert run_and_log(cfg, tmp_path / "run", resume=True) is None


def test_resume_rejects_different_config(tmp_path):
    run_and_log(tiny_config(), tmp_path / "run")
    other = tiny_config(master_seed=99)
    with pytest.raises(LogError, match="different configuration"):
        run_and_log(other, tmp_path / "run", resume=True)


def test_resume_reproduces_uninterrupted_log_bytes(tmp_path):
    cfg = tiny_config(generations=3)
    full_dir = tmp_path / "full"
    run_and_log(cfg, full_dir)
    full_bytes = (full_dir / "log.jsonl").read_bytes()

    # cut the log after generation 1's population record, mid-generation 2
    resumed_dir = tmp_path / "resumed"
    lines = full_bytes.decode("utf-8").splitlines(keepends=True)
    pop_lines = [i for i, l in enumerate(lines)
                 if json.loads(l).get("type") == "population"]
    cut = pop_lines[1] + 1
    resumed_dir.mkdir()
    prefix = "".join(lines[:cut]) + lines[cut][: len(lines[cut]) // 2]
    (resumed_dir / "log.jsonl").write_text(prefix, encoding="utf-8")
    write_config(resumed_dir, cfg)

    result = run_and_log(cfg, resumed_dir, resume=True)
    assert result is not None
    assert (resumed_dir / "log.jsonl").read_bytes() == full_bytes


def test_truncate_after_last_population(tmp_path):
    _write_lines(tmp_path, [
        HEADER,
        {"type": "individual", "id": 0, "generation": 0},
        {"type": "population", "generation": 0, "members": [0], "fitness": [0.0],
         "terrain": "flat"},
        {"type": "individual", "id": 1, "generation": 1},
    ])
    truncate_after_last_population(tmp_path)
    log = read_log(tmp_path)
    assert log.last_complete_generation == 0
    assert 1 not in log.individuals


def test_truncate_without_any_population(tmp_path):
    _write_lines(tmp_path, [HEADER, {"type": "individual", "id": 0, "generation": 0}])
    with pytest.raises(LogError, match="no complete generation"):
        truncate_after_last_population(tmp_path)


def test_load_resume_state_population(tmp_path):
    cfg = tiny_config(generations=3)
    run_and_log(cfg, tmp_path / "run")
    log = read_log(tmp_path / "run")
    # pretend the run was configured longer, so resume has work to do
    longer = tiny_config(generations=3)
    state = load_resume_state(tmp_path / "run", longer)
    assert state is None  # complete at its own length
    members = log.populations[-1]["members"]
    assert len(members) == 4


def test_replay_individual_matches_log(tmp_path):
    cfg = tiny_config()
    run_and_log(cfg, tmp_path / "run")
    log = read_log(tmp_path / "run")
    some_id = max(log.individuals)
    result = replay_individual(tmp_path / "run", some_id)
    assert abs(result["replayed"] - result["logged"]) <= 1e-12
    assert len(result["trajectory"].positions) == cfg.task_spec().sample_count


def test_replay_unknown_individual(tmp_path):
    run_and_log(tiny_config(), tmp_path / "run")
    with pytest.raises(LogError, match="no individual 999"):
        replay_individual(tmp_path / "run", 999)
