"""Command line interface.

    bodybrain evolve  --setup Flat_2 --mode lamarckian --seed 0 --out runs/
    bodybrain analyze --runs runs/ --out analysis/
    bodybrain plot    --analysis analysis/ --out analysis/
    bodybrain replay  --run runs/seed_0 --individual 12

Exit codes: 0 success, 1 usage error, 2 data error (missing or corrupt
logs, invalid config, replay drift).
"""

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import RunData, analyze_runs
from .config import (
    ConfigError,
    ExperimentConfig,
    apply_profile,
    load_config_file,
)
from .runstore import (
    LogError,
    load_run_config,
    read_log,
    replay_individual,
    run_and_log,
)

REPLAY_TOLERANCE = 1e-9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bodybrain",
                     description="Evolve modular robots that learn during their lifetime.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("evolve", help="run evolution and write run logs")
    ev.add_argument("--setup", help="environment setup, e.g. Flat_0 or Rugged_2")
    ev.add_argument("--mode", choices=["lamarckian", "darwinian"])
    ev.add_argument("--seed", type=int, help="master seed of the first repetition")
    ev.add_argument("--config", help="key = value config file")
    ev.add_argument("--profile", choices=["full", "desk"],
                    help="named parameter profile applied before the config file")
    ev.add_argument("--out", required=True, help="output directory")
    ev.add_argument("--generations", type=int)
    ev.add_argument("--pop", type=int, help="population size")
    ev.add_argument("--offspring", type=int)
    ev.add_argument("--repetitions", type=int)
    ev.add_argument("--workers", type=int)
    ev.add_argument("--resume", action="store_true",
                    help="continue interrupted runs from the last complete generation")

    an = sub.add_parser("analyze", help="compute metric tables from run logs")
    an.add_argument("--runs", nargs="+", required=True,
                    help="run directories, or parents holding seed_*/log.jsonl")
    an.add_argument("--out", required=True)

    pl = sub.add_parser("plot", help="render figures from analyze output")
    pl.add_argument("--analysis", required=True, help="directory with the CSV tables")
    pl.add_argument("--out", required=True)
    pl.add_argument("--format", default="png", choices=["png", "pdf", "svg"])

    rp = sub.add_parser("replay", help="re-simulate a logged individual and check fitness")
    rp.add_argument("--run", required=True, help="run directory")
    rp.add_argument("--individual", type=int, required=True)
    rp.add_argument("--trajectory-out", help="write the replayed trajectory as CSV")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.profile:
        cfg = apply_profile(cfg, args.profile)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        cfg = replace(cfg, **load_config_file(path))
    flag_map = {
        "setup": args.setup,
        "mode": args.mode,
        "master_seed": args.seed,
        "generations": args.generations,
        "population": args.pop,
        "offspring": args.offspring,
        "repetitions": args.repetitions,
        "workers": args.workers,
    }
    overrides = {k: v for k, v in flag_map.items() if v is not None}
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _cmd_evolve(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    for rep in range(cfg.repetitions):
        seed = cfg.master_seed + rep
        run_cfg = replace(cfg, master_seed=seed)
        run_dir = out / f"seed_{seed}"
        result = run_and_log(run_cfg, run_dir, resume=args.resume)
        if result is None:
            print(f"{run_dir}: already complete, nothing to do")
            continue
        fits = [ind.fitness for ind in result.population]
        print(f"{run_dir}: {cfg.setup} {cfg.mode} seed {seed} | "
              f"{run_cfg.generations} generations, "
              f"{result.assessments} learning assessments | "
              f"final mean fitness {sum(fits) / len(fits):.4f}, "
              f"best {max(fits):.4f}")
    return 0


def _discover_runs(paths) -> list:
    found = []
    for p in paths:
        p = Path(p)
        if (p / "log.jsonl").exists():
            found.append(p)
            continue
        subs = sorted(d for d in p.glob("*/") if (d / "log.jsonl").exists())
        if not subs:
            raise LogError(f"{p}: no log.jsonl here or in direct subdirectories")
        found.extend(subs)
    return found


def _cmd_analyze(args) -> int:
    run_dirs = _discover_runs(args.runs)
    runs = []
    for run_dir in run_dirs:
        cfg = load_run_config(run_dir)
        runs.append(RunData(setup=cfg.setup, mode=cfg.mode, seed=cfg.master_seed,
                            log=read_log(run_dir)))
    tables = analyze_runs(runs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (cols, rows) in tables.items():
        path = out / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            writer.writerows(rows)
        print(f"wrote {path} ({len(rows)} rows)")
    return 0


def _cmd_plot(args) -> int:
    from . import plots

    written = plots.render_all(args.analysis, args.out, args.format)
    if not written:
        print("no figures rendered: the metric tables are empty")
        return 0
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_replay(args) -> int:
    result = replay_individual(args.run, args.individual)
    drift = abs(result["replayed"] - result["logged"])
    if args.trajectory_out:
        traj = result["trajectory"]
        with open(args.trajectory_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("time", "x", "y", "heading"))
            for t, (x, y), h in zip(traj.times, traj.positions, traj.headings):
                writer.writerow((t, x, y, h))
        print(f"wrote {args.trajectory_out}")
    print(f"individual {args.individual}: logged fitness {result['logged']!r}, "
          f"replayed {result['replayed']!r}, drift {drift:.3e}")
    if drift > REPLAY_TOLERANCE:
        print(f"replay drift exceeds {REPLAY_TOLERANCE}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "evolve": _cmd_evolve,
        "analyze": _cmd_analyze,
        "plot": _cmd_plot,
        "replay": _cmd_replay,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, LogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
