"""Experiment configuration, profiles and the key-value config format.

A config file is plain text, one `key = value` per line, `#` starts a
comment. Keys are the field names of ExperimentConfig. Values are parsed
by the field's type (booleans accept true/false, 1/0, yes/no). Unknown
keys are an error. Precedence, lowest to highest: built-in defaults, the
named profile, the config file, command-line flags.

The `full` profile is the full-scale protocol; the `desk` profile is a
minutes-scale variant (population 8, offspring 4, 6 generations, a
20-assessment learning budget and 12 s evaluations) used by the
acceptance checks.
"""

import hashlib
from dataclasses import dataclass, fields, replace

from .environment import TaskSpec, parse_setup
from .genotype import BodyMutationParams
from .learning import LearnerConfig
from .simbackend import SurrogateParams


class ConfigError(ValueError):
    """Invalid configuration content."""


@dataclass(frozen=True)
class ExperimentConfig:
    # Experiment identity.
    setup: str = "Flat_0"
    mode: str = "lamarckian"
    master_seed: int = 0
    repetitions: int = 10

    # Outer evolutionary loop.
    population: int = 50
    offspring: int = 25
    generations: int = 30
    tournament_size: int = 2
    learn_initial_generation: bool = True

    # Body variation.
    body_crossover_prob: float = 0.8
    body_mutation_gate: float = 0.8
    body_weight_prob: float = 0.9
    body_weight_sd: float = 0.5
    body_add_conn_prob: float = 0.05
    body_add_node_prob: float = 0.03
    body_toggle_prob: float = 0.02

    # Brain variation.
    brain_mutation_prob: float = 0.8
    brain_mutation_sd: float = 0.5

    # Lifetime learner.
    learn_population: int = 10
    learn_candidates: int = 30
    learn_top: int = 10
    learn_scale: float = 0.5
    learn_crossover_rate: float = 0.9
    learn_iterations: int = 10
    learn_init_sd: float = 0.5

    # Task.
    eval_duration: float = 60.0
    sample_rate: float = 5.0
    target_radius: float = 0.01
    path_weight: float = 0.1

    # Steering.
    steering_exponent: int = 7
    steering_convention: str = "as-printed"

    # Surrogate backend.
    control_dt: float = 0.005
    thrust: float = 0.25
    turning: float = 3.0
    slope_drag: float = 4.0
    drag_resolution: float = 0.05
    arena_half: float = 5.0

    # Terrain.
    rugged_amplitude: float = 0.12
    rugged_wavelength: float = 0.8
    rugged_octaves: int = 2
    terrain_seed: int = 0

    # Execution.
    workers: int = 1

    def validate(self):
        try:
            _, changes = parse_setup(self.setup)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.mode not in ("lamarckian", "darwinian"):
            raise ConfigError(f"mode must be lamarckian or darwinian, got {self.mode!r}")
        if self.population < 2 or self.offspring < 1:
            raise ConfigError("population must be >= 2 and offspring >= 1")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        if changes > 0 and self.generations <= changes:
            raise ConfigError(
                f"setup {self.setup} needs more than {changes} generations"
            )
        if self.tournament_size != 2:
            raise ConfigError("parent selection uses binary tournaments (size 2)")
        if self.steering_convention not in ("as-printed", "as-prose"):
            raise ConfigError("steering_convention must be as-printed or as-prose")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            self.learner_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def task_spec(self) -> TaskSpec:
        return TaskSpec(
            radius=self.target_radius,
            duration=self.eval_duration,
            sample_rate=self.sample_rate,
            path_weight=self.path_weight,
        )

    def learner_config(self) -> LearnerConfig:
        return LearnerConfig(
            population=self.learn_population,
            candidates=self.learn_candidates,
            top=self.learn_top,
            scale=self.learn_scale,
            crossover_rate=self.learn_crossover_rate,
            iterations=self.learn_iterations,
            init_sd=self.learn_init_sd,
        )

    def surrogate_params(self) -> SurrogateParams:
        return SurrogateParams(
            thrust=self.thrust,
            turning=self.turning,
            slope_drag=self.slope_drag,
            control_dt=self.control_dt,
            drag_resolution=self.drag_resolution,
            arena_half=self.arena_half,
            steering_exponent=self.steering_exponent,
            steering_convention=self.steering_convention,
        )

    def body_mutation_params(self) -> BodyMutationParams:
        return BodyMutationParams(
            gate=self.body_mutation_gate,
            weight_prob=self.body_weight_prob,
            weight_sd=self.body_weight_sd,
            add_conn_prob=self.body_add_conn_prob,
            add_node_prob=self.body_add_node_prob,
            toggle_prob=self.body_toggle_prob,
        )


# The desk profile keeps the learner's structure (initial population plus
# candidate batches) while cutting the budget to 5 + 3 * 5 = 20
# assessments per individual.
PROFILES = {
    "full": {},
    "desk": {
        "population": 8,
        "offspring": 4,
        "generations": 6,
        "learn_population": 5,
        "learn_candidates": 3,
        "learn_top": 5,
        "learn_iterations": 6,
        "eval_duration": 12.0,
        "repetitions": 1,
    },
}


def apply_profile(cfg: ExperimentConfig, profile: str) -> ExperimentConfig:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; known: {sorted(PROFILES)}")
    return replace(cfg, **PROFILES[profile])


_FIELD_TYPES = {
    f.name: (f.type if isinstance(f.type, str) else f.type.__name__)
    for f in fields(ExperimentConfig)
}


def _parse_value(key: str, raw: str):
    ftype = _FIELD_TYPES[key]
    raw = raw.strip()
    if ftype == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"cannot parse boolean {key} = {raw!r}")
    if ftype == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"cannot parse integer {key} = {raw!r}") from None
    if ftype == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"cannot parse number {key} = {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    """Parse key-value config text into an override dict."""
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        overrides[key] = _parse_value(key, raw)
    return overrides


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def echo_text(cfg: ExperimentConfig) -> str:
    """Full resolved configuration in the same key-value format."""
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in fields(ExperimentConfig)]
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of everything that determines results.

    The worker count and repetition count are excluded: scheduling cannot
    perturb results, and each repetition is a self-contained run.
    """
    skip = {"workers", "repetitions"}
    lines = [
        f"{f.name} = {getattr(cfg, f.name)}"
        for f in fields(ExperimentConfig)
        if f.name not in skip
    ]
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
