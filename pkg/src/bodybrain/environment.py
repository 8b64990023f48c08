"""Terrains, environment schedules and the point-navigation task.

Rugged terrain is seeded value noise: lattice values are hashed from the
integer cell coordinates and the seed, interpolated with a smoothstep, and
summed over octaves of doubling frequency and halving amplitude. Height is
therefore a pure function of (x, y, seed) and identical across runs.

The task is point navigation through an ordered list of targets. Fitness
rewards the distance covered between consecutive reached targets plus the
progress from the last reached target toward the next one, and charges a
small penalty proportional to the travelled path length:

    F = sum_i dist(P_i, P_{i-1})
        + (dist(P_{k+1}, P_k) - dist(P_T, P_{k+1}))
        - w * L

with k the number of targets reached in order, P_T the final position and
L the path length. When every target is reached the middle term is zero.
"""

import math
from dataclasses import dataclass, field

import numpy as np

_M64 = 0xFFFFFFFFFFFFFFFF


def _hash_unit(ix: int, iy: int, seed: int) -> float:
    """Deterministic lattice value in [-1, 1) for integer cell (ix, iy)."""
    h = ((ix & _M64) * 0x9E3779B97F4A7C15) & _M64
    h ^= ((iy & _M64) * 0xC2B2AE3D27D4EB4F) & _M64
    h ^= ((seed & _M64) * 0x165667B19E3779F9) & _M64
    h = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    h = ((h ^ (h >> 27)) * 0x94D049BB133111EB) & _M64
    h ^= h >> 31
    return (h / 2.0**64) * 2.0 - 1.0


def value_noise(x: float, y: float, seed: int) -> float:
    """Bilinear smoothstep interpolation of hashed lattice values."""
    ix, iy = math.floor(x), math.floor(y)
    fx, fy = x - ix, y - iy
    ux = fx * fx * (3.0 - 2.0 * fx)
    uy = fy * fy * (3.0 - 2.0 * fy)
    v00 = _hash_unit(ix, iy, seed)
    v10 = _hash_unit(ix + 1, iy, seed)
    v01 = _hash_unit(ix, iy + 1, seed)
    v11 = _hash_unit(ix + 1, iy + 1, seed)
    top = v00 + (v10 - v00) * ux
    bot = v01 + (v11 - v01) * ux
    return top + (bot - top) * uy


def fbm(x: float, y: float, seed: int, octaves: int = 2) -> float:
    """Octaves of value noise, normalized back into [-1, 1]."""
    total, amp, freq, norm = 0.0, 1.0, 1.0, 0.0
    for o in range(octaves):
        total += amp * value_noise(x * freq, y * freq, seed + o)
        norm += amp
        amp *= 0.5
        freq *= 2.0
    return total / norm


FLAT = "flat"
RUGGED = "rugged"


@dataclass(frozen=True)
class Terrain:
    """A heightfield; flat terrain is identically zero."""

    kind: str = FLAT
    amplitude: float = 0.12
    wavelength: float = 0.8
    octaves: int = 2
    seed: int = 0

    @property
    def name(self) -> str:
        return self.kind

    def height(self, x: float, y: float) -> float:
        if self.kind == FLAT:
            return 0.0
        return self.amplitude * fbm(x / self.wavelength, y / self.wavelength,
                                    self.seed, self.octaves)

    def key(self) -> tuple:
        return (self.kind, self.amplitude, self.wavelength, self.octaves, self.seed)


def flat_terrain() -> Terrain:
    return Terrain(kind=FLAT)


def rugged_terrain(amplitude: float = 0.12, wavelength: float = 0.8,
                   octaves: int = 2, seed: int = 0) -> Terrain:
    return Terrain(RUGGED, amplitude, wavelength, octaves, seed)


@dataclass
class EnvironmentSchedule:
    """Alternating terrain phases over the generations of a run."""

    starts: list
    terrains: list

    def phase_of(self, generation: int) -> int:
        phase = 0
        for i, start in enumerate(self.starts):
            if generation >= start:
                phase = i
        return phase

    def terrain_at(self, generation: int) -> Terrain:
        return self.terrains[self.phase_of(generation)]

    @property
    def change_generations(self) -> list:
        return list(self.starts[1:])


def parse_setup(setup: str) -> tuple:
    """Split a setup name like Flat_2 into (base kind, change count)."""
    try:
        base, count = setup.split("_")
        changes = int(count)
    except ValueError:
        raise ValueError(f"setup {setup!r} is not of the form Kind_changes") from None
    kind = base.lower()
    if kind not in (FLAT, RUGGED) or changes < 0:
        raise ValueError(f"setup {setup!r} is not a valid environment setup")
    return kind, changes


def make_schedule(setup: str, generations: int,
                  rugged: Terrain | None = None) -> EnvironmentSchedule:
    """Build the terrain schedule for a setup.

    With c changes over G generations, change j happens at generation
    ceil(G * j / (c + 1)), so phases are as even as integer generations
    allow. Phases alternate between the base kind and the other kind.
    """
    base_kind, changes = parse_setup(setup)
    if changes > 0 and generations <= changes:
        raise ValueError(
            f"{changes} environment changes need more than {changes} generations"
        )
    rugged = rugged if rugged is not None else rugged_terrain()
    flat = flat_terrain()
    first = flat if base_kind == FLAT else rugged
    other = rugged if base_kind == FLAT else flat
    starts = [0] + [math.ceil(generations * j / (changes + 1)) for j in range(1, changes + 1)]
    terrains = [(first if i % 2 == 0 else other) for i in range(changes + 1)]
    return EnvironmentSchedule(starts, terrains)


@dataclass(frozen=True)
class TaskSpec:
    """Point navigation through ordered targets inside a square arena."""

    targets: tuple = ((1.0, -1.0), (0.0, -2.0))
    radius: float = 0.01
    duration: float = 60.0
    sample_rate: float = 5.0
    path_weight: float = 0.1

    @property
    def sample_count(self) -> int:
        return int(round(self.duration * self.sample_rate)) + 1


def _positions_of(trajectory) -> np.ndarray:
    positions = getattr(trajectory, "positions", trajectory)
    return np.asarray(positions, dtype=float)


def targets_reached(trajectory, task: TaskSpec) -> tuple:
    """Count targets reached in order; returns (count, hit sample indices).

    A target counts once some sampled position lies within the task radius
    of it, and only after every earlier target has been reached.
    """
    positions = _positions_of(trajectory)
    k = 0
    hits = []
    for idx in range(len(positions)):
        while k < len(task.targets):
            tx, ty = task.targets[k]
            if math.hypot(positions[idx, 0] - tx, positions[idx, 1] - ty) > task.radius:
                break
            hits.append(idx)
            k += 1
    return k, hits


def path_length(trajectory) -> float:
    positions = _positions_of(trajectory)
    if len(positions) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))


def fitness(trajectory, task: TaskSpec) -> float:
    """Point-navigation fitness of a sampled trajectory."""
    positions = _positions_of(trajectory)
    k, _ = targets_reached(positions, task)
    waypoints = [tuple(positions[0])] + [tuple(t) for t in task.targets]
    gained = sum(
        math.dist(waypoints[i + 1], waypoints[i]) for i in range(k)
    )
    if k < len(task.targets):
        nxt = waypoints[k + 1]
        middle = math.dist(nxt, waypoints[k]) - math.dist(tuple(positions[-1]), nxt)
    else:
        middle = 0.0
    return gained + middle - task.path_weight * path_length(positions)
