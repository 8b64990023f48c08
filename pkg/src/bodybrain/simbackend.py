"""Deterministic surrogate locomotion backend.

A full physics engine is out of scope, so rollouts drive a planar
unicycle abstraction of the robot. At every control step the CPG states
advance one RK4 step, the joint signals are steered toward the next
unreached target, and the chassis moves with

    forward speed = thrust * mean_j |d out_j / dt| * drag(local slope)
    angular rate  = turning * (mean right-side output - mean left-side output)

so vigorous oscillation propels the robot, rugged slopes slow it down, and
steering-induced asymmetry turns it. Everything is a pure function of the
inputs: no randomness, no global state, bit-identical repeats.

Robots whose oscillator states diverge (non-finite values) freeze in place
for the remainder of the rollout; the trajectory stays finite.
"""

import math
from dataclasses import dataclass

import numpy as np

from .controller import INITIAL_STATE, rk4_step, steering_gain, wrap_angle
from .environment import RUGGED, TaskSpec, Terrain

_DRAG_CACHE: dict = {}


@dataclass(frozen=True)
class SurrogateParams:
    thrust: float = 0.25
    turning: float = 3.0
    slope_drag: float = 4.0
    control_dt: float = 0.005
    drag_resolution: float = 0.05
    arena_half: float = 5.0
    steering_exponent: int = 7
    steering_convention: str = "as-printed"


@dataclass
class Trajectory:
    """Chassis states sampled at the task rate; index 0 is t = 0."""

    times: np.ndarray
    positions: np.ndarray
    headings: np.ndarray

    def __len__(self):
        return len(self.times)


def drag_grid(terrain: Terrain, params: SurrogateParams) -> np.ndarray:
    """Precomputed drag factors on a regular grid over the arena.

    The factor is 1 / (1 + slope_drag * |grad h|), so it is exactly one on
    flat ground and falls toward zero on steep slopes. Grids are cached
    per terrain and parameter set.
    """
    key = (terrain.key(), params.slope_drag, params.drag_resolution, params.arena_half)
    grid = _DRAG_CACHE.get(key)
    if grid is None:
        res = params.drag_resolution
        n = int(round(2.0 * params.arena_half / res)) + 1
        heights = np.empty((n, n))
        for i in range(n):
            x = -params.arena_half + i * res
            for j in range(n):
                y = -params.arena_half + j * res
                heights[i, j] = terrain.height(x, y)
        gx, gy = np.gradient(heights, res)
        slope = np.hypot(gx, gy)
        grid = 1.0 / (1.0 + params.slope_drag * slope)
        _DRAG_CACHE[key] = grid
    return grid


def evaluate(tree, network, terrain: Terrain, task: TaskSpec,
             params: SurrogateParams = SurrogateParams()) -> Trajectory:
    """Roll out one robot on one terrain; returns the sampled trajectory.

    Target bookkeeping inside the rollout (which target is being steered
    toward) advances at control-step granularity; fitness accounting is
    done afterwards on the sampled trajectory by the task module.
    """
    dt = params.control_dt
    steps_per_sample = int(round(1.0 / (task.sample_rate * dt)))
    if abs(steps_per_sample * dt * task.sample_rate - 1.0) > 1e-9:
        raise ValueError("control_dt must evenly divide the sample interval")
    n_samples = task.sample_count
    times = np.arange(n_samples) / task.sample_rate
    positions = np.zeros((n_samples, 2))
    headings = np.zeros(n_samples)

    n = network.n
    if n == 0:
        return Trajectory(times, positions, headings)

    W, wi = network.matrices()
    x = np.full(n, INITIAL_STATE)
    y = np.full(n, INITIAL_STATE)
    left = network.sides == -1
    right = network.sides == 1
    l_w = left / max(int(left.sum()), 1)
    r_w = right / max(int(right.sum()), 1)
    inv_n_dt = 1.0 / (n * dt)
    use_drag = terrain.kind == RUGGED
    if use_drag:
        grid = drag_grid(terrain, params)
        res = params.drag_resolution
        gmax = grid.shape[0] - 1
    half = params.arena_half
    as_printed = params.steering_convention == "as-printed"
    if not as_printed and params.steering_convention != "as-prose":
        raise ValueError(f"unknown steering convention {params.steering_convention!r}")

    px, py, heading = 0.0, 0.0, 0.0
    targets = task.targets
    target_idx = 0
    prev = np.tanh(x)
    theta0 = _steer_angle(px, py, heading, targets[0])
    prev = _steered(prev, left, right, theta0, params.steering_exponent, as_printed)

    sample = 1
    total_steps = (n_samples - 1) * steps_per_sample
    frozen = False
    # divergence is handled by freezing, so float overflow is expected here
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(total_steps):
            if not frozen:
                x, y = rk4_step(W, wi, x, y, dt)
                if not np.all(np.isfinite(x)):
                    frozen = True
            if not frozen:
                tgt = targets[min(target_idx, len(targets) - 1)]
                theta = _steer_angle(px, py, heading, tgt)
                steered = _steered(np.tanh(x), left, right, theta,
                                   params.steering_exponent, as_printed)
                joint_speed = np.abs(steered - prev).sum() * inv_n_dt
                drag = 1.0
                if use_drag:
                    i = min(max(int(round((px + half) / res)), 0), gmax)
                    j = min(max(int(round((py + half) / res)), 0), gmax)
                    drag = grid[i, j]
                omega = params.turning * (steered @ r_w - steered @ l_w)
                heading += omega * dt
                v = params.thrust * joint_speed * drag
                px = min(max(px + v * math.cos(heading) * dt, -half), half)
                py = min(max(py + v * math.sin(heading) * dt, -half), half)
                prev = steered
                while target_idx < len(targets) and math.hypot(
                    px - targets[target_idx][0], py - targets[target_idx][1]
                ) <= task.radius:
                    target_idx += 1
            if (step + 1) % steps_per_sample == 0:
                positions[sample, 0] = px
                positions[sample, 1] = py
                headings[sample] = heading
                sample += 1
    return Trajectory(times, positions, headings)


def _steer_angle(px: float, py: float, heading: float, target) -> float:
    dx = target[0] - px
    dy = target[1] - py
    if dx * dx + dy * dy < 1e-24:
        return 0.0
    return wrap_angle(heading - math.atan2(dy, dx))


def _steered(out: np.ndarray, left: np.ndarray, right: np.ndarray,
             theta: float, exponent: int, as_printed: bool) -> np.ndarray:
    gain = steering_gain(theta, exponent)
    target_left = theta < 0.0
    scale_left = target_left if as_printed else not target_left
    scaled = out.copy()
    scaled[left if scale_left else right] *= gain
    return scaled
