"""CPG controllers: oscillator networks addressed by the brain genotype.

Every active hinge carries one oscillator with state (x, y) and dynamics

    dx_i/dt = w_i * y_i + sum_j w_ji * x_j        (j within tree distance 2)
    dy_i/dt = -w_i * x_i

integrated with fixed-step RK4. The joint signal is out = 2 / (1 +
exp(-2x)) - 1, which equals tanh(x). Initial states are (sqrt(2)/2,
sqrt(2)/2), so an uncoupled oscillator with w_i = 1 traces sin(t + pi/4)
with amplitude one.

Weight provenance: every weight in a network is read from exactly one
brain matrix address. An oscillator's internal weight lives at (row of its
2D cell, self-offset column). A coupling between two joints is owned by
the one placed earlier in construction order: the weight sits in the
owner's row, at the column of the partner's relative cell offset, or in
the same-cell column when both share a 2D cell. Couplings whose genotype
addresses coincide (for example three joints stacked on one cell) share a
single network weight. Antisymmetry w_ij = -w_ji is applied when the
coupling matrix is assembled.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .genotype import (
    SAME_CELL_COLUMN,
    SELF_COLUMN,
    BrainGenotype,
    brain_row,
    offset_column,
)
from .morphology import ModuleTree, tree_distance

INITIAL_STATE = math.sqrt(2.0) / 2.0
STEERING_EXPONENT = 7


class CpgStateError(RuntimeError):
    """Raised when oscillator states stop being finite."""


@dataclass
class CpgNetwork:
    hinge_modules: list
    grid2: list
    addresses: list
    weights: np.ndarray
    internal_idx: np.ndarray
    couplings: list
    sides: np.ndarray
    x: np.ndarray = field(default=None)
    y: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.x is None:
            self.reset_states()

    @property
    def n(self) -> int:
        return len(self.hinge_modules)

    def reset_states(self):
        self.x = np.full(self.n, INITIAL_STATE)
        self.y = np.full(self.n, INITIAL_STATE)

    def set_weights(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != self.weights.shape:
            raise ValueError("weight vector length does not match the network")
        self.weights = values.copy()

    def matrices(self):
        """Coupling matrix W (W[i, j] multiplies x_j in dx_i/dt) and the
        internal weight vector."""
        W = np.zeros((self.n, self.n))
        for owner, other, addr in self.couplings:
            w = self.weights[addr]
            W[owner, other] += w
            W[other, owner] -= w
        wi = self.weights[self.internal_idx] if self.n else np.zeros(0)
        return W, wi

    def step(self, dt: float, steps: int = 1):
        W, wi = self.matrices()
        x, y = self.x, self.y
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(steps):
                x, y = rk4_step(W, wi, x, y, dt)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise CpgStateError("oscillator state diverged to a non-finite value")
        self.x, self.y = x, y

    def outputs(self) -> np.ndarray:
        return np.tanh(self.x)


def rk4_step(W, wi, x, y, dt):
    """One classic Runge-Kutta step of the coupled oscillator dynamics."""
    k1x = W @ x + wi * y
    k1y = -wi * x
    x2 = x + 0.5 * dt * k1x
    y2 = y + 0.5 * dt * k1y
    k2x = W @ x2 + wi * y2
    k2y = -wi * x2
    x3 = x + 0.5 * dt * k2x
    y3 = y + 0.5 * dt * k2y
    k3x = W @ x3 + wi * y3
    k3y = -wi * x3
    x4 = x + dt * k3x
    y4 = y + dt * k3y
    k4x = W @ x4 + wi * y4
    k4y = -wi * x4
    nx = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    ny = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return nx, ny


def build_network(tree: ModuleTree, brain: BrainGenotype) -> CpgNetwork:
    """Assemble the oscillator network for a body from its brain matrix.

    Oscillators follow hinge placement order. Addresses are collected in a
    fixed order (internal weights first, then couplings over ordered
    pairs), deduplicated, and their genotype values copied into the
    network's weight vector.
    """
    hinges = tree.hinges()
    grid2 = [tree.grid2(h) for h in hinges]
    addresses: list = []
    addr_index: dict = {}

    def intern(row: int, col: int) -> int:
        key = (row, col)
        if key not in addr_index:
            addr_index[key] = len(addresses)
            addresses.append(key)
        return addr_index[key]

    internal = []
    for gx, gy in grid2:
        internal.append(intern(brain_row(gx, gy), SELF_COLUMN))

    couplings = []
    for i in range(len(hinges)):
        for j in range(i + 1, len(hinges)):
            if tree_distance(tree, hinges[i], hinges[j]) > 2:
                continue
            dx = grid2[j][0] - grid2[i][0]
            dy = grid2[j][1] - grid2[i][1]
            if abs(dx) + abs(dy) > 2:
                raise AssertionError(
                    "joints within tree distance 2 must be within two grid steps"
                )
            row = brain_row(*grid2[i])
            col = SAME_CELL_COLUMN if (dx, dy) == (0, 0) else offset_column(dx, dy)
            couplings.append((i, j, intern(row, col)))

    weights = np.array([brain.matrix[r, c] for r, c in addresses], dtype=float)
    sides = np.sign([g[0] for g in grid2]).astype(int) if hinges else np.zeros(0, dtype=int)
    return CpgNetwork(
        hinge_modules=hinges,
        grid2=grid2,
        addresses=addresses,
        weights=weights,
        internal_idx=np.array(internal, dtype=int),
        couplings=couplings,
        sides=sides,
    )


def wrap_angle(theta: float) -> float:
    """Normalize an angle into [-pi, pi]."""
    return math.remainder(theta, math.tau)


def steering_gain(theta: float, n: int = STEERING_EXPONENT) -> float:
    """((pi - |theta|) / pi) ** n for theta normalized into [-pi, pi]."""
    t = abs(wrap_angle(theta))
    return ((math.pi - t) / math.pi) ** n


def apply_steering(outputs: np.ndarray, sides: np.ndarray, theta: float,
                   n: int = STEERING_EXPONENT,
                   convention: str = "as-printed") -> np.ndarray:
    """Scale one side's joint signals by the steering gain.

    theta < 0 means the target lies to the left. The default convention
    (as-printed) damps the joints on the target's side; the alternate
    (as-prose) damps the opposite side. Centre joints (grid x = 0) are
    never scaled.
    """
    gain = steering_gain(theta, n)
    target_left = wrap_angle(theta) < 0.0
    if convention == "as-printed":
        scale_left = target_left
    elif convention == "as-prose":
        scale_left = not target_left
    else:
        raise ValueError(f"unknown steering convention {convention!r}")
    scaled = np.asarray(outputs, dtype=float).copy()
    mask = (sides == -1) if scale_left else (sides == 1)
    scaled[mask] *= gain
    return scaled


def writeback(brain: BrainGenotype, network: CpgNetwork) -> BrainGenotype:
    """Copy the network's weights into a new brain genotype at their
    addresses; all other entries are untouched."""
    new = brain.copy()
    for (row, col), w in zip(network.addresses, network.weights):
        new.matrix[row, col] = w
    return new
