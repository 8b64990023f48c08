"""Genetic representations of robot bodies and brains.

Bodies are encoded as compositional pattern producing networks (CPPNs)
with four inputs (x, y, z, tree distance to the core) and five outputs
(brick, joint and empty-space scores, plus scores for 0 and 90 degree
rotation). Development queries the network on integer grid slots and takes
argmaxes, so decoding is fully deterministic.

Brains are real matrices of shape 440 x 14. Rows are indexed by the 2D
grid cell a joint occupies, taken from a 21 x 21 grid with the centre cell
excluded (21 * 21 - 1 = 440). The first 13 columns correspond to the
relative cell offsets reachable within two grid steps, which is the
Delannoy number D(2, 2) = 13; the offset (0, 0) column holds the
oscillator's internal weight. Column 13 holds the coupling weight for a
neighbour that shares the same 2D cell (stacked along z).

Innovation numbers are not drawn from a mutable global counter. A
connection's innovation is a pairing function of its endpoint ids, so
structurally identical connections acquire identical innovation numbers in
any lineage, and crossover can align genes without shared state.
"""

import math
from dataclasses import dataclass, field

import numpy as np

# Body CPPN dimensions.
NUM_INPUTS = 4
NUM_OUTPUTS = 5
INPUT_IDS = tuple(range(NUM_INPUTS))
OUTPUT_IDS = tuple(range(NUM_INPUTS, NUM_INPUTS + NUM_OUTPUTS))
NODE_ID_BASE = NUM_INPUTS + NUM_OUTPUTS

# Brain matrix dimensions.
GRID_RADIUS = 10
GRID_SIDE = 2 * GRID_RADIUS + 1
BRAIN_ROWS = GRID_SIDE * GRID_SIDE - 1
SAME_CELL_COLUMN = 13
BRAIN_COLS = SAME_CELL_COLUMN + 1

# All (dx, dy) with |dx| + |dy| <= 2, sorted lexicographically. There are
# exactly D(2, 2) = 13 of them; (0, 0) sits at index 6.
NEIGHBOUR_OFFSETS = tuple(
    sorted(
        (dx, dy)
        for dx in range(-2, 3)
        for dy in range(-2, 3)
        if abs(dx) + abs(dy) <= 2
    )
)
SELF_COLUMN = NEIGHBOUR_OFFSETS.index((0, 0))
_OFFSET_INDEX = {off: i for i, off in enumerate(NEIGHBOUR_OFFSETS)}

ACTIVATION_NAMES = ("sine", "gaussian", "sigmoid", "linear", "abs")


def _sigmoid(v: float) -> float:
    if v >= 0.0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


_ACTIVATIONS = {
    "sine": math.sin,
    "gaussian": lambda v: math.exp(-v * v),
    "sigmoid": _sigmoid,
    "linear": lambda v: v,
    "abs": abs,
}


def brain_row(x: int, y: int) -> int:
    """Row of the brain matrix for the 2D grid cell (x, y).

    Cells are enumerated in row-major order over x then y, skipping the
    centre cell (0, 0), which never hosts a joint.
    """
    if not (-GRID_RADIUS <= x <= GRID_RADIUS and -GRID_RADIUS <= y <= GRID_RADIUS):
        raise ValueError(f"grid cell ({x}, {y}) outside the {GRID_SIDE}x{GRID_SIDE} grid")
    idx = (x + GRID_RADIUS) * GRID_SIDE + (y + GRID_RADIUS)
    centre = GRID_RADIUS * GRID_SIDE + GRID_RADIUS
    if idx == centre:
        raise ValueError("the centre cell (0, 0) has no brain row")
    return idx if idx < centre else idx - 1


def offset_column(dx: int, dy: int) -> int:
    """Column for the relative cell offset (dx, dy), |dx| + |dy| <= 2."""
    try:
        return _OFFSET_INDEX[(dx, dy)]
    except KeyError:
        raise ValueError(f"offset ({dx}, {dy}) is not reachable within two steps") from None


def innovation_number(src: int, tgt: int) -> int:
    """Pairing of the endpoint ids; injective over (src, tgt)."""
    a, b = src, tgt
    return a * a + a + b if a >= b else b * b + a


@dataclass
class NodeGene:
    id: int
    activation: str
    bias: float = 0.0

    def copy(self) -> "NodeGene":
        return NodeGene(self.id, self.activation, self.bias)


@dataclass
class ConnGene:
    innovation: int
    src: int
    tgt: int
    weight: float
    enabled: bool = True

    def copy(self) -> "ConnGene":
        return ConnGene(self.innovation, self.src, self.tgt, self.weight, self.enabled)


@dataclass
class BodyGenotype:
    """Feed-forward CPPN over a fixed input/output interface.

    nodes maps node id to gene; conns maps innovation number to gene.
    The connection graph, including disabled genes, is always acyclic.
    """

    nodes: dict = field(default_factory=dict)
    conns: dict = field(default_factory=dict)

    def copy(self) -> "BodyGenotype":
        return BodyGenotype(
            {i: n.copy() for i, n in self.nodes.items()},
            {i: c.copy() for i, c in self.conns.items()},
        )

    def _topo_order(self) -> list:
        incoming = {nid: [] for nid in self.nodes}
        indeg = {nid: 0 for nid in self.nodes}
        for c in self.conns.values():
            incoming[c.tgt].append(c)
            indeg[c.tgt] += 1
        ready = sorted(nid for nid, d in indeg.items() if d == 0)
        order = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            for c in self.conns.values():
                if c.src == nid:
                    indeg[c.tgt] -= 1
                    if indeg[c.tgt] == 0:
                        ready.append(c.tgt)
            ready.sort()
        if len(order) != len(self.nodes):
            raise ValueError("connection graph contains a cycle")
        return order

    def query(self, x: float, y: float, z: float, dist: float) -> np.ndarray:
        """Evaluate the network; returns the five output values."""
        values = {nid: 0.0 for nid in self.nodes}
        values[0], values[1], values[2], values[3] = float(x), float(y), float(z), float(dist)
        incoming = {nid: [] for nid in self.nodes}
        for c in self.conns.values():
            if c.enabled:
                incoming[c.tgt].append(c)
        for nid in self._topo_order():
            if nid in INPUT_IDS:
                continue
            node = self.nodes[nid]
            total = node.bias + sum(c.weight * values[c.src] for c in incoming[nid])
            values[nid] = _ACTIVATIONS[node.activation](total)
        return np.array([values[o] for o in OUTPUT_IDS])

    def _would_cycle(self, src: int, tgt: int) -> bool:
        # Reachability tgt -> src over all genes, enabled or not.
        stack, seen = [tgt], set()
        while stack:
            nid = stack.pop()
            if nid == src:
                return True
            if nid in seen:
                continue
            seen.add(nid)
            stack.extend(c.tgt for c in self.conns.values() if c.src == nid)
        return False

    def to_obj(self) -> dict:
        return {
            "nodes": [[n.id, n.activation, n.bias] for n in
                      sorted(self.nodes.values(), key=lambda n: n.id)],
            "conns": [[c.innovation, c.src, c.tgt, c.weight, int(c.enabled)] for c in
                      sorted(self.conns.values(), key=lambda c: c.innovation)],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "BodyGenotype":
        nodes = {nid: NodeGene(nid, act, float(bias)) for nid, act, bias in obj["nodes"]}
        conns = {
            innov: ConnGene(innov, src, tgt, float(w), bool(en))
            for innov, src, tgt, w, en in obj["conns"]
        }
        return cls(nodes, conns)


def random_body(rng: np.random.Generator) -> BodyGenotype:
    """Initial CPPN: inputs fully connected to outputs, weights U(-1, 1)."""
    nodes = {nid: NodeGene(nid, "linear") for nid in INPUT_IDS}
    nodes.update({nid: NodeGene(nid, "sigmoid") for nid in OUTPUT_IDS})
    conns = {}
    for src in INPUT_IDS:
        for tgt in OUTPUT_IDS:
            innov = innovation_number(src, tgt)
            conns[innov] = ConnGene(innov, src, tgt, float(rng.uniform(-1.0, 1.0)))
    return BodyGenotype(nodes, conns)


def body_crossover(a: BodyGenotype, b: BodyGenotype, rng: np.random.Generator) -> BodyGenotype:
    """Recombine two body genotypes; a is the fitter parent.

    Matching connection genes (same innovation) are inherited from either
    parent with equal probability; disjoint and excess genes come from a.
    Node genes are taken from a, so the child keeps a's graph structure
    and stays acyclic.
    """
    child = BodyGenotype({nid: n.copy() for nid, n in a.nodes.items()}, {})
    for innov in sorted(a.conns):
        gene = a.conns[innov]
        if innov in b.conns and rng.random() >= 0.5:
            gene = b.conns[innov]
        child.conns[innov] = gene.copy()
    return child


@dataclass
class BodyMutationParams:
    gate: float = 0.8
    weight_prob: float = 0.9
    weight_sd: float = 0.5
    add_conn_prob: float = 0.05
    add_node_prob: float = 0.03
    toggle_prob: float = 0.02


def _add_connection_candidates(g: BodyGenotype) -> list:
    existing = {(c.src, c.tgt) for c in g.conns.values()}
    sources = sorted(nid for nid in g.nodes if nid not in OUTPUT_IDS)
    targets = sorted(nid for nid in g.nodes if nid not in INPUT_IDS)
    out = []
    for src in sources:
        for tgt in targets:
            if src == tgt or (src, tgt) in existing:
                continue
            if g._would_cycle(src, tgt):
                continue
            out.append((src, tgt))
    return out


def body_mutate(g: BodyGenotype, rng: np.random.Generator,
                params: BodyMutationParams | None = None) -> BodyGenotype:
    """Mutate a body genotype.

    One gate draw decides whether anything happens at all. Behind the
    gate, draws occur in a fixed order: per-connection weight
    perturbations (sorted by innovation), then an add-connection attempt,
    then an add-node attempt, then an enable toggle. Each sub-operator
    has its own probability draw, so event frequencies can be audited
    directly against the configured rates.
    """
    params = params or BodyMutationParams()
    child = g.copy()
    if rng.random() >= params.gate:
        return child

    for innov in sorted(child.conns):
        if rng.random() < params.weight_prob:
            child.conns[innov].weight += float(rng.normal(0.0, params.weight_sd))

    if rng.random() < params.add_conn_prob:
        candidates = _add_connection_candidates(child)
        if candidates:
            src, tgt = candidates[int(rng.integers(len(candidates)))]
            innov = innovation_number(src, tgt)
            child.conns[innov] = ConnGene(innov, src, tgt, float(rng.uniform(-1.0, 1.0)))

    if rng.random() < params.add_node_prob:
        # A split reuses the connection's innovation to name the new node,
        # so the same structural innovation gets the same id in any
        # lineage. Re-splitting is skipped to keep node ids unique.
        splittable = [c for _, c in sorted(child.conns.items())
                      if c.enabled and (NODE_ID_BASE + c.innovation) not in child.nodes]
        if splittable:
            conn = splittable[int(rng.integers(len(splittable)))]
            activation = ACTIVATION_NAMES[int(rng.integers(len(ACTIVATION_NAMES)))]
            new_id = NODE_ID_BASE + conn.innovation
            child.nodes[new_id] = NodeGene(new_id, activation)
            conn.enabled = False
            up = innovation_number(conn.src, new_id)
            down = innovation_number(new_id, conn.tgt)
            child.conns[up] = ConnGene(up, conn.src, new_id, 1.0)
            child.conns[down] = ConnGene(down, new_id, conn.tgt, conn.weight)

    if rng.random() < params.toggle_prob:
        innovs = sorted(child.conns)
        conn = child.conns[innovs[int(rng.integers(len(innovs)))]]
        conn.enabled = not conn.enabled

    return child


@dataclass
class BrainGenotype:
    """Dense weight matrix addressing every expressible oscillator weight."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (BRAIN_ROWS, BRAIN_COLS):
            raise ValueError(
                f"brain matrix must be {BRAIN_ROWS}x{BRAIN_COLS}, got {self.matrix.shape}"
            )

    def copy(self) -> "BrainGenotype":
        return BrainGenotype(self.matrix.copy())

    def to_obj(self) -> list:
        return self.matrix.tolist()

    @classmethod
    def from_obj(cls, obj) -> "BrainGenotype":
        return cls(np.array(obj, dtype=float))


def random_brain(rng: np.random.Generator) -> BrainGenotype:
    return BrainGenotype(rng.uniform(-1.0, 1.0, size=(BRAIN_ROWS, BRAIN_COLS)))


def brain_mutate(g: BrainGenotype, rng: np.random.Generator,
                 prob: float = 0.8, sd: float = 0.5) -> BrainGenotype:
    """Each entry independently gains N(0, sd) noise with probability prob.

    Draw order: one full-shape uniform block for the mask, then one
    full-shape normal block for the noise.
    """
    mask = rng.random(g.matrix.shape) < prob
    noise = rng.normal(0.0, sd, size=g.matrix.shape)
    return BrainGenotype(g.matrix + mask * noise)


def brain_crossover(a: BrainGenotype, b: BrainGenotype,
                    rng: np.random.Generator) -> BrainGenotype:
    """Uniform per-entry recombination."""
    mask = rng.random(a.matrix.shape) < 0.5
    return BrainGenotype(np.where(mask, a.matrix, b.matrix))


@dataclass
class Genotype:
    body: BodyGenotype
    brain: BrainGenotype

    def copy(self) -> "Genotype":
        return Genotype(self.body.copy(), self.brain.copy())

    def to_obj(self) -> dict:
        return {"body": self.body.to_obj(), "brain": self.brain.to_obj()}

    @classmethod
    def from_obj(cls, obj: dict) -> "Genotype":
        return cls(BodyGenotype.from_obj(obj["body"]), BrainGenotype.from_obj(obj["brain"]))


def genotype_hash(g: Genotype) -> str:
    """Stable content hash of the serialized genotype."""
    import hashlib
    import json

    text = json.dumps(g.to_obj(), separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def random_genotype(rng: np.random.Generator) -> Genotype:
    return Genotype(random_body(rng), random_brain(rng))
