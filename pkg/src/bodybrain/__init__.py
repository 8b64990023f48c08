"""Joint evolution of modular robot bodies and CPG brains with lifetime learning.

The library evolves tree-shaped modular robots on a point-navigation task.
Each robot body is decoded from a CPPN genotype, its brain is a network of
coupled oscillators whose weights are addressed by a fixed-size matrix
genotype, and every individual refines those weights during its lifetime
with a reversible differential evolution learner. Learned weights are
either written back into the genotype (lamarckian mode) or discarded from
inheritance (darwinian mode).
"""

__version__ = "0.1.0"

from .genotype import (
    BodyGenotype,
    BrainGenotype,
    Genotype,
    body_crossover,
    body_mutate,
    brain_crossover,
    brain_mutate,
    random_body,
    random_brain,
)
from .morphology import ModuleTree, develop_body, tree_distance
from .controller import CpgNetwork, build_network, writeback
from .environment import TaskSpec, Terrain, fitness, make_schedule, targets_reached
from .simbackend import SurrogateParams, Trajectory, evaluate
from .learning import LearnerConfig, LearnResult, learn
from .evolution import Individual, run
from .config import ExperimentConfig

__all__ = [
    "BodyGenotype",
    "BrainGenotype",
    "Genotype",
    "body_crossover",
    "body_mutate",
    "brain_crossover",
    "brain_mutate",
    "random_body",
    "random_brain",
    "ModuleTree",
    "develop_body",
    "tree_distance",
    "CpgNetwork",
    "build_network",
    "writeback",
    "TaskSpec",
    "Terrain",
    "fitness",
    "make_schedule",
    "targets_reached",
    "SurrogateParams",
    "Trajectory",
    "evaluate",
    "LearnerConfig",
    "LearnResult",
    "learn",
    "Individual",
    "run",
    "ExperimentConfig",
]
