"""Shared test helpers: hand-built robots, independent oracles, tiny runs."""

import functools
from types import SimpleNamespace

from bodybrain import evolution
from bodybrain.genotype import Genotype
from bodybrain.morphology import BACK, BRICK, FRONT, HINGE, LEFT, RIGHT, ModuleTree
from bodybrain.rng import derive_rng


def plus_tree() -> ModuleTree:
    """Core with one hinge on each of its four sockets."""
    tree = ModuleTree()
    for socket in (FRONT, LEFT, RIGHT, BACK):
        tree.attach(0, socket, HINGE, 0)
    return tree


def stacked_tree() -> ModuleTree:
    """Two hinges stacked along z on the same 2D cell.

    A 90-degree brick on the core's front socket turns its left socket
    upward, so the chain hung from it climbs in z while staying on the
    cell (0, 1).
    """
    tree = ModuleTree()
    brick = tree.attach(0, FRONT, BRICK, 90)
    h1 = tree.attach(brick, LEFT, HINGE, 0)
    tree.attach(h1, FRONT, HINGE, 0)
    return tree


def chain_tree(n: int, kind: str = HINGE) -> ModuleTree:
    """Core plus a straight chain of n modules along +y."""
    tree = ModuleTree()
    parent = 0
    for _ in range(n):
        parent = tree.attach(parent, FRONT, kind, 0)
    return tree


class ListWriter:
    """Collects run records in memory instead of writing files."""

    def __init__(self):
        self.records = []

    def write(self, record: dict):
        self.records.append(record)


def tiny_config(**overrides):
    """A seconds-scale configuration for loop-level tests."""
    from dataclasses import replace

    from bodybrain.config import ExperimentConfig

    base = ExperimentConfig(
        population=4,
        offspring=2,
        generations=2,
        learn_population=3,
        learn_candidates=3,
        learn_top=3,
        learn_iterations=2,
        eval_duration=4.0,
        repetitions=1,
    )
    return replace(base, **overrides)


# ---------------------------------------------------------------------------
# Independent ordered-forest edit distance, used as the oracle for the
# Zhang-Shasha implementation. Works on the same nested-list tree form but
# decomposes on the first tree of each forest instead of keyroots.


def _freeze(nested):
    kind, rotation, children = nested
    return ((kind, rotation), tuple(_freeze(c) for c in children))


def _tree_size(t) -> int:
    return 1 + sum(_tree_size(c) for c in t[1])


@functools.lru_cache(maxsize=None)
def _forest_dist(fa: tuple, fb: tuple) -> int:
    if not fa and not fb:
        return 0
    if not fa:
        return sum(_tree_size(t) for t in fb)
    if not fb:
        return sum(_tree_size(t) for t in fa)
    a, rest_a = fa[0], fa[1:]
    b, rest_b = fb[0], fb[1:]
    best = 1 + _forest_dist(a[1] + rest_a, fb)
    best = min(best, 1 + _forest_dist(fa, b[1] + rest_b))
    relabel = 0 if a[0] == b[0] else 1
    best = min(best, _forest_dist(a[1], b[1]) + _forest_dist(rest_a, rest_b) + relabel)
    return best


def forest_edit_distance(a, b) -> int:
    return _forest_dist((_freeze(a),), (_freeze(b),))


# ---------------------------------------------------------------------------
# Reproduction replay: rebuild an offspring's pre-learning genotype from
# nothing but logged records and the derived random streams. Only valid
# for runs without an environment change before the offspring's
# generation, since a change rewrites parent fitness between the logged
# population record and selection.


def replay_reproduce(cfg, log, record) -> tuple:
    gen = record["generation"]
    slot = record["id"] - cfg.population - (gen - 1) * cfg.offspring
    prev = log.population_record(gen - 1)
    pool = []
    for mid, fit in zip(prev["members"], prev["fitness"]):
        rec = log.individuals[mid]
        pool.append(SimpleNamespace(id=mid, fitness=fit,
                                    genotype=Genotype.from_obj(rec["genotype"])))
    p1, p2 = evolution.select_parents(pool, derive_rng(cfg.master_seed, "select", gen, slot))
    return evolution.reproduce(
        p1, p2, cfg,
        derive_rng(cfg.master_seed, "body", gen, slot),
        derive_rng(cfg.master_seed, "brain", gen, slot),
    )
