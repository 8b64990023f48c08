"""The outer evolutionary loop joining body evolution and brain learning.

Each generation: two binary tournaments pick parents, the child body is a
mutated crossover of both parents, the child brain is an asexual mutation
of the fitter parent's brain genotype. Every child develops, then learns
controller weights for its lifetime budget, and is evaluated with the
learned controller. In lamarckian mode the learned weights are written
back into the child's brain genotype before it can ever reproduce; in
darwinian mode the genotype keeps only inherited-and-mutated values and
the learned weights live solely in the phenotype. Survivor selection
keeps the best population-size individuals of parents plus offspring.

When the environment schedule switches terrain, the survivors are
re-evaluated on the new terrain with their learned controllers before the
generation proceeds; their previous fitness is retained in the log, which
is what the transferability analysis consumes.

All randomness is drawn from streams derived per (purpose, generation,
slot), so results are independent of worker scheduling.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig, config_hash
from .controller import build_network, writeback
from .environment import fitness, make_schedule, rugged_terrain
from .genotype import (
    Genotype,
    body_crossover,
    body_mutate,
    brain_mutate,
    random_genotype,
)
from .learning import learn
from .morphology import develop_body
from .rng import derive_rng
from .simbackend import evaluate


@dataclass
class Individual:
    id: int
    generation: int
    parents: tuple
    genotype: Genotype
    tree: object
    learned: np.ndarray
    fitness_before: float
    fitness_after: float
    fitness: float
    curve: list = field(default_factory=list)
    terrain: str = "flat"


@dataclass
class RunResult:
    population: list
    assessments: int
    evaluations: int
    schedule: object


def select_parents(population: list, rng: np.random.Generator) -> tuple:
    """Two independent binary tournaments, drawn with replacement.

    Each tournament draws two uniform indices in one call and keeps the
    fitter individual; ties go to the first drawn.
    """
    winners = []
    for _ in range(2):
        i, j = rng.integers(0, len(population), size=2)
        a, b = population[i], population[j]
        winners.append(a if a.fitness >= b.fitness else b)
    return winners[0], winners[1]


def reproduce(p1: Individual, p2: Individual, cfg: ExperimentConfig,
              rng_body: np.random.Generator,
              rng_brain: np.random.Generator) -> tuple:
    """Child genotype from a parent pair; returns (genotype, parent ids).

    The body recombines both parents (crossover gate, then mutation); the
    brain mutates the fitter parent's brain genotype asexually. Parent
    ids are reported fitter first.
    """
    if p1.fitness >= p2.fitness:
        fitter, other = p1, p2
    else:
        fitter, other = p2, p1
    if rng_body.random() < cfg.body_crossover_prob:
        body = body_crossover(fitter.genotype.body, other.genotype.body, rng_body)
    else:
        body = fitter.genotype.body.copy()
    body = body_mutate(body, rng_body, cfg.body_mutation_params())
    brain = brain_mutate(fitter.genotype.brain, rng_brain,
                         cfg.brain_mutation_prob, cfg.brain_mutation_sd)
    return Genotype(body, brain), (fitter.id, other.id)


def end_of_learning(genotype: Genotype, tree, learned: np.ndarray,
                    mode: str) -> Genotype:
    """Apply the inheritance mode once learning has finished.

    Lamarckian: learned weights overwrite their genotype addresses.
    Darwinian: the genotype is returned untouched.
    """
    if mode == "darwinian":
        return genotype
    if mode != "lamarckian":
        raise ValueError(f"unknown mode {mode!r}")
    network = build_network(tree, genotype.brain)
    network.set_weights(learned)
    return Genotype(genotype.body, writeback(genotype.brain, network))


def survivor_selection(population: list, offspring: list, mu: int) -> list:
    """Best mu of parents plus offspring by current fitness.

    Ties prefer the younger individual (later birth generation), then the
    smaller id.
    """
    pool = list(population) + list(offspring)
    pool.sort(key=lambda ind: (-ind.fitness, -ind.generation, ind.id))
    return pool[:mu]


def on_environment_change(population: list, terrain, task, sparams) -> list:
    """Re-evaluate survivors on a new terrain with learned controllers.

    Mutates each individual's current fitness and terrain tag; returns
    one {id, old, new} entry per survivor for the log.
    """
    entries = []
    for ind in population:
        network = build_network(ind.tree, ind.genotype.brain)
        network.set_weights(ind.learned)
        traj = evaluate(ind.tree, network, terrain, task, sparams)
        new_fit = fitness(traj, task)
        entries.append({"id": ind.id, "old": ind.fitness, "new": new_fit})
        ind.fitness = new_fit
        ind.terrain = terrain.name
    return entries


@dataclass
class _LifetimeJob:
    """Everything one lifetime (develop, learn, evaluate) needs."""

    genotype: Genotype
    terrain: object
    task: object
    sparams: object
    learner: object
    master_seed: int
    generation: int
    slot: int
    learn_enabled: bool


def _run_lifetime(job: _LifetimeJob) -> dict:
    tree = develop_body(job.genotype.body)
    network = build_network(tree, job.genotype.brain)
    inherited = network.weights.copy()

    def assess(weights):
        network.set_weights(weights)
        traj = evaluate(tree, network, job.terrain, job.task, job.sparams)
        return fitness(traj, job.task)

    if job.learn_enabled:
        rng = derive_rng(job.master_seed, "learn", job.generation, job.slot)
        result = learn(inherited, assess, job.learner, rng)
        learned = result.best_vector
        fitness_after = assess(learned)
        return {
            "tree": tree,
            "learned": learned,
            "fitness_before": result.initial_rewards[0],
            "fitness_after": fitness_after,
            "curve": result.curve,
            "assessments": result.assessments,
            "evaluations": result.assessments + 1,
        }
    value = assess(inherited)
    return {
        "tree": tree,
        "learned": inherited,
        "fitness_before": value,
        "fitness_after": value,
        "curve": [],
        "assessments": 0,
        "evaluations": 1,
    }


def _map_jobs(jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [_run_lifetime(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_lifetime, jobs))


def run(cfg: ExperimentConfig, writer, resume=None) -> RunResult:
    """Execute one evolutionary run, streaming records to the writer.

    The writer needs a write(record: dict) method. With resume, the
    population of the last complete generation is taken as given and the
    loop continues from the next one; because random streams are derived
    per (generation, slot), the continuation is identical to an
    uninterrupted run.
    """
    cfg.validate()
    task = cfg.task_spec()
    sparams = cfg.surrogate_params()
    learner = cfg.learner_config()
    rugged = rugged_terrain(cfg.rugged_amplitude, cfg.rugged_wavelength,
                            cfg.rugged_octaves, cfg.terrain_seed)
    schedule = make_schedule(cfg.setup, cfg.generations, rugged)
    assessments = 0
    evaluations = 0

    if resume is None:
        writer.write({
            "type": "header",
            "schema": SCHEMA_VERSION,
            "config": config_hash(cfg),
        })
        terrain = schedule.terrain_at(0)
        jobs = [
            _LifetimeJob(
                random_genotype(derive_rng(cfg.master_seed, "init", 0, slot)),
                terrain, task, sparams, learner, cfg.master_seed, 0, slot,
                cfg.learn_initial_generation,
            )
            for slot in range(cfg.population)
        ]
        population = []
        for slot, (job, res) in enumerate(zip(jobs, _map_jobs(jobs, cfg.workers))):
            genotype = end_of_learning(job.genotype, res["tree"], res["learned"], cfg.mode)
            ind = Individual(
                id=slot, generation=0, parents=(), genotype=genotype,
                tree=res["tree"], learned=res["learned"],
                fitness_before=res["fitness_before"],
                fitness_after=res["fitness_after"],
                fitness=res["fitness_after"], curve=res["curve"],
                terrain=terrain.name,
            )
            assessments += res["assessments"]
            evaluations += res["evaluations"]
            writer.write(_individual_record(ind))
            population.append(ind)
        writer.write(_population_record(0, terrain.name, population))
        start_gen = 1
    else:
        population = list(resume.population)
        start_gen = resume.next_generation

    for gen in range(start_gen, cfg.generations + 1):
        if schedule.phase_of(gen) != schedule.phase_of(gen - 1):
            terrain = schedule.terrain_at(gen)
            old_name = schedule.terrain_at(gen - 1).name
            entries = on_environment_change(population, terrain, task, sparams)
            evaluations += len(entries)
            writer.write({
                "type": "env_change",
                "generation": gen,
                "old_terrain": old_name,
                "new_terrain": terrain.name,
                "survivors": entries,
            })
        terrain = schedule.terrain_at(gen)

        jobs = []
        parent_pairs = []
        for slot in range(cfg.offspring):
            rng_select = derive_rng(cfg.master_seed, "select", gen, slot)
            p1, p2 = select_parents(population, rng_select)
            genotype, parents = reproduce(
                p1, p2, cfg,
                derive_rng(cfg.master_seed, "body", gen, slot),
                derive_rng(cfg.master_seed, "brain", gen, slot),
            )
            parent_pairs.append(parents)
            jobs.append(_LifetimeJob(genotype, terrain, task, sparams, learner,
                                     cfg.master_seed, gen, slot, True))

        offspring = []
        for slot, (job, res) in enumerate(zip(jobs, _map_jobs(jobs, cfg.workers))):
            genotype = end_of_learning(job.genotype, res["tree"], res["learned"], cfg.mode)
            ind = Individual(
                id=cfg.population + (gen - 1) * cfg.offspring + slot,
                generation=gen, parents=parent_pairs[slot], genotype=genotype,
                tree=res["tree"], learned=res["learned"],
                fitness_before=res["fitness_before"],
                fitness_after=res["fitness_after"],
                fitness=res["fitness_after"], curve=res["curve"],
                terrain=terrain.name,
            )
            assessments += res["assessments"]
            evaluations += res["evaluations"]
            writer.write(_individual_record(ind))
            offspring.append(ind)

        population = survivor_selection(population, offspring, cfg.population)
        writer.write(_population_record(gen, terrain.name, population))

    return RunResult(population, assessments, evaluations, schedule)


SCHEMA_VERSION = "1.0"


def _individual_record(ind: Individual) -> dict:
    return {
        "type": "individual",
        "id": ind.id,
        "generation": ind.generation,
        "parents": list(ind.parents),
        "terrain": ind.terrain,
        "fitness_before": float(ind.fitness_before),
        "fitness_after": float(ind.fitness_after),
        "curve": [[int(i), float(r)] for i, r in ind.curve],
        "tree": ind.tree.to_nested(),
        "learned": [float(v) for v in ind.learned],
        "genotype": ind.genotype.to_obj(),
    }


def _population_record(generation: int, terrain: str, population: list) -> dict:
    return {
        "type": "population",
        "generation": generation,
        "terrain": terrain,
        "members": [ind.id for ind in population],
        "fitness": [float(ind.fitness) for ind in population],
    }
