"""Lifetime learning of controller weights with reversible DE.

The learner maintains a small population of weight vectors. Each
iteration draws random triplets (w_i, w_j, w_k) and produces three
candidates per triplet:

    v1 = w_i + F * (w_j - w_k)
    v2 = w_j + F * (w_k - v1)
    v3 = w_k + F * (v1 - v2)

so every candidate chain is reversible. Candidates then undergo uniform
crossover against their triplet member, every candidate is assessed, and
plus-selection keeps the best vectors of parents and candidates together.
The inherited vector is sample 0 of the initial population and the rest
are Gaussian perturbations of it, so the first assessment of a lifetime
is exactly the robot's fitness before learning.

With a population of mu, N candidates per iteration and T iterations the
assessment count is exactly mu + N * (T - 1): the initial population is
assessed in iteration 1, candidates in iterations 2..T.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LearnerConfig:
    population: int = 10
    candidates: int = 30
    top: int = 10
    scale: float = 0.5
    crossover_rate: float = 0.9
    iterations: int = 10
    init_sd: float = 0.5

    def __post_init__(self):
        if self.population < 3:
            raise ValueError("learner population must be at least 3")
        if self.candidates % 3 != 0 or self.candidates <= 0:
            raise ValueError("candidates per iteration must be a positive multiple of 3")
        if self.top < 3:
            raise ValueError("top-sample size must be at least 3")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")

    @property
    def assessments(self) -> int:
        return self.population + self.candidates * (self.iterations - 1)


@dataclass
class LearnResult:
    best_vector: np.ndarray
    best_reward: float
    initial_rewards: list
    curve: list = field(default_factory=list)
    assessments: int = 0


def init_population(vector: np.ndarray, cfg: LearnerConfig,
                    rng: np.random.Generator) -> np.ndarray:
    """Inherited vector plus population-1 Gaussian perturbations of it."""
    vector = np.asarray(vector, dtype=float)
    pop = np.empty((cfg.population, vector.size))
    pop[0] = vector
    pop[1:] = vector + rng.normal(0.0, cfg.init_sd, size=(cfg.population - 1, vector.size))
    return pop


def revde_mutate(wi: np.ndarray, wj: np.ndarray, wk: np.ndarray,
                 scale: float = 0.5) -> tuple:
    """The reversible three-candidate mutation."""
    v1 = wi + scale * (wj - wk)
    v2 = wj + scale * (wk - v1)
    v3 = wk + scale * (v1 - v2)
    return v1, v2, v3


def uniform_crossover(candidate: np.ndarray, base: np.ndarray, rate: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Each dimension keeps the candidate value with probability rate,
    otherwise reverts to the base value."""
    mask = rng.random(candidate.shape) < rate
    return np.where(mask, candidate, base)


def learn(vector: np.ndarray, assess, cfg: LearnerConfig,
          rng: np.random.Generator) -> LearnResult:
    """Optimize a weight vector against an assessment callable.

    assess(vector) -> reward, higher is better. Samples whose reward is
    not finite are discarded with a warning and selection proceeds on the
    remainder. The best vector ever assessed is tracked separately, so
    the returned reward never decreases across iterations.
    """
    pop = init_population(vector, cfg, rng)
    rewards = np.array([assess(p) for p in pop], dtype=float)
    count = cfg.population
    initial_rewards = [float(r) for r in rewards]
    pop, rewards = _drop_non_finite(pop, rewards)
    if len(pop) == 0:
        raise ValueError("every initial sample assessed non-finite")
    best_idx = int(np.argmax(rewards))
    best_vector = pop[best_idx].copy()
    best_reward = float(rewards[best_idx])
    curve = [(1, best_reward)]

    for iteration in range(2, cfg.iterations + 1):
        if len(pop) < 3:
            raise ValueError("fewer than 3 finite samples left; cannot draw triplets")
        cand_list = []
        for _ in range(cfg.candidates // 3):
            i, j, k = rng.choice(len(pop), size=3, replace=False)
            v1, v2, v3 = revde_mutate(pop[i], pop[j], pop[k], cfg.scale)
            cand_list.append(uniform_crossover(v1, pop[i], cfg.crossover_rate, rng))
            cand_list.append(uniform_crossover(v2, pop[j], cfg.crossover_rate, rng))
            cand_list.append(uniform_crossover(v3, pop[k], cfg.crossover_rate, rng))
        cands = np.array(cand_list)
        cand_rewards = np.array([assess(c) for c in cands], dtype=float)
        count += len(cands)
        pool = np.concatenate([pop, cands])
        pool_rewards = np.concatenate([rewards, cand_rewards])
        pool, pool_rewards = _drop_non_finite(pool, pool_rewards)
        order = np.argsort(-pool_rewards, kind="stable")[: cfg.top]
        pop = pool[order]
        rewards = pool_rewards[order]
        if rewards[0] > best_reward:
            best_reward = float(rewards[0])
            best_vector = pop[0].copy()
        curve.append((iteration, best_reward))

    return LearnResult(best_vector, best_reward, initial_rewards, curve, count)


def _drop_non_finite(pop: np.ndarray, rewards: np.ndarray) -> tuple:
    finite = np.isfinite(rewards)
    if not np.all(finite):
        warnings.warn(
            f"discarding {int((~finite).sum())} sample(s) with non-finite reward",
            RuntimeWarning,
            stacklevel=3,
        )
        pop = pop[finite]
        rewards = rewards[finite]
    return pop, rewards
