"""Optimizers over genomes: generational GA, (1+1) online evolution, random search.

All randomness is drawn from streams named after the master seed, so a run is
reproducible bit for bit whatever ``n_jobs`` is.  Stream labels:

* ``("init",)``            initial population
* ``("breed", g)``         selection and mutation producing generation ``g``
* ``(label, g, i)``        evaluation seed of individual ``i`` in generation ``g``
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .controllers import init_genome, mutate
from .exceptions import ConfigError, ParameterError
from .fitness import evaluate_fitness, simulate
from .rng import check_random_state, derive_seed, make_rng


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 50
    generations: int = 100
    mutation_rate: float = 0.1
    mutation_delta: float = 0.4
    elitism: int = 1

    def __post_init__(self):
        errors = []
        if self.population_size < 1:
            errors.append(f"population_size must be >= 1 (got {self.population_size})")
        if self.generations < 1:
            errors.append(f"generations must be >= 1 (got {self.generations})")
        if not 0.0 <= self.mutation_rate <= 1.0:
            errors.append(f"mutation_rate must be in [0, 1] (got {self.mutation_rate})")
        if self.mutation_delta <= 0:
            errors.append(f"mutation_delta must be > 0 (got {self.mutation_delta})")
        if not 0 <= self.elitism < self.population_size:
            errors.append(f"elitism must be in [0, population_size) (got {self.elitism})")
        if errors:
            raise ConfigError(errors)

    def to_dict(self):
        return {"population_size": self.population_size, "generations": self.generations,
                "mutation_rate": self.mutation_rate, "mutation_delta": self.mutation_delta,
                "elitism": self.elitism}


@dataclass
class EvaluationLog:
    """One evaluation slot of an evolutionary run."""

    generation: int
    individual: int
    seed: int
    fitness: float
    wall_time: float
    carried: bool = False

    def to_dict(self):
        return {"generation": self.generation, "individual": self.individual, "seed": self.seed,
                "fitness": self.fitness, "wall_time": self.wall_time, "carried": self.carried}


@dataclass
class EvolutionTrace:
    best_fitness: np.ndarray
    mean_fitness: np.ndarray
    best_genome: np.ndarray
    best_record: object
    evaluations: list = field(default_factory=list)
    simulation_steps: int = 0

    @property
    def final_best_fitness(self):
        return float(self.best_fitness[-1])

    @property
    def n_simulated(self):
        return sum(not e.carried for e in self.evaluations)

    def summary(self):
        return {"generations": len(self.best_fitness),
                "evaluation_slots": len(self.evaluations),
                "simulated_evaluations": self.n_simulated,
                "simulation_steps": self.simulation_steps,
                "final_best_fitness": self.final_best_fitness,
                "best_fitness": [float(v) for v in self.best_fitness],
                "mean_fitness": [float(v) for v in self.mean_fitness]}


def proportionate_select(fitnesses, rng=None, size=None):
    """Roulette-wheel draw(s) with probability ``f_i / sum(f)``; uniform when the sum is 0."""
    f = np.asarray(fitnesses, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise ParameterError("cannot select from an empty population")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise ParameterError("selection weights must be finite and non-negative")
    rng = check_random_state(rng)
    n = 1 if size is None else size
    total = f.sum()
    if total <= 0.0:
        idx = rng.integers(0, f.size, size=n)
    else:
        cum = np.cumsum(f)
        idx = np.searchsorted(cum, rng.random(n) * cum[-1], side="right")
        idx = np.minimum(idx, f.size - 1)
    return int(idx[0]) if size is None else idx


def _map(fn, items, n_jobs):
    if n_jobs is None or n_jobs == 1 or len(items) < 2:
        return [fn(it) for it in items]
    workers = None if n_jobs < 0 else n_jobs
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _timed_eval(genome, cfg, seed):
    t0 = time.perf_counter()
    f, rec = evaluate_fitness(genome, cfg, seed)
    return f, rec, time.perf_counter() - t0


def breed(genomes, fitnesses, ga_cfg, rng, weights=None):
    """Next generation: the ``elitism`` best unchanged, then mutants of roulette-picked parents.

    Returns ``(children, elite_indices)``; elites come first in ``children``.
    ``weights`` replaces the fitnesses as selection weights (novelty search).
    """
    fitnesses = np.asarray(fitnesses, dtype=np.float64)
    weights = fitnesses if weights is None else np.asarray(weights, dtype=np.float64)
    # stable sort keeps the lowest index among equally fit individuals
    elite = np.argsort(-fitnesses, kind="stable")[:ga_cfg.elitism]
    children = [genomes[i] for i in elite]
    parents = proportionate_select(weights, rng, size=ga_cfg.population_size - ga_cfg.elitism)
    for p in parents:
        children.append(mutate(genomes[p], ga_cfg.mutation_rate, ga_cfg.mutation_delta, rng))
    return children, elite


def run_generational_ga(eval_cfg, ga_cfg, master_seed, n_jobs=1, callback=None, label="ga"):
    """Evolve one homogeneous-swarm genome with fitness-proportionate selection.

    Elites keep their stored fitness and run record; they are not re-simulated.
    ``callback(generation, best, mean)`` is called after every generation.
    """
    P = ga_cfg.population_size
    genomes = [init_genome(eval_cfg.layout, make_rng(master_seed, "init", i)) for i in range(P)]
    fit = np.zeros(P)
    records = [None] * P
    carried = np.zeros(P, dtype=bool)
    best_hist, mean_hist, logs = [], [], []
    steps = 0
    for g in range(ga_cfg.generations):
        todo = [i for i in range(P) if not carried[i]]
        seeds = {i: derive_seed(master_seed, label, g, i) for i in range(P)}
        results = _map(lambda i: _timed_eval(genomes[i], eval_cfg, seeds[i]), todo, n_jobs)
        for i, (f, rec, wt) in zip(todo, results):
            fit[i], records[i] = f, rec
            logs.append(EvaluationLog(g, i, seeds[i], float(f), wt))
            steps += eval_cfg.repetitions * eval_cfg.n_steps
        for i in np.flatnonzero(carried):
            logs.append(EvaluationLog(g, int(i), records[i].seed, float(fit[i]), 0.0, carried=True))
        best_hist.append(float(fit.max()))
        mean_hist.append(float(fit.mean()))
        if callback is not None:
            callback(g, best_hist[-1], mean_hist[-1])
        if g == ga_cfg.generations - 1:
            break
        children, elite = breed(genomes, fit, ga_cfg, make_rng(master_seed, "breed", g + 1))
        e = len(elite)
        fit = np.concatenate([fit[elite], np.zeros(P - e)])
        records = [records[i] for i in elite] + [None] * (P - e)
        carried = np.arange(P) < e
        genomes = children
    best = int(np.argmax(fit))
    return EvolutionTrace(np.array(best_hist), np.array(mean_hist), np.array(genomes[best]),
                          records[best], logs, steps)


@dataclass
class OnePlusOneState:
    """Champion of an online (1+1) run; ``champion_fitness`` is the smoothed estimate F."""

    champion: np.ndarray
    champion_fitness: float = None
    evaluation_count: int = 0
    alpha: float = 0.2
    reeval_prob: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.reeval_prob <= 1.0:
            raise ParameterError(f"reeval_prob must be in [0, 1], got {self.reeval_prob}")
        self.champion = np.asarray(self.champion, dtype=np.float64)


def reevaluation_update(previous, observed, alpha):
    """Exponentially weighted estimate after a re-evaluation of the champion."""
    return alpha * observed + (1.0 - alpha) * previous


@dataclass
class OnePlusOneTrace:
    fitness: np.ndarray          # champion estimate F after every evaluation
    events: list                 # "init", "reeval", "accept" or "reject"
    state: OnePlusOneState
    world: object


def run_one_plus_one(eval_cfg, state, max_evaluations, rng=None, mutation_rate=0.1,
                     mutation_delta=0.4, world=None, evaluate=None):
    """Online elitist (1+1) evolution where every evaluation continues the last world.

    ``evaluate(genome, world, seed) -> (fitness, final_world)`` defaults to one
    simulation run of ``eval_cfg.n_steps`` steps started from ``world`` (a
    uniform placement when ``world`` is None).  ``state`` is updated in place.
    """
    rng = check_random_state(rng)
    if evaluate is None:
        def evaluate(genome, w, seed):
            rec = simulate(genome, eval_cfg, seed, world=w)
            return rec.fitness, rec.final_world()

    def draw_seed():
        return int(rng.integers(0, 2 ** 63 - 1))

    hist, events = [], []
    n = 0
    if state.champion_fitness is None:
        state.champion_fitness, world = evaluate(state.champion, world, draw_seed())
        state.evaluation_count += 1
        n += 1
        hist.append(state.champion_fitness)
        events.append("init")
    while n < max_evaluations:
        if rng.random() < state.reeval_prob:
            f, world = evaluate(state.champion, world, draw_seed())
            state.champion_fitness = reevaluation_update(state.champion_fitness, f, state.alpha)
            events.append("reeval")
        else:
            child = mutate(state.champion, mutation_rate, mutation_delta, rng)
            f, world = evaluate(child, world, draw_seed())
            if f > state.champion_fitness:
                state.champion, state.champion_fitness = child, f
                events.append("accept")
            else:
                events.append("reject")
        state.evaluation_count += 1
        n += 1
        hist.append(state.champion_fitness)
    return OnePlusOneTrace(np.array(hist, dtype=np.float64), events, state, world)


def random_baseline(eval_cfg, count, mode="plain", pool_size=1, seed=0, n_jobs=1):
    """Random-search baselines.

    ``plain``: ``count`` random genomes evaluated once each.  ``selected``:
    ``count`` times, the best of ``pool_size`` random genomes.  Returns a list
    of ``(genome, fitness, record)``.
    """
    if mode not in ("plain", "selected"):
        raise ParameterError(f"mode must be 'plain' or 'selected', got {mode!r}")
    if count < 1:
        raise ParameterError("count must be >= 1")
    pool = 1 if mode == "plain" else pool_size
    if pool < 1:
        raise ParameterError("pool_size must be >= 1")
    out = []
    for c in range(count):
        def one(j, c=c):
            g = init_genome(eval_cfg.layout, make_rng(seed, "random", c, j, "genome"))
            f, rec = evaluate_fitness(g, eval_cfg, derive_seed(seed, "random", c, j, "eval"))
            return g, f, rec
        best = None
        for g, f, rec in _map(one, list(range(pool)), n_jobs):
            if best is None or f > best[1]:
                best = (g, f, rec)
        out.append(best)
    return out
