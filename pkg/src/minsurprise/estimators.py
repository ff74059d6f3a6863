"""scikit-learn style wrappers around the functional API.

The optimizers learn a controller rather than a mapping from data, so their
``fit`` takes no training data; ``predict`` runs the evolved controller on
given worlds.  ``PatternClassifier`` is stateless and labels worlds.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .analysis import Behavior, classify
from .controllers import NetworkLayout, init_genome
from .evolution import GAConfig, OnePlusOneState, run_generational_ga, run_one_plus_one
from .fitness import EvalConfig, simulate
from .novelty import NoveltyConfig, run_novelty_search
from .rng import make_rng
from .validation import check_is_fitted, check_seed, check_worlds


class _SwarmParams(BaseEstimator):
    def _eval_cfg(self):
        return EvalConfig(grid_size=self.grid_size, swarm_size=self.swarm_size,
                          n_steps=self.n_steps, repetitions=self.repetitions, noise=self.noise,
                          predefined=self.predefined or {},
                          predictor_removed=self.predictor_removed,
                          layout=NetworkLayout(self.actor_hidden, self.predictor_hidden))

    def _ga_cfg(self, elitism):
        return GAConfig(self.population_size, self.generations, self.mutation_rate,
                        self.mutation_delta, elitism)

    def predict(self, worlds, n_steps=None):
        """Final worlds after running the fitted genome from each given world."""
        check_is_fitted(self, "best_genome_")
        cfg = self._eval_cfg()
        if n_steps is not None:
            cfg = cfg.replace(n_steps=n_steps)
        out = []
        for i, w in enumerate(check_worlds(worlds)):
            c = cfg.replace(grid_size=w.side_length, swarm_size=max(w.n_agents, 1))
            out.append(simulate(self.best_genome_, c, i, world=w).final_world())
        return out


class SurpriseEvolver(_SwarmParams):
    """Generational GA maximizing prediction accuracy of a homogeneous swarm.

    After ``fit``: ``best_genome_``, ``best_fitness_``, ``fitness_curve_``,
    ``mean_curve_``, ``best_record_``, ``label_``.
    """

    def __init__(self, grid_size=15, swarm_size=100, n_steps=500, repetitions=10, noise=0.0,
                 population_size=50, generations=100, mutation_rate=0.1, mutation_delta=0.4,
                 elitism=1, predefined=None, predictor_removed=False, actor_hidden=8,
                 predictor_hidden=14, random_state=None, n_jobs=1):
        self.grid_size = grid_size
        self.swarm_size = swarm_size
        self.n_steps = n_steps
        self.repetitions = repetitions
        self.noise = noise
        self.population_size = population_size
        self.generations = generations
        self.mutation_rate = mutation_rate
        self.mutation_delta = mutation_delta
        self.elitism = elitism
        self.predefined = predefined
        self.predictor_removed = predictor_removed
        self.actor_hidden = actor_hidden
        self.predictor_hidden = predictor_hidden
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        seed = check_seed(self.random_state)
        trace = run_generational_ga(self._eval_cfg(), self._ga_cfg(self.elitism), seed,
                                    n_jobs=self.n_jobs)
        self.trace_ = trace
        self.best_genome_ = trace.best_genome
        self.best_fitness_ = trace.final_best_fitness
        self.fitness_curve_ = trace.best_fitness
        self.mean_curve_ = trace.mean_fitness
        self.best_record_ = trace.best_record
        self.label_ = classify(trace.best_record.final_world())
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "best_fitness_")
        return self.best_fitness_


class NoveltySearch(_SwarmParams):
    """Novelty search over final sensor averages; keeps every evaluated individual."""

    def __init__(self, grid_size=15, swarm_size=100, n_steps=500, repetitions=10, noise=0.0,
                 population_size=50, generations=100, mutation_rate=0.1, mutation_delta=0.4,
                 k=10, archive_prob=0.02, predefined=None, predictor_removed=False,
                 actor_hidden=8, predictor_hidden=14, random_state=None, n_jobs=1):
        self.grid_size = grid_size
        self.swarm_size = swarm_size
        self.n_steps = n_steps
        self.repetitions = repetitions
        self.noise = noise
        self.population_size = population_size
        self.generations = generations
        self.mutation_rate = mutation_rate
        self.mutation_delta = mutation_delta
        self.k = k
        self.archive_prob = archive_prob
        self.predefined = predefined
        self.predictor_removed = predictor_removed
        self.actor_hidden = actor_hidden
        self.predictor_hidden = predictor_hidden
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        seed = check_seed(self.random_state)
        nov = NoveltyConfig(self.k, self.archive_prob, self.repetitions)
        res = run_novelty_search(self._eval_cfg(), self._ga_cfg(0), nov, seed, self.n_jobs)
        self.individuals_ = res.individuals
        self.archive_ = res.archive
        best = max(res.individuals, key=lambda ind: ind.novelty)
        self.best_genome_ = best.genome
        return self

    def transform(self, X=None):
        """Behavior vectors of every evaluated individual, shape (n_individuals, R)."""
        check_is_fitted(self, "individuals_")
        return np.array([ind.vector for ind in self.individuals_])


class OnePlusOneEvolver(_SwarmParams):
    """Online (1+1) evolution where the swarm is never reset between evaluations."""

    def __init__(self, grid_size=15, swarm_size=100, n_steps=500, noise=0.0, max_evaluations=1000,
                 mutation_rate=0.1, mutation_delta=0.4, alpha=0.2, reeval_prob=0.2,
                 predefined=None, predictor_removed=False, actor_hidden=8, predictor_hidden=14,
                 random_state=None):
        self.grid_size = grid_size
        self.swarm_size = swarm_size
        self.n_steps = n_steps
        self.noise = noise
        self.max_evaluations = max_evaluations
        self.mutation_rate = mutation_rate
        self.mutation_delta = mutation_delta
        self.alpha = alpha
        self.reeval_prob = reeval_prob
        self.predefined = predefined
        self.predictor_removed = predictor_removed
        self.actor_hidden = actor_hidden
        self.predictor_hidden = predictor_hidden
        self.random_state = random_state

    repetitions = 1

    def fit(self, X=None, y=None):
        seed = check_seed(self.random_state)
        cfg = self._eval_cfg()
        state = OnePlusOneState(init_genome(cfg.layout, make_rng(seed, "init")),
                                alpha=self.alpha, reeval_prob=self.reeval_prob)
        trace = run_one_plus_one(cfg, state, self.max_evaluations, make_rng(seed, "online"),
                                 self.mutation_rate, self.mutation_delta)
        self.trace_ = trace
        self.best_genome_ = state.champion
        self.best_fitness_ = state.champion_fitness
        self.fitness_curve_ = trace.fitness
        self.world_ = trace.world
        return self


class PatternClassifier(BaseEstimator):
    """Labels final worlds with one of the nine patterns (or Unclassified)."""

    def fit(self, X=None, y=None):
        self.classes_ = np.array([b.value for b in Behavior])
        return self

    def predict(self, X):
        return np.array([str(classify(w).behavior) for w in check_worlds(X)])

    def predict_quality(self, X):
        return np.array([classify(w).quality for w in check_worlds(X)])

    def transform(self, X):
        """Per-class agent coverage counts in ``Behavior`` order (Unclassified is always 0)."""
        labels = [classify(w) for w in check_worlds(X)]
        return np.array([[lab.counts.get(b, 0) for b in Behavior] for lab in labels])
