"""Novelty search over the final-step sensor averages of the swarm."""

from dataclasses import dataclass

import numpy as np

from .controllers import init_genome
from .evolution import GAConfig, _map, breed
from .exceptions import ConfigError, ParameterError
from .fitness import simulate
from .rng import derive_seed, make_rng
from .world import TorusWorld


@dataclass(frozen=True)
class NoveltyConfig:
    k: int = 10
    archive_prob: float = 0.02
    repetitions: int = 10

    def __post_init__(self):
        errors = []
        if self.k < 1:
            errors.append(f"k must be >= 1 (got {self.k})")
        if not 0.0 <= self.archive_prob <= 1.0:
            errors.append(f"archive_prob must be in [0, 1] (got {self.archive_prob})")
        if self.repetitions < 1:
            errors.append(f"repetitions must be >= 1 (got {self.repetitions})")
        if errors:
            raise ConfigError(errors)

    def to_dict(self):
        return {"k": self.k, "archive_prob": self.archive_prob, "repetitions": self.repetitions}


def _behavior_runs(genome, eval_cfg, repetitions, seed):
    cfg = eval_cfg.replace(repetitions=1)
    return [simulate(genome, cfg, derive_seed(seed, "rep", r)) for r in range(repetitions)]


def behavior_vector(genome, eval_cfg, repetitions, seed):
    """Final-step sensor values averaged over the swarm, then over repetitions."""
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1")
    runs = _behavior_runs(genome, eval_cfg, repetitions, seed)
    return np.mean([r.final_sensor_mean for r in runs], axis=0)


def novelty_score(individual, population, archive, k, self_index=None):
    """Mean Euclidean distance to the ``k`` nearest vectors of population and archive.

    The individual itself is left out of the pool: by ``self_index`` into
    ``population`` when given, otherwise by dropping one row equal to it.
    With fewer than ``k`` candidates the mean runs over all of them.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    x = np.asarray(individual, dtype=np.float64)
    pop = np.asarray(population, dtype=np.float64).reshape(-1, x.size)
    arc = np.asarray(archive, dtype=np.float64).reshape(-1, x.size)
    if self_index is None:
        same = np.flatnonzero(np.all(pop == x, axis=1))
        self_index = same[0] if same.size else None
    if self_index is not None:
        pop = np.delete(pop, self_index, axis=0)
    pool = np.vstack([pop, arc])
    if len(pool) == 0:
        raise ParameterError("no neighbors to compare against")
    d = np.sort(np.sqrt(((pool - x) ** 2).sum(axis=1)))
    return float(d[:k].mean())


def novelty_scores(population, archive, k):
    """``novelty_score`` of every population member against the rest and the archive."""
    pop = np.asarray(population, dtype=np.float64)
    arc = np.asarray(archive, dtype=np.float64).reshape(-1, pop.shape[1])
    pool = np.vstack([pop, arc])
    if len(pool) < 2:
        raise ParameterError("no neighbors to compare against")
    d = np.sqrt(((pop[:, None, :] - pool[None, :, :]) ** 2).sum(axis=2))
    d[np.arange(len(pop)), np.arange(len(pop))] = np.inf
    d.sort(axis=1)
    kk = min(k, len(pool) - 1)
    return d[:, :kk].mean(axis=1)


@dataclass
class NoveltyIndividual:
    generation: int
    index: int
    genome: np.ndarray
    vector: np.ndarray
    novelty: float
    fitness: float
    final_poses: np.ndarray
    grid_size: int

    def final_world(self):
        return TorusWorld(self.grid_size, *self.final_poses.T)


@dataclass
class NoveltyResult:
    individuals: list
    archive: np.ndarray


def run_novelty_search(eval_cfg, ga_cfg, novelty_cfg, seed, n_jobs=1):
    """Generational search with selection proportionate to novelty, no elitism.

    Every individual's behavior vector is averaged over
    ``novelty_cfg.repetitions`` runs; its fitness (minimum over those runs) and
    the final poses of the first run are kept for later analysis.  Archive
    insertion happens after the generation is scored.
    """
    if ga_cfg.elitism:
        ga_cfg = GAConfig(ga_cfg.population_size, ga_cfg.generations, ga_cfg.mutation_rate,
                          ga_cfg.mutation_delta, 0)
    P = ga_cfg.population_size
    genomes = [init_genome(eval_cfg.layout, make_rng(seed, "init", i)) for i in range(P)]
    archive = np.zeros((0, eval_cfg.layout.n_sensors))
    everyone = []
    for g in range(ga_cfg.generations):
        def run(i, g=g):
            return _behavior_runs(genomes[i], eval_cfg, novelty_cfg.repetitions,
                                  derive_seed(seed, "novelty", g, i))
        runs = _map(run, list(range(P)), n_jobs)
        vectors = np.array([np.mean([r.final_sensor_mean for r in rr], axis=0) for rr in runs])
        rho = (novelty_scores(vectors, archive, novelty_cfg.k) if P + len(archive) > 1
               else np.zeros(P))
        for i, rr in enumerate(runs):
            everyone.append(NoveltyIndividual(g, i, genomes[i], vectors[i], float(rho[i]),
                                              min(r.fitness for r in rr), rr[0].final_poses,
                                              eval_cfg.grid_size))
        rng = make_rng(seed, "breed", g + 1)
        add = rng.random(P) < novelty_cfg.archive_prob
        archive = np.vstack([archive, vectors[add]])
        if g < ga_cfg.generations - 1:
            genomes, _ = breed(genomes, rho, ga_cfg, rng)
    return NoveltyResult(everyone, archive)
