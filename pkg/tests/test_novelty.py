import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minsurprise.evolution import GAConfig
from minsurprise.exceptions import ConfigError, ParameterError
from minsurprise.fitness import EvalConfig, simulate
from minsurprise.novelty import (NoveltyConfig, behavior_vector, novelty_score, novelty_scores,
                                 run_novelty_search)
from minsurprise.rng import derive_seed


def brute_novelty(i, pop, archive, k):
    pool = [p for j, p in enumerate(pop) if j != i] + list(archive)
    dists = sorted(math.dist(pop[i], q) for q in pool)
    near = dists[:k]
    return sum(near) / len(near)


@pytest.mark.parametrize("case", range(50))
def test_against_brute_force(case):
    rng = np.random.default_rng(case)
    P, A, k = rng.integers(2, 15), rng.integers(0, 10), int(rng.integers(1, 12))
    pop = rng.random((P, 14))
    arc = rng.random((A, 14))
    want = [brute_novelty(i, pop.tolist(), arc.tolist(), k) for i in range(P)]
    assert np.allclose(novelty_scores(pop, arc, k), want, atol=1e-12)
    for i in range(P):
        assert novelty_score(pop[i], pop, arc, k, self_index=i) == pytest.approx(want[i], abs=1e-12)


def test_self_dropped_by_value():
    pop = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert novelty_score(pop[0], pop, np.zeros((0, 2)), k=1) == 5.0


def test_duplicates_count_as_neighbors():
    pop = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
    assert novelty_scores(pop, np.zeros((0, 2)), 1)[0] == 0.0


@given(st.integers(0, 2 ** 32), st.integers(2, 10), st.integers(1, 10))
def test_nonnegative_and_monotone_in_k(seed, P, k):
    pop = np.random.default_rng(seed).random((P, 14))
    a = novelty_scores(pop, np.zeros((0, 14)), k)
    b = novelty_scores(pop, np.zeros((0, 14)), k + 1)
    assert np.all(a >= 0) and np.all(b >= a - 1e-12)


def test_no_neighbors():
    with pytest.raises(ParameterError):
        novelty_scores(np.zeros((1, 14)), np.zeros((0, 14)), 3)
    with pytest.raises(ParameterError):
        novelty_score(np.zeros(14), np.zeros((1, 14)), [], 3)


def test_behavior_vector_is_mean_final_sensors():
    cfg = EvalConfig(grid_size=6, swarm_size=10, n_steps=12, repetitions=1)
    g = np.random.default_rng(0).uniform(-0.5, 0.5, 776)
    v = behavior_vector(g, cfg, 3, 7)
    runs = [simulate(g, cfg, derive_seed(7, "rep", r)) for r in range(3)]
    assert np.allclose(v, np.mean([r.final_sensor_mean for r in runs], axis=0))
    assert np.all((v >= 0) & (v <= 1))


def test_config_errors():
    with pytest.raises(ConfigError):
        NoveltyConfig(k=0, archive_prob=2.0)


def test_search_keeps_everyone():
    cfg = EvalConfig(grid_size=6, swarm_size=10, n_steps=10, repetitions=1)
    ga = GAConfig(population_size=5, generations=3, elitism=1)
    res = run_novelty_search(cfg, ga, NoveltyConfig(k=3, archive_prob=0.5, repetitions=2), 4)
    assert len(res.individuals) == 15
    assert [(i.generation, i.index) for i in res.individuals[:6]] == \
        [(0, 0), (0, 1), (0, 2), (0, 3), (0, 4), (1, 0)]
    assert 0 < len(res.archive) < 15
    ind = res.individuals[7]
    assert ind.final_world().n_agents == 10 and 0 <= ind.fitness <= 1
    again = run_novelty_search(cfg, ga, NoveltyConfig(k=3, archive_prob=0.5, repetitions=2), 4)
    assert [i.novelty for i in again.individuals] == [i.novelty for i in res.individuals]
