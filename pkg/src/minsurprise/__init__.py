"""Evolving swarm self-assembly by minimizing sensor-prediction error on a torus grid."""

from .analysis import Behavior, BehaviorLabel, classify, mean_predictions, similarity, solution_quality
from .controllers import DEFAULT_LAYOUT, NetworkLayout, init_genome, load_genome, mutate, save_genome
from .estimators import NoveltySearch, OnePlusOneEvolver, PatternClassifier, SurpriseEvolver
from .evolution import (GAConfig, OnePlusOneState, proportionate_select, random_baseline,
                        run_generational_ga, run_one_plus_one)
from .exceptions import CapacityError, ConfigError, MinSurpriseError, ParameterError
from .fitness import EvalConfig, RunRecord, evaluate_fitness, simulate
from .novelty import NoveltyConfig, behavior_vector, novelty_score, run_novelty_search
from .world import TorusWorld, place_agents_uniform, world_from_text, world_to_text

__all__ = [
    "Behavior",
    "BehaviorLabel",
    "CapacityError",
    "ConfigError",
    "DEFAULT_LAYOUT",
    "EvalConfig",
    "GAConfig",
    "MinSurpriseError",
    "NetworkLayout",
    "NoveltyConfig",
    "NoveltySearch",
    "OnePlusOneEvolver",
    "OnePlusOneState",
    "ParameterError",
    "PatternClassifier",
    "RunRecord",
    "SurpriseEvolver",
    "TorusWorld",
    "behavior_vector",
    "classify",
    "evaluate_fitness",
    "init_genome",
    "load_genome",
    "mean_predictions",
    "mutate",
    "novelty_score",
    "place_agents_uniform",
    "proportionate_select",
    "random_baseline",
    "run_generational_ga",
    "run_novelty_search",
    "run_one_plus_one",
    "save_genome",
    "similarity",
    "simulate",
    "solution_quality",
    "world_from_text",
    "world_to_text",
]

__version__ = "0.1.0"
