"""Declarative experiment configuration (YAML).

Layout (every section optional except ``world.grid_size``)::

    kind: evolve            # evolve | noise | engineered | novelty | random-baseline | sweep | rerun
    seeds: [1, 2, 3]        # or `seed: 1`
    n_jobs: 1
    world:   {grid_size: 15, swarm_size: 100, n_steps: 500, repetitions: 10, noise: 0.0,
              predefined: {0: 1}, predictor_removed: false, binary_predictions: false}
    network: {actor_hidden: 8, predictor_hidden: 14}
    ga:      {population_size: 50, generations: 100, mutation_rate: 0.1,
              mutation_delta: 0.4, elitism: 1}
    novelty: {k: 10, archive_prob: 0.02, repetitions: 10}
    params:  {...}          # kind-specific, see KIND_PARAMS

``L`` at top level is accepted as shorthand for ``world.grid_size``.
"""

import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .controllers import NetworkLayout
from .evolution import GAConfig
from .exceptions import ConfigError
from .fitness import EvalConfig
from .novelty import NoveltyConfig

KINDS = ("evolve", "noise", "engineered", "novelty", "random-baseline", "sweep", "rerun")

# defaults of the self-assembly scenario
WORLD_DEFAULTS = {"swarm_size": 100, "n_steps": 500, "repetitions": 10, "noise": 0.0,
                  "predefined": {}, "predictor_removed": False, "binary_predictions": False}
NETWORK_DEFAULTS = {"actor_hidden": 8, "predictor_hidden": 14}
GA_DEFAULTS = {"population_size": 50, "generations": 100, "mutation_rate": 0.1,
               "mutation_delta": 0.4, "elitism": 1}
NOVELTY_DEFAULTS = {"k": 10, "archive_prob": 0.02, "repetitions": 10}

KIND_PARAMS = {
    "evolve": {},
    "noise": {"grid_sizes": None, "levels": [0.0, 0.05, 0.10, 0.15]},
    "engineered": {"grid_sizes": None, "mode": "Partial", "mutation_overrides": {}},
    "novelty": {"count": 50},
    "random-baseline": {"mode": "plain", "count": 50, "pool_size": 5000},
    "sweep": {"grid_sizes": None, "population_size": [], "generations": [], "n_steps": [],
              "repetitions": [], "mutation_rate": [], "budget": None},
    "rerun": {"grid_sizes": None, "n_steps": 500, "genomes": []},
}

TOP_KEYS = {"kind", "seed", "seeds", "n_jobs", "world", "network", "ga", "novelty", "params", "L"}


@dataclass
class ExperimentSpec:
    kind: str
    eval_cfg: EvalConfig
    ga_cfg: GAConfig
    novelty_cfg: NoveltyConfig
    seeds: list
    params: dict = field(default_factory=dict)
    n_jobs: int = 1

    def to_dict(self):
        return {"kind": self.kind, "seeds": list(self.seeds), "n_jobs": self.n_jobs,
                "world": self.eval_cfg.to_dict(), "ga": self.ga_cfg.to_dict(),
                "novelty": self.novelty_cfg.to_dict(), "params": self.params}

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _section(raw, name, defaults, errors):
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        errors.append(f"{name}: expected a mapping, got {type(sec).__name__}")
        return dict(defaults)
    for key in sorted(set(sec) - set(defaults)):
        errors.append(f"{name}.{key}: unknown key")
    out = dict(defaults)
    out.update({k: v for k, v in sec.items() if k in defaults})
    return out


def _build(ctor, name, kwargs, errors):
    try:
        return ctor(**kwargs)
    except ConfigError as err:
        errors.extend(f"{name}.{e}" for e in err.errors)
    except (TypeError, ValueError) as err:
        errors.append(f"{name}: {err}")
    return None


def parse_config(raw, kind=None):
    """Validate a parsed mapping into an ``ExperimentSpec``; every problem is reported at once."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a mapping"])
    errors = [f"{k}: unknown key" for k in sorted(set(raw) - TOP_KEYS)]
    kind = kind or raw.get("kind", "evolve")
    if kind not in KINDS:
        errors.append(f"kind: must be one of {', '.join(KINDS)} (got {kind!r})")
        kind = "evolve"

    world = _section(raw, "world", {"grid_size": None, **WORLD_DEFAULTS}, errors)
    if raw.get("L") is not None:
        world["grid_size"] = raw["L"]
    network = _section(raw, "network", NETWORK_DEFAULTS, errors)
    ga = _section(raw, "ga", GA_DEFAULTS, errors)
    nov = _section(raw, "novelty", NOVELTY_DEFAULTS, errors)
    params = _section(raw, "params", KIND_PARAMS[kind], errors)

    if world["grid_size"] is None:
        errors.append("world.grid_size (L): required, no default")
        world["grid_size"] = 1
    layout = _build(NetworkLayout, "network", network, errors)
    if layout is not None:
        try:
            world["predefined"] = {int(k): float(v) for k, v in (world["predefined"] or {}).items()}
        except (TypeError, ValueError, AttributeError):
            errors.append("world.predefined: expected a mapping of sensor index -> 0/1")
            world["predefined"] = {}
        eval_cfg = _build(EvalConfig, "world", {**world, "layout": layout}, errors)
    ga_cfg = _build(GAConfig, "ga", ga, errors)
    nov_cfg = _build(NoveltyConfig, "novelty", nov, errors)

    if "seeds" in raw and "seed" in raw:
        errors.append("seeds: give either `seed` or `seeds`, not both")
    seeds = raw.get("seeds", [raw.get("seed", 0)])
    if not isinstance(seeds, list) or not seeds:
        errors.append("seeds: expected a non-empty list of integers")
    elif any(not isinstance(s, int) or isinstance(s, bool) or s < 0 for s in seeds):
        errors.append("seeds: every seed must be a non-negative integer")
    n_jobs = raw.get("n_jobs", 1)
    if not isinstance(n_jobs, int) or n_jobs == 0:
        errors.append("n_jobs: expected a non-zero integer")
    if params.get("grid_sizes", 0) is None:
        params["grid_sizes"] = [world["grid_size"]]
    if errors:
        raise ConfigError(errors)
    return ExperimentSpec(kind, eval_cfg, ga_cfg, nov_cfg, list(seeds), params, n_jobs)


def load_config(path, kind=None):
    """Read and validate a YAML experiment file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as err:
        raise ConfigError([f"parse error: {err}"]) from err
    return parse_config(raw, kind)
