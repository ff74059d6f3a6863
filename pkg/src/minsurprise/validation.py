"""Input checks shared by the estimator wrappers and the CLI."""

import numpy as np

from .controllers import DEFAULT_LAYOUT
from .exceptions import ConfigError
from .world import TorusWorld, world_from_text


def check_world(world):
    """Accept a ``TorusWorld`` or a text snapshot."""
    if isinstance(world, TorusWorld):
        return world
    if isinstance(world, str):
        return world_from_text(world)
    raise TypeError(f"expected a TorusWorld or a text snapshot, got {type(world).__name__}")


def check_worlds(worlds):
    if isinstance(worlds, (TorusWorld, str)):
        worlds = [worlds]
    return [check_world(w) for w in worlds]


def check_genome(genome, layout=DEFAULT_LAYOUT):
    g = np.asarray(genome, dtype=np.float64)
    if g.shape != (layout.size,):
        raise ConfigError(f"genome must have shape ({layout.size},), got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ConfigError("genome contains non-finite values")
    return g


def check_seed(seed):
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1)[0])
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def check_is_fitted(estimator, attribute):
    if not hasattr(estimator, attribute):
        raise AttributeError(f"{type(estimator).__name__} is not fitted yet; call fit() first")
