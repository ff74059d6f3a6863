"""Actor/predictor network pair encoded in one flat genome.

Both networks take the R sensor bits plus one action bit.  The actor is a
feedforward net with tanh units whose two outputs are thresholded at zero
(move-vs-turn, right-vs-left).  The predictor is an Elman network: a tanh
hidden layer fed back into itself, and R logistic outputs.

Flat genome order: actor ``w1 (Ha x I), b1, w2 (2 x Ha), b2`` followed by
predictor ``w_in (Hp x I), w_rec (Hp x Hp), b_h, w_out (R x Hp), b_out``,
every matrix row-major.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigError, ParameterError
from .rng import check_random_state
from .world import N_SENSORS, Action

N_ACTIONS = 2


@dataclass(frozen=True)
class NetTopology:
    input_count: int
    hidden_count: int
    output_count: int
    recurrent: bool

    def __post_init__(self):
        if min(self.input_count, self.hidden_count, self.output_count) < 1:
            raise ConfigError(f"all layer sizes must be >= 1: {self}")

    @property
    def n_params(self):
        i, h, o = self.input_count, self.hidden_count, self.output_count
        return h * i + h + (h * h if self.recurrent else 0) + o * h + o

    def to_dict(self):
        return {"inputs": self.input_count, "hidden": self.hidden_count,
                "outputs": self.output_count, "recurrent": self.recurrent}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["inputs"]), int(d["hidden"]), int(d["outputs"]), bool(d["recurrent"]))


class ActorParams(NamedTuple):
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


class PredictorParams(NamedTuple):
    w_in: np.ndarray
    w_rec: np.ndarray
    b_h: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray


@dataclass(frozen=True)
class NetworkLayout:
    """Hidden sizes of the actor/predictor pair; fixes the genome length."""

    actor_hidden: int = 8
    predictor_hidden: int = 14
    n_sensors: int = N_SENSORS

    @property
    def actor(self):
        return NetTopology(self.n_sensors + 1, self.actor_hidden, N_ACTIONS, False)

    @property
    def predictor(self):
        return NetTopology(self.n_sensors + 1, self.predictor_hidden, self.n_sensors, True)

    @property
    def n_actor_params(self):
        return self.actor.n_params

    @property
    def size(self):
        return self.actor.n_params + self.predictor.n_params

    def unpack(self, genome):
        """Split a flat genome into (ActorParams, PredictorParams) views."""
        g = np.asarray(genome, dtype=np.float64)
        if g.shape != (self.size,):
            raise ConfigError(f"genome has shape {g.shape}, layout expects ({self.size},)")
        i = self.n_sensors + 1
        ha, hp, r = self.actor_hidden, self.predictor_hidden, self.n_sensors
        shapes = [(ha, i), (ha,), (N_ACTIONS, ha), (N_ACTIONS,),
                  (hp, i), (hp, hp), (hp,), (r, hp), (r,)]
        parts, pos = [], 0
        for shape in shapes:
            n = int(np.prod(shape))
            parts.append(g[pos:pos + n].reshape(shape))
            pos += n
        return ActorParams(*parts[:4]), PredictorParams(*parts[4:])

    @staticmethod
    def pack(actor, predictor):
        return np.concatenate([np.ravel(a) for a in (*actor, *predictor)]).astype(np.float64)

    def to_dict(self):
        return {"actor_hidden": self.actor_hidden, "predictor_hidden": self.predictor_hidden,
                "n_sensors": self.n_sensors}


DEFAULT_LAYOUT = NetworkLayout()


def init_genome(layout=DEFAULT_LAYOUT, rng=None):
    """Every parameter drawn independently from U[-0.5, 0.5]."""
    rng = check_random_state(rng)
    return rng.uniform(-0.5, 0.5, size=layout.size)


def mutate(parent, rate, delta, rng=None):
    """Copy of ``parent`` where each gene gets U[-delta, delta] added with probability ``rate``."""
    if not 0.0 <= rate <= 1.0:
        raise ParameterError(f"mutation rate must be in [0, 1], got {rate}")
    if delta <= 0:
        raise ParameterError(f"mutation delta must be > 0, got {delta}")
    rng = check_random_state(rng)
    parent = np.asarray(parent, dtype=np.float64)
    mask = rng.random(parent.shape) < rate
    noise = rng.uniform(-delta, delta, size=parent.shape)
    return np.where(mask, parent + noise, parent)


def _inputs(sensors, action_bit):
    x = np.empty(len(sensors) + 1)
    x[:-1] = sensors
    x[-1] = action_bit
    return x


def actor_outputs(genome, sensors, last_a0, layout=DEFAULT_LAYOUT):
    """Raw tanh outputs of the actor before thresholding."""
    p, _ = layout.unpack(genome)
    h = np.tanh(p.w1 @ _inputs(sensors, last_a0) + p.b1)
    return np.tanh(p.w2 @ h + p.b2)


def actor_forward(genome, sensors, last_a0, layout=DEFAULT_LAYOUT):
    out = actor_outputs(genome, sensors, last_a0, layout)
    return Action(bool(out[0] >= 0.0), bool(out[1] >= 0.0))


def initial_state(layout=DEFAULT_LAYOUT):
    return np.zeros(layout.predictor_hidden)


def predictor_forward(genome, state, sensors, next_a0, layout=DEFAULT_LAYOUT):
    """One Elman step; returns (predictions in [0, 1], new hidden state)."""
    _, p = layout.unpack(genome)
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (layout.predictor_hidden,):
        raise ConfigError(f"predictor state must have length {layout.predictor_hidden}")
    h = np.tanh(p.w_in @ _inputs(sensors, next_a0) + p.w_rec @ state + p.b_h)
    pred = 1.0 / (1.0 + np.exp(-(p.w_out @ h + p.b_out)))
    return pred, h


GENOME_FORMAT = "minsurprise-genome"


def genome_to_dict(genome, layout=DEFAULT_LAYOUT):
    genome = np.asarray(genome, dtype=np.float64)
    if genome.shape != (layout.size,):
        raise ConfigError(f"genome length {genome.size} does not match layout size {layout.size}")
    if not np.all(np.isfinite(genome)):
        raise ConfigError("genome contains non-finite values")
    return {
        "format": GENOME_FORMAT,
        "version": 1,
        "actor": layout.actor.to_dict(),
        "predictor": layout.predictor.to_dict(),
        "weights": [float(w) for w in genome],
    }


def genome_from_dict(d):
    if d.get("format") != GENOME_FORMAT:
        raise ConfigError(f"not a genome record (format={d.get('format')!r})")
    actor = NetTopology.from_dict(d["actor"])
    predictor = NetTopology.from_dict(d["predictor"])
    if actor.recurrent or not predictor.recurrent:
        raise ConfigError("actor must be feedforward and predictor recurrent")
    if actor.input_count != predictor.input_count or predictor.output_count + 1 != predictor.input_count:
        raise ConfigError("inconsistent actor/predictor topologies")
    layout = NetworkLayout(actor.hidden_count, predictor.hidden_count, predictor.output_count)
    weights = np.array(d["weights"], dtype=np.float64)
    if weights.shape != (layout.size,):
        raise ConfigError(f"expected {layout.size} weights, found {weights.size}")
    return weights, layout


def save_genome(path, genome, layout=DEFAULT_LAYOUT):
    # json writes floats with repr(), which round-trips float64 exactly
    with open(path, "w") as fh:
        json.dump(genome_to_dict(genome, layout), fh, indent=1)
        fh.write("\n")


def load_genome(path):
    with open(path) as fh:
        return genome_from_dict(json.load(fh))
