"""Discrete torus grid world with heading-aware agents.

Coordinates: ``x`` is the column, ``y`` the row, row 0 at the top of a text
snapshot.  North decreases ``y``, East increases ``x``.
"""

from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .exceptions import CapacityError, ParameterError, SnapshotFormatError
from .rng import check_random_state

EMPTY = -1
N_SENSORS = 14


class Heading(IntEnum):
    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3


class Pose(NamedTuple):
    x: int
    y: int
    heading: int


class Action(NamedTuple):
    """``move`` selects Move (True) or Turn (False); ``right`` picks the turn direction."""

    move: bool
    right: bool


MOVE = Action(True, True)
TURN_LEFT = Action(False, False)
TURN_RIGHT = Action(False, True)

# unit step per heading, (dx, dy)
HEADING_VECTORS = np.array([(0, -1), (1, 0), (0, 1), (-1, 0)], dtype=np.int64)

# Body-frame sensor cells as (forward, right).  Index 0/3 are straight ahead at
# distance 1/2, 8/11 straight behind at distance 1/2.  Only this table encodes
# the sensor geometry.
SENSOR_LAYOUT = (
    (1, 0), (1, 1), (2, 1), (2, 0), (2, -1), (1, -1),
    (0, -1), (0, 1),
    (-1, 0), (-1, -1), (-2, -1), (-2, 0), (-2, 1), (-1, 1),
)


def sensor_offsets(layout=SENSOR_LAYOUT):
    """World-frame (dx, dy) of every sensor cell for each heading, shape (4, R, 2)."""
    out = np.empty((4, len(layout), 2), dtype=np.int64)
    for h in range(4):
        fwd = HEADING_VECTORS[h]
        right = HEADING_VECTORS[(h + 1) % 4]
        for k, (f, r) in enumerate(layout):
            out[h, k] = f * fwd + r * right
    return out


SENSOR_OFFSETS = sensor_offsets()


class TorusWorld:
    """``L x L`` torus holding agents at distinct cells.

    Poses live in three parallel integer arrays; ``occupancy[y, x]`` stores the
    index of the agent on a cell or ``EMPTY``.
    """

    def __init__(self, side_length, xs, ys, headings):
        L = int(side_length)
        if L < 1:
            raise ParameterError(f"side length must be >= 1, got {L}")
        self.side_length = L
        self.xs = np.asarray(xs, dtype=np.int64) % L
        self.ys = np.asarray(ys, dtype=np.int64) % L
        self.headings = np.asarray(headings, dtype=np.int64)
        if not (self.xs.shape == self.ys.shape == self.headings.shape) or self.xs.ndim != 1:
            raise ValueError("xs, ys and headings must be 1-d arrays of equal length")
        if len(self.xs) > L * L:
            raise CapacityError(f"{len(self.xs)} agents do not fit on a {L}x{L} torus")
        if len(self.headings) and (self.headings.min() < 0 or self.headings.max() > 3):
            raise ValueError("headings must be in 0..3")
        self.occupancy = np.full((L, L), EMPTY, dtype=np.int64)
        for i, (x, y) in enumerate(zip(self.xs, self.ys)):
            if self.occupancy[y, x] != EMPTY:
                raise ValueError(f"cell ({x}, {y}) holds more than one agent")
            self.occupancy[y, x] = i

    @classmethod
    def from_poses(cls, side_length, poses):
        poses = list(poses)
        if not poses:
            return cls(side_length, [], [], [])
        xs, ys, hs = zip(*poses)
        return cls(side_length, xs, ys, hs)

    @property
    def n_agents(self):
        return len(self.xs)

    @property
    def density(self):
        return self.n_agents / self.side_length ** 2

    def poses(self):
        return [Pose(int(x), int(y), int(h)) for x, y, h in zip(self.xs, self.ys, self.headings)]

    def pose_array(self):
        return np.stack([self.xs, self.ys, self.headings], axis=1)

    def copy(self):
        return TorusWorld(self.side_length, self.xs.copy(), self.ys.copy(), self.headings.copy())

    def is_consistent(self):
        occ = np.full_like(self.occupancy, EMPTY)
        for i, (x, y) in enumerate(zip(self.xs, self.ys)):
            if occ[y, x] != EMPTY:
                return False
            occ[y, x] = i
        return bool(np.array_equal(occ, self.occupancy))

    def rotated(self, quarter_turns=1):
        """Rotate cells and headings clockwise by ``quarter_turns`` x 90 degrees."""
        L = self.side_length
        xs, ys, hs = self.xs.copy(), self.ys.copy(), self.headings.copy()
        for _ in range(quarter_turns % 4):
            xs, ys = (L - 1 - ys) % L, xs
            hs = (hs + 1) % 4
        return TorusWorld(L, xs, ys, hs)

    def to_text(self):
        return world_to_text(self)

    def __eq__(self, other):
        if not isinstance(other, TorusWorld):
            return NotImplemented
        return (self.side_length == other.side_length
                and np.array_equal(self.pose_array(), other.pose_array()))

    def __repr__(self):
        return f"TorusWorld(L={self.side_length}, N={self.n_agents})"


def place_agents_uniform(side_length, n_agents, rng=None):
    """Put ``n_agents`` on distinct uniformly random cells with uniform headings."""
    L = int(side_length)
    if n_agents > L * L:
        raise CapacityError(f"{n_agents} agents do not fit on a {L}x{L} torus")
    if n_agents < 0:
        raise ParameterError("swarm size must be non-negative")
    rng = check_random_state(rng)
    cells = rng.permutation(L * L)[:n_agents]
    headings = rng.integers(0, 4, size=n_agents)
    return TorusWorld(L, cells % L, cells // L, headings)


def read_sensors(world, agent, offsets=SENSOR_OFFSETS):
    """Binary occupancy of the agent's sensor cells (own cell never counts)."""
    L = world.side_length
    x, y, h = world.xs[agent], world.ys[agent], world.headings[agent]
    cx = (x + offsets[h, :, 0]) % L
    cy = (y + offsets[h, :, 1]) % L
    occ = world.occupancy[cy, cx]
    return ((occ != EMPTY) & (occ != agent)).astype(np.int8)


def read_all_sensors(world, offsets=SENSOR_OFFSETS):
    """Sensor readings of every agent, shape (N, R)."""
    L = world.side_length
    h = world.headings
    cx = (world.xs[:, None] + offsets[h, :, 0]) % L
    cy = (world.ys[:, None] + offsets[h, :, 1]) % L
    occ = world.occupancy[cy, cx]
    own = np.arange(world.n_agents)[:, None]
    return ((occ != EMPTY) & (occ != own)).astype(np.int8)


def apply_noise(reading, p, rng=None):
    """Flip every bit independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"flip probability must be in [0, 1], got {p}")
    reading = np.asarray(reading, dtype=np.int8)
    if p == 0.0:
        return reading.copy()
    rng = check_random_state(rng)
    flips = rng.random(reading.shape) < p
    return np.where(flips, 1 - reading, reading).astype(np.int8)


def step_agent(world, agent, action):
    """Execute one action in place; returns False only for a blocked move."""
    if not action[0]:
        turn = 1 if action[1] else -1
        world.headings[agent] = (world.headings[agent] + turn) % 4
        return True
    L = world.side_length
    dx, dy = HEADING_VECTORS[world.headings[agent]]
    x, y = world.xs[agent], world.ys[agent]
    nx, ny = (x + dx) % L, (y + dy) % L
    if world.occupancy[ny, nx] != EMPTY:
        return False
    world.occupancy[y, x] = EMPTY
    world.occupancy[ny, nx] = agent
    world.xs[agent], world.ys[agent] = nx, ny
    return True


def step_world(world, actions):
    """Apply one action per agent, sequentially in index order, on a copy."""
    actions = list(actions)
    if len(actions) != world.n_agents:
        raise ValueError(f"expected {world.n_agents} actions, got {len(actions)}")
    out = world.copy()
    for i, action in enumerate(actions):
        step_agent(out, i, action)
    return out


_GLYPHS = "^>v<"


def world_to_text(world):
    L = world.side_length
    grid = [["."] * L for _ in range(L)]
    for x, y, h in zip(world.xs, world.ys, world.headings):
        grid[y][x] = _GLYPHS[h]
    return "\n".join("".join(row) for row in grid) + "\n"


def world_from_text(text):
    """Parse a snapshot: L lines of L characters from ``.^>v<``.

    Agents are numbered in row-major order.
    """
    lines = [ln.rstrip("\r") for ln in text.strip("\n").split("\n")]
    lines = [ln for ln in lines if ln.strip()]
    L = len(lines)
    if L == 0:
        raise SnapshotFormatError("empty snapshot")
    poses = []
    for y, line in enumerate(lines):
        line = line.strip()
        if len(line) != L:
            raise SnapshotFormatError(f"row {y} has {len(line)} cells, expected {L}")
        for x, ch in enumerate(line):
            if ch == ".":
                continue
            if ch not in _GLYPHS:
                raise SnapshotFormatError(f"unknown glyph {ch!r} at ({x}, {y})")
            poses.append(Pose(x, y, _GLYPHS.index(ch)))
    return TorusWorld.from_poses(L, poses)
