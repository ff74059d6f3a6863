"""Pattern classification of final swarm configurations.

Every detector returns the set of agent indices it assigns to its pattern.
The label is the class covering the most agents; quality is that coverage
divided by the swarm size.  Ties go to the earlier class in ``PRECEDENCE``.
"""

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .world import EMPTY, HEADING_VECTORS, TorusWorld, world_from_text


class Behavior(str, Enum):
    LINES = "Lines"
    PAIRS = "Pairs"
    SQUARES = "Squares"
    TRIANGULAR_LATTICE = "TriangularLattice"
    RANDOM_DISPERSION = "RandomDispersion"
    AGGREGATION = "Aggregation"
    CLUSTERING = "Clustering"
    LOOSE_GROUPING = "LooseGrouping"
    SWIRLS = "Swirls"
    UNCLASSIFIED = "Unclassified"

    def __str__(self):
        return self.value


PRECEDENCE = (Behavior.LINES, Behavior.SWIRLS, Behavior.SQUARES, Behavior.TRIANGULAR_LATTICE,
              Behavior.PAIRS, Behavior.AGGREGATION, Behavior.CLUSTERING,
              Behavior.LOOSE_GROUPING, Behavior.RANDOM_DISPERSION)

GROUPING = frozenset({Behavior.AGGREGATION, Behavior.CLUSTERING, Behavior.LOOSE_GROUPING,
                      Behavior.SWIRLS})
DISPERSION = frozenset({Behavior.RANDOM_DISPERSION, Behavior.SQUARES,
                        Behavior.TRIANGULAR_LATTICE})
STRUCTURES = frozenset({Behavior.LINES, Behavior.PAIRS})

VON_NEUMANN = ((0, -1), (1, 0), (0, 1), (-1, 0))
DIAGONAL = ((1, -1), (1, 1), (-1, 1), (-1, -1))
MOORE = VON_NEUMANN + DIAGONAL


@dataclass
class BehaviorLabel:
    behavior: Behavior
    quality: float
    counts: dict = field(default_factory=dict)

    def to_record(self):
        return {"class": str(self.behavior), "quality": self.quality,
                "counts": {str(k): v for k, v in self.counts.items()}}

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)


class _Grid:
    """Occupancy lookups with torus wrap; neighbor cells are deduplicated so
    tiny tori (L < 3) never count a cell twice or count the agent itself."""

    def __init__(self, world):
        self.world = world
        self.L = world.side_length
        self.occ = world.occupancy

    def at(self, x, y):
        return self.occ[y % self.L, x % self.L]

    def neighbors(self, agent, offsets):
        L = self.L
        x, y = int(self.world.xs[agent]), int(self.world.ys[agent])
        cells = {((x + dx) % L, (y + dy) % L) for dx, dy in offsets} - {(x, y)}
        return [int(self.occ[cy, cx]) for cx, cy in cells if self.occ[cy, cx] != EMPTY]

    def count(self, offsets):
        return np.array([len(self.neighbors(i, offsets)) for i in range(self.world.n_agents)],
                        dtype=np.int64)


def _runs(mask):
    """Maximal runs of True in a cyclic 1-d mask as (indices, wraps_fully)."""
    L = len(mask)
    if L and all(mask):
        return [(list(range(L)), True)]
    runs = []
    for i in range(L):
        if mask[i] and not mask[i - 1]:
            run = [i]
            j = (i + 1) % L
            while mask[j]:
                run.append(j)
                j = (j + 1) % L
            runs.append((run, False))
    return runs


def _flank_ok(grid, cells, closed):
    """At most n/2 occupied flank cells per side, none orthogonally adjacent."""
    n = len(cells)
    for side in (-1, 1):
        flank = [grid.at(x, y) != EMPTY for x, y in
                 ((cx + side * nx, cy + side * ny) for (cx, cy), (nx, ny) in cells)]
        if sum(flank) > n / 2:
            return False
        pairs = zip(flank, flank[1:] + flank[:1]) if closed else zip(flank, flank[1:])
        if any(a and b for a, b in pairs):
            return False
    return True


def _aligned_runs(world):
    """Valid line/pair candidates: lists of agent indices ordered along the run."""
    grid = _Grid(world)
    L, hs = grid.L, world.headings
    found = []
    # axis 0: runs along x (rows) by agents facing E/W; axis 1: along y by agents facing N/S
    for axis in (0, 1):
        fwd = 1 if axis == 0 else 2            # heading pointing along the run
        for line in range(L):
            agents = [grid.at(k, line) if axis == 0 else grid.at(line, k) for k in range(L)]
            mask = [a != EMPTY and hs[a] % 2 == (1 - axis) for a in agents]
            for run, closed in _runs(mask):
                members = [int(agents[k]) for k in run]
                if not closed and len(members) > 1:
                    # both ends face into the structure
                    if hs[members[0]] != fwd or hs[members[-1]] != (fwd + 2) % 4:
                        continue
                elif not closed:
                    continue
                # cells with the unit normal pointing to the flank rows
                normal = (0, 1) if axis == 0 else (1, 0)
                cells = [((k, line) if axis == 0 else (line, k), normal) for k in run]
                if _flank_ok(grid, cells, closed):
                    found.append(members)
    return found


def detect_lines(world):
    """Agent sets of all lines (aligned, inward-ended runs of >= 3 agents)."""
    return [set(r) for r in _aligned_runs(world) if len(r) >= 3]


def detect_pairs(world):
    return [set(r) for r in _aligned_runs(world) if len(r) == 2]


def detect_swirls(world):
    """2x2 blocks where every agent faces a block member whose heading differs by 90 degrees."""
    grid = _Grid(world)
    L, hs = grid.L, world.headings
    found = []
    if L < 2:
        return found
    for y in range(L):
        for x in range(L):
            cells = {((x + dx) % L, (y + dy) % L) for dx in (0, 1) for dy in (0, 1)}
            members = [int(grid.at(cx, cy)) for cx, cy in cells]
            if len(cells) != 4 or EMPTY in members:
                continue
            ok = True
            for a in members:
                dx, dy = HEADING_VECTORS[hs[a]]
                target = int(grid.at(world.xs[a] + dx, world.ys[a] + dy))
                if target not in members or (hs[target] - hs[a]) % 4 not in (1, 3):
                    ok = False
                    break
            if ok:
                found.append(set(members))
    return found


def detect_squares(world):
    """Corners of spacing-2 unit cells whose four agents have no Moore neighbors."""
    grid = _Grid(world)
    L = grid.L
    lonely = grid.count(MOORE) == 0
    found = []
    if L < 4:
        return found
    for y in range(L):
        for x in range(L):
            members = [int(grid.at(x + dx, y + dy)) for dx in (0, 2) for dy in (0, 2)]
            if EMPTY not in members and all(lonely[a] for a in members):
                found.append(set(members))
    return found


def _components(members, adjacency):
    """Connected components (as sorted lists) of ``members`` under ``adjacency(agent)``."""
    members = set(members)
    seen, comps = set(), []
    for start in sorted(members):
        if start in seen:
            continue
        comp, queue = [], deque([start])
        seen.add(start)
        while queue:
            a = queue.popleft()
            comp.append(a)
            for b in adjacency(a):
                if b in members and b not in seen:
                    seen.add(b)
                    queue.append(b)
        comps.append(sorted(comp))
    return comps


def detect_triangular_lattice(world):
    """Diagonally connected groups (>= 3) of agents with diagonal but no orthogonal neighbors."""
    grid = _Grid(world)
    vn = grid.count(VON_NEUMANN)
    diag = grid.count(DIAGONAL)
    cand = [i for i in range(world.n_agents) if vn[i] == 0 and diag[i] >= 1]
    comps = _components(cand, lambda a: grid.neighbors(a, DIAGONAL))
    return [set(c) for c in comps if len(c) >= 3]


def detect_clusters(world):
    """Cluster analysis: returns ``(kind, member_components)``.

    Cores have >= 6 Moore and >= 3 von Neumann neighbors; members are cores
    plus every Moore neighbor of a core.  ``kind`` is Aggregation for one
    member component, LooseGrouping when some component joins >= 2 separate
    core groups, Clustering otherwise; None when there is no core.
    """
    grid = _Grid(world)
    moore = grid.count(MOORE)
    vn = grid.count(VON_NEUMANN)
    cores = [i for i in range(world.n_agents) if moore[i] >= 6 and vn[i] >= 3]
    if not cores:
        return None, []
    members = set(cores)
    for c in cores:
        members.update(grid.neighbors(c, MOORE))
    adj = lambda a: grid.neighbors(a, MOORE)  # noqa: E731
    comps = _components(members, adj)
    core_groups = _components(cores, adj)
    group_of = {a: k for k, g in enumerate(core_groups) for a in g}
    joined = any(len({group_of[a] for a in comp if a in group_of}) >= 2 for comp in comps)
    if joined:
        kind = Behavior.LOOSE_GROUPING
    elif len(comps) == 1:
        kind = Behavior.AGGREGATION
    else:
        kind = Behavior.CLUSTERING
    return kind, [set(c) for c in comps]


def detect_random_dispersion(world, claimed=()):
    """Agents with no von Neumann neighbor or at most one Moore neighbor, minus ``claimed``."""
    grid = _Grid(world)
    vn = grid.count(VON_NEUMANN)
    moore = grid.count(MOORE)
    claimed = set(claimed)
    return {i for i in range(world.n_agents) if (vn[i] == 0 or moore[i] <= 1) and i not in claimed}


def _union(sets):
    out = set()
    for s in sets:
        out |= s
    return out


def detect_all(world):
    """Agents covered by each of the nine pattern classes."""
    cover = {b: set() for b in PRECEDENCE}
    cover[Behavior.LINES] = _union(detect_lines(world))
    cover[Behavior.PAIRS] = _union(detect_pairs(world))
    cover[Behavior.SWIRLS] = _union(detect_swirls(world))
    cover[Behavior.SQUARES] = _union(detect_squares(world))
    cover[Behavior.TRIANGULAR_LATTICE] = _union(detect_triangular_lattice(world))
    kind, comps = detect_clusters(world)
    if kind is not None:
        cover[kind] = _union(comps)
    claimed = _union(v for k, v in cover.items() if k is not Behavior.RANDOM_DISPERSION)
    cover[Behavior.RANDOM_DISPERSION] = detect_random_dispersion(world, claimed)
    return cover


def classify(world):
    """Label ``world`` with the pattern covering the most agents."""
    if isinstance(world, str):
        world = world_from_text(world)
    n = world.n_agents
    cover = detect_all(world)
    counts = {b: len(cover[b]) for b in PRECEDENCE}
    best = max(PRECEDENCE, key=lambda b: (counts[b], -PRECEDENCE.index(b)))
    structured = max(c for b, c in counts.items() if b is not Behavior.RANDOM_DISPERSION)
    if n == 0 or (structured < 2 and counts[Behavior.RANDOM_DISPERSION] <= n / 2):
        return BehaviorLabel(Behavior.UNCLASSIFIED, 0.0, counts)
    return BehaviorLabel(best, counts[best] / n, counts)


def solution_quality(world, behavior):
    """Fraction of agents assembled into structures of class ``behavior``."""
    behavior = Behavior(behavior)
    if behavior is Behavior.UNCLASSIFIED or world.n_agents == 0:
        return 0.0
    return len(detect_all(world)[behavior]) / world.n_agents


def _pose_set(poses):
    if isinstance(poses, TorusWorld):
        poses = poses.pose_array()
    return {tuple(int(v) for v in p) for p in poses}


def similarity(repair, initial, n_agents):
    """Fraction of the ``n_agents`` initial agents whose exact pose reappears after repair."""
    if n_agents <= 0:
        raise ValueError("swarm size must be positive")
    ref = _pose_set(initial)
    return sum(p in ref for p in _pose_set(repair)) / n_agents


def mean_predictions(record):
    """Mean prediction per sensor over all agents and steps of a run."""
    if record.trace is not None and "predictions" in record.trace:
        preds = np.asarray(record.trace["predictions"], dtype=np.float64)
        if preds.size == 0:
            raise ValueError("record holds no predictions")
        return preds.reshape(-1, preds.shape[-1]).mean(axis=0)
    if record.prediction_count <= 0:
        raise ValueError("record holds no predictions")
    return np.asarray(record.prediction_sum, dtype=np.float64) / record.prediction_count
