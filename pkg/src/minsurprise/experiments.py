"""Experiment protocols built on the optimizers and the classifier.

Each protocol returns long-format rows (one dict per run) so results can be
written straight to CSV; per-run master seeds come from the caller's seed
list, making every cell reproducible on its own.
"""

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analysis import DISPERSION, GROUPING, Behavior, classify, similarity, solution_quality
from .evolution import GAConfig, _map, run_generational_ga
from .exceptions import CapacityError, ConfigError, ParameterError
from .fitness import EvalConfig, simulate
from .rng import make_rng
from .world import TorusWorld

FRONT_BACK = (0, 3, 8, 11)
PARTIAL_TARGETS = {k: 1.0 for k in FRONT_BACK}


def full_targets(n_sensors=14):
    return {k: (1.0 if k in FRONT_BACK else 0.0) for k in range(n_sensors)}


def family(behavior):
    """Coarse family of a class: grouping, dispersion, structure or unclassified."""
    behavior = Behavior(behavior)
    if behavior in GROUPING:
        return "grouping"
    if behavior in DISPERSION:
        return "dispersion"
    if behavior is Behavior.UNCLASSIFIED:
        return "unclassified"
    return "structure"


@dataclass
class EvolveResult:
    seed: int
    eval_cfg: EvalConfig
    ga_cfg: GAConfig
    trace: object
    label: object

    @property
    def best_fitness(self):
        return self.trace.final_best_fitness

    @property
    def best_genome(self):
        return self.trace.best_genome

    def row(self, **keys):
        return {**keys, "grid_size": self.eval_cfg.grid_size, "seed": self.seed,
                "fitness": self.best_fitness, "class": str(self.label.behavior),
                "quality": self.label.quality}


def run_evolve(eval_cfg, ga_cfg, seed, n_jobs=1):
    """One GA run plus the classification of its best individual's final world."""
    trace = run_generational_ga(eval_cfg, ga_cfg, seed, n_jobs=n_jobs)
    return EvolveResult(seed, eval_cfg, ga_cfg, trace, classify(trace.best_record.final_world()))


def _grid(cells, seeds, n_jobs):
    """Run ``run_evolve`` for every (cell, seed); ``cells`` maps keys -> (eval_cfg, ga_cfg)."""
    jobs = [(keys, cfgs, s) for keys, cfgs in cells for s in seeds]
    return _map(lambda j: (j[0], run_evolve(j[1][0], j[1][1], j[2])), jobs, n_jobs)


def run_noise_study(grid_sizes, noise_levels, seeds, eval_cfg, ga_cfg, n_jobs=1):
    """One GA per (L, noise, seed); noise 0 is exactly the plain evolve protocol."""
    for p in noise_levels:
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"noise level {p} outside [0, 1]")
    cells = [({"grid_size": L, "noise": p}, (eval_cfg.replace(grid_size=L, noise=p), ga_cfg))
             for L in grid_sizes for p in noise_levels]
    return [res.row(**keys) for keys, res in _grid(cells, seeds, n_jobs)]


def run_engineered_so(grid_sizes, mode, seeds, eval_cfg, ga_cfg, mutation_overrides=None,
                      n_jobs=1):
    """Evolution with predefined predictions.

    ``Partial`` fixes the front/back sensors 0, 3, 8, 11 to 1 and evolves the
    other outputs; ``Full`` fixes all outputs (front/back 1, rest 0) and drops
    the predictor.  ``mutation_overrides`` maps L to a mutation rate.
    """
    mode = mode.capitalize()
    if mode not in ("Partial", "Full"):
        raise ParameterError(f"mode must be Partial or Full, got {mode!r}")
    overrides = mutation_overrides or {}
    cells = []
    for L in grid_sizes:
        if mode == "Partial":
            cfg = eval_cfg.replace(grid_size=L, predefined=PARTIAL_TARGETS, predictor_removed=False)
        else:
            cfg = eval_cfg.replace(grid_size=L, predefined=full_targets(eval_cfg.layout.n_sensors),
                                   predictor_removed=True)
        ga = ga_cfg
        if L in overrides:
            ga = GAConfig(ga_cfg.population_size, ga_cfg.generations, overrides[L],
                          ga_cfg.mutation_delta, ga_cfg.elitism)
        cells.append(({"grid_size": L, "mode": mode, "mutation_rate": ga.mutation_rate}, (cfg, ga)))
    return [res.row(**keys) for keys, res in _grid(cells, seeds, n_jobs)]


def run_rerun_scalability(genomes, grid_sizes, n_steps, seeds, eval_cfg):
    """Rerun fixed genomes once per (genome, L, seed) from fresh placements; never evolves."""
    rows = []
    for gi, genome in enumerate(genomes):
        for L in grid_sizes:
            for s in seeds:
                row = {"genome": gi, "grid_size": L, "seed": s}
                try:
                    cfg = eval_cfg.replace(grid_size=L, n_steps=n_steps, repetitions=1)
                    rec = simulate(genome, cfg, s)
                except (CapacityError, ConfigError) as err:
                    rows.append({**row, "fitness": float("nan"), "class": "", "quality": 0.0,
                                 "error": str(err)})
                    continue
                label = classify(rec.final_world())
                rows.append({**row, "fitness": rec.fitness, "class": str(label.behavior),
                             "quality": label.quality, "error": ""})
    return rows


# ---------------------------------------------------------------- damage / repair

@dataclass(frozen=True)
class DamageSpec:
    """Inclusive cell rectangle ``region = (x0, y0, x1, y1)`` damaged before a repair run."""

    mode: str
    region: tuple
    repair_steps: int = 500
    seed: int = 0

    def __post_init__(self):
        mode = self.mode.lower()
        if mode not in ("remove", "reposition"):
            raise ParameterError(f"damage mode must be remove or reposition, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        x0, y0, x1, y1 = (int(v) for v in self.region)
        if x0 > x1 or y0 > y1 or min(x0, y0) < 0:
            raise ParameterError(f"bad damage region {self.region}")
        object.__setattr__(self, "region", (x0, y0, x1, y1))
        if self.repair_steps < 1:
            raise ParameterError("repair_steps must be >= 1")

    def cells(self, L):
        x0, y0, x1, y1 = self.region
        if x1 >= L or y1 >= L:
            raise ParameterError(f"damage region {self.region} exceeds the {L}x{L} grid")
        return {(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)}


def apply_damage(world, spec):
    """Damaged copy of ``world``: agents inside the region are removed, or moved to
    uniformly random free cells outside it keeping their headings."""
    region = spec.cells(world.side_length)
    inside = np.array([(int(x), int(y)) in region for x, y in zip(world.xs, world.ys)], dtype=bool)
    if not inside.any():
        warnings.warn("damage region contains no agents; world is unchanged", stacklevel=2)
    if spec.mode == "remove":
        keep = ~inside
        return TorusWorld(world.side_length, world.xs[keep], world.ys[keep], world.headings[keep])
    L = world.side_length
    xs, ys = world.xs.copy(), world.ys.copy()
    taken = {(int(x), int(y)) for x, y in zip(xs[~inside], ys[~inside])}
    free = [(x, y) for y in range(L) for x in range(L) if (x, y) not in region and (x, y) not in taken]
    moving = np.flatnonzero(inside)
    if len(free) < len(moving):
        raise CapacityError("not enough free cells outside the damage region")
    rng = make_rng(spec.seed, "reposition")
    picks = rng.choice(len(free), size=len(moving), replace=False)
    for a, p in zip(moving, picks):
        xs[a], ys[a] = free[p]
    return TorusWorld(L, xs, ys, world.headings.copy())


@dataclass
class DamageResult:
    behavior: Behavior
    quality_initial: float
    quality_start: float
    quality_end: float
    similarity_start: float
    similarity: float
    fitness: float
    affected: int
    record: object = field(repr=False, default=None)
    eval_cfg: object = field(repr=False, default=None)

    def row(self):
        return {"class": str(self.behavior), "quality_initial": self.quality_initial,
                "quality_start": self.quality_start, "quality_end": self.quality_end,
                "similarity_start": self.similarity_start, "similarity": self.similarity,
                "fitness": self.fitness, "affected": self.affected}


def run_damage_repair(genome, initial_record, spec, eval_cfg):
    """Damage the final world of ``initial_record`` and run the genome on from there.

    Qualities are measured for the class of the undamaged structure; the
    similarity compares final poses against the undamaged poses, normalized
    by the undamaged swarm size.
    """
    before = initial_record.final_world()
    label = classify(before)
    region = spec.cells(before.side_length)
    damaged = apply_damage(before, spec)
    cfg = eval_cfg.replace(grid_size=before.side_length, swarm_size=max(damaged.n_agents, 1),
                           n_steps=spec.repair_steps, repetitions=1)
    rec = simulate(genome, cfg, spec.seed, world=damaged)
    after = rec.final_world()
    n0 = before.n_agents
    return DamageResult(
        behavior=label.behavior,
        quality_initial=solution_quality(before, label.behavior),
        quality_start=relative_quality(damaged, label.behavior, n0),
        quality_end=relative_quality(after, label.behavior, n0),
        similarity_start=similarity(damaged, before, n0),
        similarity=similarity(after, before, n0),
        fitness=rec.fitness,
        affected=sum((int(x), int(y)) in region for x, y in zip(before.xs, before.ys)),
        record=rec,
        eval_cfg=cfg,
    )


def relative_quality(world, behavior, n_reference):
    """Structure coverage relative to a reference swarm size (the undamaged N)."""
    if world.n_agents == 0:
        return 0.0
    return solution_quality(world, behavior) * world.n_agents / n_reference


def find_damage_region(world, members, n_target):
    """Axis-aligned rectangle holding exactly ``n_target`` agents, preferring rectangles
    where most of those agents belong to ``members``, then the smallest area.

    Returns ``(x0, y0, x1, y1)`` or None.
    """
    L = world.side_length
    occ = np.zeros((L, L), dtype=np.int64)
    mem = np.zeros((L, L), dtype=np.int64)
    members = set(members)
    for i, (x, y) in enumerate(zip(world.xs, world.ys)):
        occ[y, x] = 1
        mem[y, x] = i in members
    S = np.zeros((L + 1, L + 1), dtype=np.int64)
    M = np.zeros((L + 1, L + 1), dtype=np.int64)
    S[1:, 1:] = occ.cumsum(0).cumsum(1)
    M[1:, 1:] = mem.cumsum(0).cumsum(1)
    best, best_key = None, None
    for y0, y1 in itertools.combinations_with_replacement(range(L), 2):
        rowS = S[y1 + 1] - S[y0]
        rowM = M[y1 + 1] - M[y0]
        for x0 in range(L):
            cnt = rowS[x0 + 1:] - rowS[x0]
            hits = np.flatnonzero(cnt == n_target)
            for h in hits:
                x1 = x0 + int(h)
                m = int(rowM[x1 + 1] - rowM[x0])
                key = (-m, (x1 - x0 + 1) * (y1 - y0 + 1), y0, x0)
                if best_key is None or key < best_key:
                    best, best_key = (x0, y0, x1, y1), key
    return best


# ---------------------------------------------------------------- sweeps

TABLE_III_RANGES = {
    "population_size": (10, 100),
    "generations": (50, 500),
    "n_steps": (50, 500),
    "repetitions": (1, 10),
    "mutation_rate": (0.001, 0.4),
}


@dataclass(frozen=True)
class SweepGrid:
    """Value lists per hyperparameter.

    ``budget`` (P x G) switches to the budgeted sweep: every population size
    is paired with ``G = budget / P`` and crossed with every mutation rate.
    """

    population_size: tuple = ()
    generations: tuple = ()
    n_steps: tuple = ()
    repetitions: tuple = ()
    mutation_rate: tuple = ()
    budget: int = None

    def __post_init__(self):
        for name in TABLE_III_RANGES:
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.budget is not None:
            if not self.population_size:
                raise ConfigError("budgeted sweep needs population sizes")
            for P in self.population_size:
                if P < 1 or self.budget % P:
                    raise ConfigError(f"population size {P} does not divide the budget {self.budget}")
        elif not any(getattr(self, n) for n in TABLE_III_RANGES):
            raise ConfigError("sweep grid is empty")

    def extrapolated(self):
        """(name, value) pairs outside the tested ranges."""
        out = []
        for name, (lo, hi) in TABLE_III_RANGES.items():
            out += [(name, v) for v in getattr(self, name) if not lo <= v <= hi]
        return out

    def cells(self, eval_cfg, ga_cfg):
        """List of (keys, eval_cfg, ga_cfg)."""
        def ga(**kw):
            d = ga_cfg.to_dict()
            d.update(kw)
            return GAConfig(**d)

        out = []
        if self.budget is not None:
            cfg = eval_cfg.replace(repetitions=2, n_steps=200)
            rates = self.mutation_rate or (ga_cfg.mutation_rate,)
            for P, rate in itertools.product(self.population_size, rates):
                G = self.budget // P
                out.append(({"population_size": P, "generations": G, "mutation_rate": rate},
                            cfg, ga(population_size=P, generations=G, mutation_rate=rate)))
            return out
        for name in ("population_size", "generations", "mutation_rate"):
            for v in getattr(self, name):
                out.append(({"parameter": name, "value": v}, eval_cfg, ga(**{name: v})))
        for name in ("n_steps", "repetitions"):
            for v in getattr(self, name):
                out.append(({"parameter": name, "value": v}, eval_cfg.replace(**{name: v}), ga_cfg))
        return out


def run_hyper_sweep(sweep, grid_sizes, seeds, eval_cfg, ga_cfg, n_jobs=1):
    """Best fitness of one GA per (cell, L, seed); each row logs its evaluation count."""
    for name, v in sweep.extrapolated():
        warnings.warn(f"{name}={v} lies outside the tested range", stacklevel=2)
    cells = []
    for L in grid_sizes:
        for keys, cfg, ga in sweep.cells(eval_cfg, ga_cfg):
            cells.append(({**keys, "grid_size": L}, (cfg.replace(grid_size=L), ga)))
    rows = []
    for keys, res in _grid(cells, seeds, n_jobs):
        row = res.row(**keys)
        row["evaluations"] = len(res.trace.evaluations)
        rows.append(row)
    return rows


# ---------------------------------------------------------------- novelty solutions

def extract_novelty_solutions(individuals, mode="NSVA", count=50):
    """``NSVA``: every individual.  ``NSVQ``: the ``count`` with the highest solution
    quality, ties kept in evaluation order.  Returns ``(individual, label)`` pairs."""
    mode = mode.upper().replace("-", "")
    if mode not in ("NSVA", "NSVQ"):
        raise ParameterError(f"mode must be NSVA or NSVQ, got {mode!r}")
    labelled = [(ind, classify(ind.final_world())) for ind in individuals]
    if mode == "NSVA":
        return labelled
    order = sorted(range(len(labelled)), key=lambda i: -labelled[i][1].quality)
    return [labelled[i] for i in order[:count]]


# ---------------------------------------------------------------- aggregation

def distribution(rows, key="class"):
    """Fraction of rows per value of ``key``."""
    vals = [r[key] for r in rows if r.get(key, "") != ""]
    if not vals:
        return {}
    uniq, cnt = np.unique(vals, return_counts=True)
    return {str(u): c / len(vals) for u, c in zip(uniq, cnt)}


def family_fraction(rows, fam):
    fams = [family(r["class"]) for r in rows if r.get("class", "")]
    return sum(f == fam for f in fams) / len(fams) if fams else 0.0
