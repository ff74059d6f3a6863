import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minsurprise.analysis import (DISPERSION, GROUPING, PRECEDENCE, STRUCTURES, Behavior,
                                  classify, detect_all, detect_clusters, mean_predictions,
                                  similarity, solution_quality)
from minsurprise.fitness import EvalConfig, simulate
from minsurprise.controllers import init_genome
from minsurprise.world import place_agents_uniform, world_from_text


def grid(*rows):
    return "\n".join(rows)


SNAPSHOTS = [
    ("Lines", 1.0, grid("........", "........", "..>>><..", "........",
                        "........", "........", "........", "........")),
    ("Lines", 1.0, grid("........", "...v....", "...v....", "...^....",
                        "...^....", "........", "........", "........")),
    ("Lines", 1.0, grid("..........", ".>><......", "..........", "..........",
                        "......v...", "......^...", "......^...", "..........",
                        ".>>><<....", "..........")),
    ("Lines", 1.0, grid("......", "......", ">><<><", "......", "......", "......")),
    # two separated flank agents are tolerated
    ("Lines", 4 / 6, grid("........", "..^.^...", "..>>><..", "........",
                        "........", "........", "........", "........")),
    ("Pairs", 1.0, grid("........", ".><.....", "........", "........",
                        ".....v..", ".....^..", "........", "........")),
    ("Pairs", 1.0, grid("..........", ".><...><..", "..........", "..........",
                        "..........", "...v......", "...^......", "..........",
                        "..........", "..........")),
    ("Swirls", 1.0, grid("......", ".>v...", ".^<...", "......", "......", "......")),
    ("Swirls", 1.0, grid("........", ".>v.....", ".^<.....", "........",
                         "....v<..", "....>^..", "........", "........")),
    ("Squares", 1.0, grid("^.>.v.<.", "........", ">.v.<.^.", "........",
                          "v.<.^.>.", "........", "<.^.>.v.", "........")),
    ("Squares", 1.0, grid("..........", ".^.>.v....", "..........", ".>.<.^....",
                          "..........", ".v.^.<....", "..........", "..........",
                          "..........", "..........")),
    ("TriangularLattice", 1.0, grid("^.>.v.", ".<.^.>", "v.<.^.", ".>.v.<", "^.>.v.", ".<.^.>")),
    ("TriangularLattice", 1.0, grid("..........", ".^........", "..>.......", ".v.<......",
                                    "....^.....", ".....>....", "..........", "..........",
                                    "..........", "..........")),
    ("RandomDispersion", 1.0, grid("..........", ".^.....>..", "..........", "....v.....",
                                   "..........", ".......<..", "..^.......", "..........",
                                   ".....>....", "..........")),
    ("RandomDispersion", 1.0, grid("..........", ".^....>...", "..........", "...v......",
                                   ".......<..", "..........", ".>........", ".....v....",
                                   "..........", ".........^")),
    ("RandomDispersion", 1.0, grid("......", ".<>...", "......", "......", "......", "......")),
    ("Aggregation", 1.0, grid("........", ".^^^^...", ".^^^^...", ".^^^^...",
                              ".^^^^...", "........", "........", "........")),
    ("Aggregation", 1.0, grid("..........", "..^^^.....", ".^^^^^....", ".^^^^^....",
                              ".^^^^^....", "..^^^.....", "..........", "..........",
                              "..........", "..........")),
    ("Clustering", 1.0, grid("............", ".^^^^.......", ".^^^^.......", ".^^^^.......",
                             ".^^^^.......", "............", "............", ".......^^^^.",
                             ".......^^^^.", ".......^^^^.", ".......^^^^.", "............")),
    ("Clustering", 1.0, grid("............", ".^^^..^^^...", ".^^^..^^^...", ".^^^..^^^...",
                             "............", "............", "............", "...^^^......",
                             "...^^^......", "...^^^......", "............", "............")),
    ("LooseGrouping", 1.0, grid("..........", ".^^^......", ".^^^......", ".^^^......",
                                "....^^^...", "....^^^...", "....^^^...", "..........",
                                "..........", "..........")),
    ("LooseGrouping", 1.0, grid("............", ".^^^........", ".^^^........", ".^^^........",
                                "....^^^.....", "....^^^.....", "....^^^.....", ".......^^^..",
                                ".......^^^..", ".......^^^..", "............", "............")),
    ("Unclassified", 0.0, grid("......", ".^^...", ".^^...", "......", "......", "......")),
    ("Unclassified", 0.0, grid("........", ".^^^....", ".^^^....", "........",
                               "....^^..", "....^^..", "........", "........")),
    # ends facing outward do not make a line
    ("Unclassified", 0.0, grid("......", "......", ".<>>>.", "......", "......", "......")),
    # orthogonally adjacent flank cells break the line
    ("Unclassified", 0.0, grid("........", "..^^....", "..>>><..", "........",
                               "........", "........", "........", "........")),
    # equal coverage: Lines precede Swirls
    ("Lines", 0.5, grid("..........", ".>><<.....", "..........", "..........",
                        "......>v..", "......^<..", "..........", "..........",
                        "..........", "..........")),
]


@pytest.mark.parametrize("expected,quality,text", SNAPSHOTS,
                         ids=[f"{e}-{i}" for i, (e, _, _) in enumerate(SNAPSHOTS)])
def test_hand_snapshots(expected, quality, text):
    label = classify(text)
    assert str(label.behavior) == expected
    assert label.quality == pytest.approx(quality)


def test_every_class_covered():
    seen = {e for e, _, _ in SNAPSHOTS}
    assert seen == {b.value for b in Behavior}
    for b in Behavior:
        assert sum(e == b.value for e, _, _ in SNAPSHOTS) >= 2


def test_families_partition():
    assert GROUPING | DISPERSION | STRUCTURES == set(PRECEDENCE)
    assert not (GROUPING & DISPERSION) and not (GROUPING & STRUCTURES)


def test_cluster_kind_and_components():
    kind, comps = detect_clusters(world_from_text(SNAPSHOTS[18][2]))
    assert kind is Behavior.CLUSTERING and sorted(map(len, comps)) == [16, 16]
    assert detect_clusters(world_from_text(SNAPSHOTS[0][2])) == (None, [])


def test_dispersion_excludes_claimed():
    cover = detect_all(world_from_text(SNAPSHOTS[9][2]))
    assert not cover[Behavior.RANDOM_DISPERSION] & cover[Behavior.SQUARES]


def test_solution_quality():
    w = world_from_text(SNAPSHOTS[26][2])
    assert solution_quality(w, "Lines") == 0.5
    assert solution_quality(w, Behavior.SWIRLS) == 0.5
    assert solution_quality(w, Behavior.UNCLASSIFIED) == 0.0


def test_label_record():
    rec = classify(SNAPSHOTS[7][2]).to_record()
    assert rec["class"] == "Swirls" and rec["counts"]["Swirls"] == 4


def random_world(seed, L, n):
    return place_agents_uniform(L, min(n, L * L), np.random.default_rng(seed))


@given(st.integers(0, 2 ** 32), st.integers(3, 12), st.integers(0, 80), st.integers(1, 3))
def test_rotation_invariance(seed, L, n, k):
    w = random_world(seed, L, n)
    a, b = classify(w), classify(w.rotated(k))
    assert a.behavior == b.behavior and a.counts == b.counts


@given(st.integers(0, 2 ** 32), st.integers(3, 12), st.integers(0, 80),
       st.integers(0, 11), st.integers(0, 11))
def test_translation_invariance(seed, L, n, dx, dy):
    w = random_world(seed, L, n)
    moved = type(w)(L, (w.xs + dx) % L, (w.ys + dy) % L, w.headings)
    assert classify(w).counts == classify(moved).counts


@given(st.integers(0, 2 ** 32), st.integers(1, 12), st.integers(0, 80))
def test_quality_bounds(seed, L, n):
    w = random_world(seed, L, n)
    label = classify(w)
    assert 0.0 <= label.quality <= 1.0
    if label.behavior is not Behavior.UNCLASSIFIED:
        assert label.quality == pytest.approx(label.counts[label.behavior] / w.n_agents)


class TestSimilarity:
    def test_identity(self):
        w = random_world(0, 10, 40)
        assert similarity(w, w, 40) == 1.0

    def test_disjoint(self):
        a = world_from_text("^...\n>...\nv...\n<...")
        b = world_from_text("..^.\n..>.\n..v.\n..<.")
        assert similarity(b, a, 4) == 0.0
        assert similarity(type(a)(4, [], [], []), a, 4) == 0.0

    def test_heading_matters(self):
        w = random_world(1, 10, 40)
        turned = type(w)(10, w.xs, w.ys, (w.headings + 1) % 4)
        assert similarity(turned, w, 40) == 0.0

    def test_fewer_agents(self):
        w = random_world(2, 10, 40)
        poses = w.pose_array()[:30]
        assert similarity(poses, w, 40) == 0.75

    def test_invalid(self):
        with pytest.raises(ValueError):
            similarity([], [], 0)


class TestMeanPredictions:
    def test_trace_and_sums_agree(self):
        cfg = EvalConfig(grid_size=7, swarm_size=12, n_steps=20, repetitions=1)
        rec = simulate(init_genome(rng=np.random.default_rng(0)), cfg, 1, trace=True)
        from_trace = mean_predictions(rec)
        rec.trace = None
        assert np.allclose(from_trace, mean_predictions(rec))
        assert from_trace.shape == (14,)

    def test_fixed_targets_show(self):
        cfg = EvalConfig(grid_size=7, swarm_size=12, n_steps=20, repetitions=1,
                         predefined={0: 1, 3: 0})
        m = mean_predictions(simulate(init_genome(rng=np.random.default_rng(0)), cfg, 1))
        assert m[0] == 1.0 and m[3] == 0.0

    def test_empty(self):
        cfg = EvalConfig(grid_size=5, swarm_size=3, n_steps=1, repetitions=1)
        rec = simulate(np.zeros(776), cfg, 0)
        rec.prediction_count = 0
        with pytest.raises(ValueError):
            mean_predictions(rec)
