import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from minsurprise.config import load_config, parse_config
from minsurprise.controllers import init_genome
from minsurprise.exceptions import ConfigError, MinSurpriseError
from minsurprise.fitness import EvalConfig, evaluate_fitness, simulate
from minsurprise.persistence import (RunStore, read_manifest, read_run, replay, replay_record,
                                     report_summary, run_document, write_csv, write_jsonl)


class TestConfig:
    def test_empty_config_names_grid_size(self):
        with pytest.raises(ConfigError) as err:
            parse_config({})
        assert any("grid_size" in e for e in err.value.errors)

    def test_mutation_rate_named(self):
        with pytest.raises(ConfigError) as err:
            parse_config({"L": 10, "ga": {"mutation_rate": 1.5}})
        assert any(e.startswith("ga.") and "mutation_rate" in e for e in err.value.errors)

    def test_all_errors_reported(self):
        with pytest.raises(ConfigError) as err:
            parse_config({"world": {"grid_size": 5, "swarm_size": 100, "colour": 1},
                          "ga": {"elitism": -1}, "extra": 1, "seeds": [-3]})
        text = " | ".join(err.value.errors)
        for needle in ("world.colour", "swarm_size", "elitism", "extra", "seeds"):
            assert needle in text

    def test_defaults(self):
        spec = parse_config({"L": 15})
        assert spec.eval_cfg.swarm_size == 100 and spec.eval_cfg.n_steps == 500
        assert spec.eval_cfg.repetitions == 10 and spec.ga_cfg.population_size == 50
        assert spec.ga_cfg.generations == 100 and spec.ga_cfg.mutation_rate == 0.1
        assert spec.seeds == [0] and spec.kind == "evolve"

    def test_kind_params(self):
        spec = parse_config({"kind": "noise", "world": {"grid_size": 20}})
        assert spec.params["grid_sizes"] == [20]
        assert spec.params["levels"] == [0.0, 0.05, 0.10, 0.15]
        with pytest.raises(ConfigError):
            parse_config({"kind": "dance", "L": 5, "swarm_size": 1})

    def test_hash_stable(self, tmp_path):
        raw = {"L": 12, "seeds": [1, 2], "ga": {"generations": 3}}
        p = tmp_path / "c.yaml"
        p.write_text(yaml.safe_dump(raw))
        a, b = load_config(p), parse_config(dict(reversed(list(raw.items()))))
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != parse_config({**raw, "seeds": [1]}).config_hash()

    def test_yaml_error(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("world: [unclosed")
        with pytest.raises(ConfigError):
            load_config(p)


CFG = EvalConfig(grid_size=7, swarm_size=12, n_steps=15, repetitions=2)


@pytest.fixture
def stored(tmp_path):
    g = init_genome(rng=np.random.default_rng(3))
    _, rec = evaluate_fitness(g, CFG, 42)
    store = RunStore(tmp_path / "store")
    entry = store.persist(rec, g, CFG, keys={"kind": "evolve"})
    return store, entry, rec, g


class TestStore:
    def test_layout(self, stored):
        store, entry, rec, _ = stored
        assert entry["id"] == 0 and entry["run"] == "runs/000000.json"
        assert (store.root / "snapshots" / "000000.txt").read_text() == rec.final_world().to_text()
        assert (store.root / "genomes" / "000000.json").exists()
        assert read_manifest(store.manifest_path) == [entry]

    def test_write_read_write_identical(self, stored, tmp_path):
        store, _, _, _ = stored
        path = store.root / "runs" / "000000.json"
        rec, g, cfg, doc = read_run(path)
        again = json.dumps(run_document(rec, g, cfg, extra=doc["extra"]), sort_keys=True, indent=1)
        assert again + "\n" == path.read_text()

    def test_replay_matches(self, stored):
        store, entry, rec, g = stored
        ok, old, new = replay(store.manifest_path, entry["id"])
        assert ok and new.fitness == rec.fitness
        assert replay_record(rec, g, CFG).same_outcome(rec)

    def test_twenty_seeded_runs_byte_exact(self, tmp_path):
        store = RunStore(tmp_path / "many")
        g = init_genome(rng=np.random.default_rng(9))
        for seed in range(20):
            _, rec = evaluate_fitness(g, CFG.replace(noise=0.05), seed)
            store.persist(rec, g, CFG.replace(noise=0.05))
        for e in store.manifest():
            rec, genome, cfg, doc = read_run(store.root / e["run"])
            again = replay_record(rec, genome, cfg)
            a, b = again.to_dict(), rec.to_dict()
            a["wall_time"] = b["wall_time"]
            assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
            assert replay(store.manifest_path, e["id"])[0]

    def test_replay_detects_tampering(self, stored):
        store, entry, _, _ = stored
        path = store.root / entry["run"]
        doc = json.loads(path.read_text())
        doc["record"]["fitness"] = 0.123
        path.write_text(json.dumps(doc))
        ok, _, _ = replay(store.manifest_path, entry["id"])
        assert not ok

    def test_replay_missing_id(self, stored):
        with pytest.raises(MinSurpriseError):
            replay(stored[0].manifest_path, 9)

    def test_hash_mismatch(self, stored):
        _, _, rec, g = stored
        with pytest.raises(ConfigError):
            run_document(rec, g, CFG.replace(noise=0.1))

    def test_ids_increase(self, stored):
        store, _, rec, g = stored
        assert store.persist(rec, g, CFG)["id"] == 1
        assert len(store.manifest()) == 2

    def test_continued_run_replays(self, tmp_path):
        g = init_genome(rng=np.random.default_rng(0))
        start = simulate(g, CFG.replace(repetitions=1), 1).final_world()
        cfg = CFG.replace(repetitions=1)
        rec = simulate(g, cfg, 5, world=start)
        store = RunStore(tmp_path)
        e = store.persist(rec, g, cfg)
        assert replay(store.manifest_path, e["id"])[0]

    def test_bad_manifest_line(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text('{"id": 0}\nnot json\n')
        with pytest.raises(ConfigError, match=":2:"):
            read_manifest(p)


class TestSummary:
    ROWS = [{"grid_size": 10, "fitness": f, "quality": q, "class": c}
            for f, q, c in [(0.8, 0.5, "Lines"), (0.9, 0.7, "Lines"), (0.7, 0.9, "Swirls"),
                            (0.85, 0.6, "Aggregation")]] + \
           [{"grid_size": 20, "fitness": 0.6, "quality": 1.0, "class": "Squares"}]

    def test_quartiles_and_counts(self):
        out = report_summary(self.ROWS, ["grid_size"])
        assert [r["grid_size"] for r in out] == [10, 20]
        a = out[0]
        assert a["runs"] == 4 and a["fitness_median"] == pytest.approx(0.825)
        assert a["fitness_q1"] == pytest.approx(np.percentile([0.8, 0.9, 0.7, 0.85], 25))
        assert a["n_Lines"] == 2 and a["n_Squares"] == 0 and out[1]["n_Squares"] == 1

    def test_nan_ignored(self):
        rows = [{"k": 1, "fitness": float("nan"), "quality": 0.0, "class": ""},
                {"k": 1, "fitness": 0.5, "quality": 0.0, "class": "Lines"}]
        assert report_summary(rows, ["k"])[0]["fitness_median"] == 0.5

    def test_empty(self):
        with pytest.raises(MinSurpriseError):
            report_summary([], ["k"])

    def test_writers(self, tmp_path):
        write_csv(self.ROWS, tmp_path / "a.csv")
        write_jsonl(self.ROWS, tmp_path / "a.jsonl")
        header = (tmp_path / "a.csv").read_text().splitlines()[0]
        assert header == "grid_size,fitness,quality,class"
        assert read_manifest(tmp_path / "a.jsonl") == self.ROWS


@pytest.mark.parametrize("path", sorted((Path(__file__).parents[1] / "configs").glob("*.yaml")),
                         ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    spec = load_config(path)
    assert spec.kind in path.name
