import csv
import io
import json

import numpy as np
import pytest
import yaml

from minsurprise.cli import main
from minsurprise.controllers import init_genome, save_genome

BASE = {"world": {"grid_size": 6, "swarm_size": 8, "n_steps": 10, "repetitions": 1},
        "ga": {"population_size": 3, "generations": 2}, "seeds": [1]}


def write_cfg(tmp_path, **extra):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump({**BASE, **extra}))
    return str(p)


def last_json(capsys):
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("{")]
    return [json.loads(ln) for ln in lines]


@pytest.fixture
def evolved(tmp_path, capsys):
    out = tmp_path / "ev"
    assert main(["evolve", "--config", write_cfg(tmp_path), "--out", str(out)]) == 0
    capsys.readouterr()
    return out


def test_evolve_outputs(evolved):
    names = {p.name for p in evolved.iterdir()}
    assert {"manifest.jsonl", "summary.csv", "evolution_000000.jsonl", "runs"} <= names
    log = [json.loads(ln) for ln in (evolved / "evolution_000000.jsonl").read_text().splitlines()]
    assert log[-1]["summary"]["generations"] == 2 and len(log) == 7


def test_replay(evolved, capsys):
    assert main(["replay", "--manifest", str(evolved / "manifest.jsonl"), "--id", "0"]) == 0
    assert last_json(capsys)[0]["match"] is True


def test_classify_file_and_stdin(tmp_path, capsys, monkeypatch):
    snap = tmp_path / "s.txt"
    snap.write_text("......\n.>v...\n.^<...\n......\n......\n......\n")
    assert main(["classify", "--snapshot", str(snap)]) == 0
    assert last_json(capsys)[0]["class"] == "Swirls"
    monkeypatch.setattr("sys.stdin", io.StringIO(snap.read_text()))
    assert main(["classify", "--snapshot", "-"]) == 0
    assert last_json(capsys)[0]["quality"] == 1.0


def test_classify_bad_snapshot(tmp_path, capsys):
    snap = tmp_path / "s.txt"
    snap.write_text("..\n.")
    assert main(["classify", "--snapshot", str(snap)]) == 2
    assert "error" in capsys.readouterr().err


def test_rerun(tmp_path, capsys):
    g = tmp_path / "g.json"
    save_genome(g, init_genome(rng=np.random.default_rng(0)))
    assert main(["rerun", "--genome", str(g), "--grid-size", "9", "--steps", "10",
                 "--swarm-size", "20", "--out", str(tmp_path / "rr")]) == 0
    row = last_json(capsys)[0]
    assert row["grid_size"] == 9 and 0 <= row["fitness"] <= 1
    assert main(["rerun", "--genome", str(g), "--grid-size", "3", "--swarm-size", "20"]) == 2


def test_damage(evolved, tmp_path, capsys):
    run = evolved / "runs" / "000000.json"
    assert main(["damage", "--record", str(run), "--mode", "remove", "--region", "0,0,2,2",
                 "--steps", "5", "--out", str(tmp_path / "dmg")]) == 0
    row = last_json(capsys)[-1]
    assert {"quality_start", "quality_end", "similarity", "affected"} <= set(row)
    assert main(["damage", "--record", str(run), "--mode", "remove", "--region", "0,0"]) == 2


@pytest.mark.parametrize("cmd,extra,name", [
    ("noise", {"params": {"levels": [0.0, 0.1]}}, "noise"),
    ("engineered", {"params": {"mode": "Full"}}, "engineered"),
    ("sweep", {"params": {"generations": [2]}}, "sweep"),
    ("novelty", {"params": {"count": 2}, "novelty": {"k": 2, "repetitions": 1}}, "novelty"),
])
@pytest.mark.filterwarnings("ignore:generations=2")
def test_study_commands(tmp_path, capsys, cmd, extra, name):
    out = tmp_path / cmd
    assert main([cmd, "--config", write_cfg(tmp_path, **extra), "--out", str(out)]) == 0
    for suffix in (".csv", "_summary.csv", ".jsonl"):
        assert (out / f"{name}{suffix}").exists()
    rows = list(csv.DictReader((out / f"{name}.csv").open()))
    assert rows and "fitness" in rows[0]


def test_random_baseline(tmp_path, capsys):
    assert main(["random-baseline", "--grid-size", "6", "--mode", "selected", "--pool-size", "2",
                 "--count", "2", "--seed", "3"]) == 2   # default swarm of 100 does not fit 6x6
    cfg = write_cfg(tmp_path)
    assert main(["random-baseline", "--config", cfg, "--mode", "selected", "--pool-size", "2",
                 "--count", "2", "--out", str(tmp_path / "rb")]) == 0
    rows = last_json(capsys)
    assert len(rows) == 2 and rows[0]["kind"] == "random-baseline"


def test_config_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump({"ga": {"mutation_rate": 1.5}}))
    assert main(["evolve", "--config", str(p), "--out", str(tmp_path / "x")]) == 2
    err = capsys.readouterr().err
    assert "mutation_rate" in err and "grid_size" in err
