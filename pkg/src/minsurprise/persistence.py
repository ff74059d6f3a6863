"""Run store: self-contained run files, text snapshots, genome files and a JSONL manifest.

Directory layout::

    manifest.jsonl          one line per persisted run (append-only)
    runs/<id>.json          record + evaluation config + genome + label
    snapshots/<id>.txt      final world as a text snapshot
    genomes/<id>.json       genome file
"""

import csv
import json
import os
import threading
from pathlib import Path

import numpy as np

from .analysis import classify
from .controllers import genome_from_dict, genome_to_dict, save_genome
from .exceptions import ConfigError, MinSurpriseError
from .fitness import EvalConfig, RunRecord, simulate
from .rng import derive_seed


def _dump(obj, path):
    # float repr in json round-trips float64 exactly
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def run_document(record, genome, eval_cfg, label=None, extra=None):
    """Everything needed to reload and replay one run, as a JSON-ready dict."""
    if record.config_hash != eval_cfg.config_hash():
        raise ConfigError("record was not produced by the given evaluation config")
    label = label or classify(record.final_world())
    return {"record": record.to_dict(), "eval_config": eval_cfg.to_dict(),
            "genome": genome_to_dict(genome, eval_cfg.layout), "label": label.to_record(),
            "extra": extra or {}}


def read_run(path):
    """Load a run file -> (record, genome, eval_cfg, document)."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        record = RunRecord.from_dict(doc["record"])
        cfg = EvalConfig.from_dict(doc["eval_config"])
        genome, _ = genome_from_dict(doc["genome"])
    except (KeyError, TypeError) as err:
        raise ConfigError(f"{path}: not a run file ({err})") from err
    return record, genome, cfg, doc


class RunStore:
    """Single-writer store; ``persist`` is safe to call from several threads."""

    def __init__(self, root):
        self.root = Path(root)
        for sub in ("runs", "snapshots", "genomes"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.root / "manifest.jsonl"
        self._lock = threading.Lock()

    def manifest(self):
        return read_manifest(self.manifest_path) if self.manifest_path.exists() else []

    def _next_id(self):
        rows = self.manifest()
        return max((r["id"] for r in rows), default=-1) + 1

    def persist(self, record, genome, eval_cfg, keys=None, label=None):
        """Write one run and append its manifest line; returns the manifest entry."""
        doc = run_document(record, genome, eval_cfg, label, keys)
        with self._lock:
            rid = self._next_id()
            name = f"{rid:06d}"
            _dump(doc, self.root / "runs" / f"{name}.json")
            with open(self.root / "snapshots" / f"{name}.txt", "w") as fh:
                fh.write(record.final_world().to_text())
            save_genome(self.root / "genomes" / f"{name}.json", genome, eval_cfg.layout)
            entry = {"id": rid, **(keys or {}), "seed": record.seed,
                     "repetition": record.repetition, "grid_size": record.grid_size,
                     "fitness": record.fitness, "class": doc["label"]["class"],
                     "quality": doc["label"]["quality"], "config_hash": record.config_hash,
                     "run": f"runs/{name}.json"}
            with open(self.manifest_path, "a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return entry

    def load(self, rid):
        return read_run(self.root / "runs" / f"{int(rid):06d}.json")


def persist_run(record, genome, eval_cfg, directory, keys=None):
    return RunStore(directory).persist(record, genome, eval_cfg, keys)


def read_manifest(path):
    rows = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            if line.strip():
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as err:
                    raise ConfigError(f"{path}:{n}: bad manifest line ({err})") from err
    return rows


def replay_record(record, genome, eval_cfg, trace=False):
    """Re-simulate the run behind ``record`` from its seed.

    Runs that continued from a given world (repair runs) do not start from the
    seeded placement; those are replayed from their stored initial poses.
    """
    seed = record.seed if record.repetition < 0 else derive_seed(record.seed, "rep", record.repetition)
    again = simulate(genome, eval_cfg, seed, trace=trace)
    if not np.array_equal(again.initial_poses, record.initial_poses):
        again = simulate(genome, eval_cfg, seed, world=record.initial_world(), trace=trace)
    again.seed, again.repetition = record.seed, record.repetition
    return again


def replay(manifest_path, rid):
    """Replay manifest entry ``rid``; returns ``(matches, stored, replayed)``."""
    manifest_path = Path(manifest_path)
    rows = [r for r in read_manifest(manifest_path) if r["id"] == int(rid)]
    if not rows:
        raise MinSurpriseError(f"no run with id {rid} in {manifest_path}")
    record, genome, cfg, doc = read_run(manifest_path.parent / rows[0]["run"])
    again = replay_record(record, genome, cfg)
    label = classify(again.final_world()).to_record()
    ok = again.same_outcome(record) and label == doc["label"]
    return ok, record, again


def write_jsonl(rows, path, mode="w"):
    with open(path, mode) as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def write_csv(rows, path):
    rows = list(rows)
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)


def _quartiles(values):
    v = np.asarray([x for x in values if x == x], dtype=np.float64)   # drop NaN
    if v.size == 0:
        return float("nan"), float("nan"), float("nan")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return float(q1), float(med), float(q3)


def report_summary(rows, keys):
    """Per-group fitness/quality quartiles and class histogram."""
    rows = list(rows)
    if not rows:
        raise MinSurpriseError("manifest is empty")
    keys = list(keys)
    classes = sorted({str(r.get("class", "")) for r in rows if r.get("class", "")})
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r.get(k) for k in keys), []).append(r)
    out = []
    for gk in sorted(groups, key=lambda t: tuple(str(x) for x in t)):
        members = groups[gk]
        row = dict(zip(keys, gk))
        row["runs"] = len(members)
        for metric in ("fitness", "quality"):
            q1, med, q3 = _quartiles(r.get(metric, float("nan")) for r in members)
            row.update({f"{metric}_q1": q1, f"{metric}_median": med, f"{metric}_q3": q3})
        for c in classes:
            row[f"n_{c}"] = sum(str(r.get("class", "")) == c for r in members)
        out.append(row)
    return out

