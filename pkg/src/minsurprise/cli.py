"""``minsurprise`` command-line entry point."""

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import experiments as ex
from .analysis import classify
from .config import load_config, parse_config
from .controllers import load_genome
from .evolution import random_baseline, run_generational_ga
from .exceptions import MinSurpriseError
from .fitness import EvalConfig, simulate
from .novelty import run_novelty_search
from .persistence import (RunStore, read_run, replay, replay_record, report_summary,
                          write_csv, write_jsonl)
from .world import world_from_text


def _out(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _spec(args, kind):
    spec = load_config(args.config, kind)
    if getattr(args, "seed", None) is not None:
        spec.seeds = [args.seed]
    return spec


def _emit(obj):
    print(json.dumps(obj, sort_keys=True, default=float))


def _finish(rows, out, name, keys):
    out = _out(out)
    write_csv(rows, out / f"{name}.csv")
    write_csv(report_summary(rows, keys), out / f"{name}_summary.csv")
    write_jsonl(rows, out / f"{name}.jsonl")
    for r in report_summary(rows, keys):
        _emit(r)


def cmd_evolve(args):
    spec = _spec(args, "evolve")
    store = RunStore(_out(args.out))
    rows = []
    for seed in spec.seeds:
        trace = run_generational_ga(spec.eval_cfg, spec.ga_cfg, seed, n_jobs=spec.n_jobs)
        rec = trace.best_record
        if args.trace:
            # re-run the best individual's worst repetition with the per-step trace on
            rec.trace = replay_record(rec, trace.best_genome, spec.eval_cfg, trace=True).trace
        entry = store.persist(rec, trace.best_genome, spec.eval_cfg, keys={"kind": "evolve"})
        name = f"{entry['id']:06d}"
        write_jsonl([e.to_dict() for e in trace.evaluations] + [{"summary": trace.summary()}],
                    store.root / f"evolution_{name}.jsonl")
        rows.append(entry)
        _emit({k: entry[k] for k in ("id", "seed", "fitness", "class", "quality")})
    write_csv(report_summary(rows, ["grid_size"]), store.root / "summary.csv")
    return 0


def cmd_rerun(args):
    genome, layout = load_genome(args.genome)
    cfg = EvalConfig(grid_size=args.grid_size, swarm_size=args.swarm_size, n_steps=args.steps,
                     repetitions=1, noise=args.noise, layout=layout)
    rec = simulate(genome, cfg, args.seed, trace=args.trace)
    label = classify(rec.final_world())
    row = {"grid_size": args.grid_size, "seed": args.seed, "fitness": rec.fitness,
           "class": str(label.behavior), "quality": label.quality}
    if args.out:
        row = RunStore(_out(args.out)).persist(rec, genome, cfg, keys={"kind": "rerun"}, label=label)
    _emit(row)
    return 0


def cmd_classify(args):
    text = sys.stdin.read() if args.snapshot == "-" else Path(args.snapshot).read_text()
    print(classify(world_from_text(text)).to_json())
    return 0


def cmd_noise(args):
    spec = _spec(args, "noise")
    p = spec.params
    rows = ex.run_noise_study(p["grid_sizes"], p["levels"], spec.seeds, spec.eval_cfg,
                              spec.ga_cfg, n_jobs=spec.n_jobs)
    _finish(rows, args.out, "noise", ["grid_size", "noise"])
    return 0


def cmd_engineered(args):
    spec = _spec(args, "engineered")
    p = spec.params
    rows = ex.run_engineered_so(p["grid_sizes"], args.mode or p["mode"], spec.seeds, spec.eval_cfg,
                                spec.ga_cfg, {int(k): float(v) for k, v in p["mutation_overrides"].items()},
                                n_jobs=spec.n_jobs)
    _finish(rows, args.out, "engineered", ["grid_size", "mode"])
    return 0


def cmd_sweep(args):
    spec = _spec(args, "sweep")
    p = dict(spec.params)
    grid_sizes = p.pop("grid_sizes")
    sweep = ex.SweepGrid(**p)
    rows = ex.run_hyper_sweep(sweep, grid_sizes, spec.seeds, spec.eval_cfg, spec.ga_cfg,
                              n_jobs=spec.n_jobs)
    keys = ["grid_size", "population_size", "generations", "mutation_rate"] if sweep.budget \
        else ["grid_size", "parameter", "value"]
    _finish(rows, args.out, "sweep", keys)
    return 0


def cmd_novelty(args):
    spec = _spec(args, "novelty")
    rows = []
    for seed in spec.seeds:
        res = run_novelty_search(spec.eval_cfg, spec.ga_cfg, spec.novelty_cfg, seed, spec.n_jobs)
        for mode in ("NSVA", "NSVQ"):
            for ind, label in ex.extract_novelty_solutions(res.individuals, mode,
                                                           spec.params["count"]):
                rows.append({"set": mode, "seed": seed, "grid_size": spec.eval_cfg.grid_size,
                             "generation": ind.generation, "individual": ind.index,
                             "novelty": ind.novelty, "fitness": ind.fitness,
                             "class": str(label.behavior), "quality": label.quality})
    _finish(rows, args.out, "novelty", ["grid_size", "set"])
    return 0


def cmd_random_baseline(args):
    if args.config:
        spec = _spec(args, "random-baseline")
        cfg, seeds = spec.eval_cfg, spec.seeds
        count = args.count or spec.params["count"]
        pool = args.pool_size or spec.params["pool_size"]
        mode = args.mode or spec.params["mode"]
    else:
        if args.grid_size is None:
            raise MinSurpriseError("random-baseline needs --config or --grid-size")
        cfg = parse_config({"L": args.grid_size}).eval_cfg
        seeds = [args.seed or 0]
        count, pool, mode = args.count or 50, args.pool_size or 5000, args.mode or "plain"
    rows = []
    store = RunStore(_out(args.out)) if args.out else None
    for seed in seeds:
        for c, (g, f, rec) in enumerate(random_baseline(cfg, count, mode, pool, seed)):
            row = {"mode": mode, "pool_size": pool, "seed": seed, "index": c,
                   "grid_size": cfg.grid_size, "fitness": f}
            if store:
                row = store.persist(rec, g, cfg, keys={"kind": "random-baseline", "mode": mode})
            rows.append(row)
            _emit(row)
    return 0


def cmd_damage(args):
    record, genome, cfg, _ = read_run(args.record)
    region = tuple(int(v) for v in args.region.split(","))
    if len(region) != 4:
        raise MinSurpriseError("--region expects x0,y0,x1,y1")
    spec = ex.DamageSpec(args.mode, region, args.steps, args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = ex.run_damage_repair(genome, record, spec, cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    row = res.row()
    if args.out:
        store = RunStore(_out(args.out))
        store.persist(res.record, genome, res.eval_cfg, keys={"kind": "repair", **row})
    _emit(row)
    return 0


def cmd_replay(args):
    ok, stored, again = replay(args.manifest, args.id)
    _emit({"id": args.id, "match": ok, "stored_fitness": stored.fitness,
           "replayed_fitness": again.fitness})
    return 0 if ok else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="minsurprise", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run the generational GA for every configured seed")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", action="store_true", help="store the per-step trace of the best run")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("rerun", help="run a stored genome once on a fresh placement")
    p.add_argument("--genome", required=True)
    p.add_argument("--grid-size", type=int, required=True)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--swarm-size", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_rerun)

    p = sub.add_parser("classify", help="classify a text snapshot ('-' reads stdin)")
    p.add_argument("--snapshot", required=True)
    p.set_defaults(func=cmd_classify)

    for name, fn, extra in (("noise", cmd_noise, False), ("engineered", cmd_engineered, True),
                            ("novelty", cmd_novelty, False), ("sweep", cmd_sweep, False)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default=f"results/{name}")
        if extra:
            p.add_argument("--mode", choices=["Partial", "Full", "partial", "full"])
        p.set_defaults(func=fn)

    p = sub.add_parser("damage", help="damage a stored run's final world and run a repair run")
    p.add_argument("--record", required=True)
    p.add_argument("--mode", choices=["remove", "reposition"], required=True)
    p.add_argument("--region", required=True, help="x0,y0,x1,y1 (inclusive)")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_damage)

    p = sub.add_parser("random-baseline", help="plain or selected random search")
    p.add_argument("--mode", choices=["plain", "selected"])
    p.add_argument("--pool-size", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--config")
    p.add_argument("--grid-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_random_baseline)

    p = sub.add_parser("replay", help="re-simulate a persisted run and compare")
    p.add_argument("--manifest", required=True)
    p.add_argument("--id", type=int, required=True)
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MinSurpriseError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
