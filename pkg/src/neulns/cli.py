"""Command-line interface: gen, solve, train, eval, bench."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import engine
from .core import check_feasibility, evaluate
from .engine import SearchConfig, run_search
from .errors import NeulnsError, TrainingDiverged
from .instance_io import (
    GeneratorConfig,
    generate,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
)
from .operators import OPERATOR_NAMES, make_operator
from .training import TrainConfig, derive_seed, train

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4


def _op_spec(args) -> dict:
    spec = {"op": args.op, "m": args.m}
    if args.op == "neural":
        if not args.ckpt:
            raise UsageError("--op neural requires --ckpt")
        spec["ckpt"] = args.ckpt
        spec["mode"] = getattr(args, "mode", "greedy")
    return spec


class UsageError(Exception):
    pass


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(args.count):
        seed = derive_seed(args.seed, 0, i)
        config = GeneratorConfig(
            n_customers=args.n,
            variant=args.variant,
            vehicle_cost=args.vehicle_cost,
            seed=seed,
        )
        instance = generate(config)
        fname = f"instance_{i:04d}.json"
        save_instance(instance, out / fname)
        entries.append({"file": fname, "seed": seed, "name": instance.name})
    manifest = {
        "variant": args.variant,
        "n_customers": args.n,
        "count": args.count,
        "base_seed": args.seed,
        "vehicle_cost": args.vehicle_cost,
        "instances": entries,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {args.count} instances to {out}")
    return 0


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    spec = _op_spec(args)
    config = SearchConfig(iterations=args.iters, t0=args.t0, alpha=args.alpha, seed=args.seed)

    best_sol = None
    best_cost = None
    best_trace = None
    for member in range(args.batch):
        rng = engine._member_seed(args.seed, 0, member)
        operator = make_operator(spec, instance)
        sol, cost, trace = run_search(instance, operator, config, rng)
        if best_cost is None or cost.total_cost < best_cost.total_cost:
            best_sol, best_cost, best_trace = sol, cost, trace

    if args.trace:
        best_trace.write_csv(args.trace)
    if args.solution:
        save_solution(best_sol, args.solution, instance.name, best_cost)
    print(
        json.dumps(
            {
                "instance": instance.name,
                "op": args.op,
                "iterations": args.iters,
                "batch": args.batch,
                "best_cost": best_cost.total_cost,
                "total_distance": best_cost.total_distance,
                "vehicle_count": best_cost.vehicle_count,
            }
        )
    )
    return 0


def cmd_train(args) -> int:
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
    if args.variant:
        overrides["variant"] = args.variant
    valid = {f.name for f in fields(TrainConfig)}
    unknown = set(overrides) - valid
    if unknown:
        raise UsageError(
            f"invalid config keys {sorted(unknown)}; valid keys: {sorted(valid)}"
        )
    cfg = TrainConfig(**overrides)
    last = train(cfg, args.out, resume=args.resume)
    print(f"training complete; last checkpoint: {last}")
    return 0


def cmd_eval(args) -> int:
    instance = load_instance(args.instance)
    solution = load_solution(args.solution)
    violations = check_feasibility(instance, solution)
    cost = evaluate(instance, solution) if solution.is_complete else None
    print(
        json.dumps(
            {
                "instance": instance.name,
                "total_distance": cost.total_distance if cost else None,
                "vehicle_count": cost.vehicle_count if cost else None,
                "total_cost": cost.total_cost if cost else None,
                "violations": [
                    {"kind": v.kind, "route": v.route_index, "node": v.node, "magnitude": v.magnitude}
                    for v in violations
                ],
            }
        )
    )
    return 0


def cmd_bench(args) -> int:
    inst_dir = Path(args.instances)
    paths = sorted(inst_dir.glob("instance_*.json")) or sorted(inst_dir.glob("*.json"))
    paths = [p for p in paths if p.name != "manifest.json"]
    if not paths:
        raise UsageError(f"no instance files found in {inst_dir}")
    instances = [load_instance(p) for p in paths]
    ops = args.ops.split(",")
    for op in ops:
        if op not in OPERATOR_NAMES:
            raise UsageError(f"unknown operator {op!r}; choose from {OPERATOR_NAMES}")
    seeds = [int(s) for s in args.seeds.split(",")]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    parallel = args.parallel or (os.cpu_count() or 1)

    raw_rows = []
    conv: dict[str, np.ndarray] = {}
    agg_rows = []
    t_start = time.perf_counter()
    for op in ops:
        spec = {"op": op, "m": args.m}
        if op == "neural":
            if not args.ckpt:
                raise UsageError("neural op in --ops requires --ckpt")
            spec["ckpt"] = args.ckpt
            spec["mode"] = "greedy"
        per_instance_minima = []
        per_instance_k = []
        conv_curves = []
        for seed in seeds:
            config = SearchConfig(iterations=args.iters, seed=seed)
            result = engine.run_batch(
                instances, spec, config, batch=args.batch,
                parallelism=parallel, keep_traces=True,
            )
            for member in result.members:
                raw_rows.append(
                    (
                        op,
                        paths[member.instance_index].name,
                        seed,
                        member.member,
                        member.best_cost,
                        member.vehicle_count,
                        args.iters,
                        member.wall_clock,
                    )
                )
            per_instance_minima.extend(result.per_instance_min)
            for ii in range(len(instances)):
                curves = [
                    m.trace.best_costs()
                    for m in result.members
                    if m.instance_index == ii
                ]
                conv_curves.append(np.minimum.reduce(curves))
                best_members = [
                    m for m in result.members if m.instance_index == ii
                ]
                per_instance_k.append(
                    min(best_members, key=lambda m: m.best_cost).vehicle_count
                )
        conv[op] = np.mean(conv_curves, axis=0)
        agg_rows.append(
            (
                op,
                float(np.mean(per_instance_minima)),
                float(np.mean(per_instance_k)),
                len(per_instance_minima),
            )
        )

    with open(out / "runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ("op", "instance", "seed", "member", "best_cost", "k", "iterations", "wall_clock")
        )
        writer.writerows(raw_rows)
    with open(out / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("op", "mean_cost", "mean_k", "n_runs"))
        writer.writerows(agg_rows)
    with open(out / "convergence.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter"] + ops)
        for t in range(args.iters):
            writer.writerow([t + 1] + [conv[op][t] for op in ops])
    with open(out / "config.json", "w") as fh:
        json.dump(
            {
                "instances": [p.name for p in paths],
                "ops": ops,
                "iters": args.iters,
                "batch": args.batch,
                "seeds": seeds,
                "m": args.m,
                "wall_clock_total": time.perf_counter() - t_start,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    for op, mean_cost, mean_k, n in agg_rows:
        print(f"{op}: mean_cost={mean_cost:.2f} mean_k={mean_k:.2f} ({n} runs)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neulns", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate random instances")
    p.add_argument("--variant", choices=("cvrp", "cvrptw"), default="cvrp")
    p.add_argument("--n", type=int, required=True, help="customers per instance")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vehicle-cost", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one LNS search")
    p.add_argument("--instance", required=True)
    p.add_argument("--op", choices=OPERATOR_NAMES, default="random")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=None, help="removal count per iteration")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--ckpt", default=None)
    p.add_argument("--mode", choices=("greedy", "sample"), default="greedy")
    p.add_argument("--trace", default=None, help="trace CSV output path")
    p.add_argument("--solution", default=None, help="solution JSON output path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("train", help="train the neural operator")
    p.add_argument("--variant", choices=("cvrp", "cvrptw"), default=None)
    p.add_argument("--config", default=None, help="JSON file with TrainConfig fields")
    p.add_argument("--out", required=True)
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a solution file against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="compare operators on an instance set")
    p.add_argument("--instances", required=True, help="directory of instance JSON files")
    p.add_argument("--ops", default="random,alns,sisr")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--seeds", default="0")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--ckpt", default=None)
    p.add_argument("--parallel", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (NeulnsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
