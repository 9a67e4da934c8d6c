"""Outer LNS loop: simulated-annealing acceptance, cooling, tracing, batching."""

from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .core import build_initial_solution, evaluate, remove_nodes, repair
from .core.model import CostBreakdown, Instance, Solution

# Operator feedback outcomes (consumed by adaptive operators).
NEW_BEST = "new_best"
ACCEPTED_BETTER = "accepted_better"
ACCEPTED_WORSE = "accepted_worse"
REJECTED = "rejected"


@dataclass
class SAState:
    temperature: float
    rng: np.random.Generator


def sa_accept(prev: CostBreakdown, cand: CostBreakdown, sa: SAState) -> bool:
    """Accept when fewer vehicles are used, or when the candidate distance
    beats prev.distance minus T*log(Rnd) for one uniform draw on (0, 1)."""
    if cand.vehicle_count < prev.vehicle_count:
        return True
    rnd = sa.rng.random()
    if rnd == 0.0:
        rnd = np.nextafter(0.0, 1.0)
    return cand.total_distance < prev.total_distance - sa.temperature * math.log(rnd)


@dataclass
class SearchConfig:
    iterations: int = 1000
    t0: float | None = None  # default: 1% of initial solution distance
    alpha: float | None = None  # default: decay to 0.1*t0 over the run
    seed: int = 0

    def initial_temperature(self, initial_distance: float) -> float:
        if self.t0 is not None:
            return self.t0
        return max(0.01 * initial_distance, 1e-9)

    def decay(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return 0.1 ** (1.0 / self.iterations)


@dataclass
class SearchTrace:
    rows: list[tuple] = field(default_factory=list)  # per-iteration tuples
    wall_clock: list[float] = field(default_factory=list)

    HEADER = ("iter", "current_cost", "best_cost", "k", "temperature", "accepted", "op")

    def append(self, iteration, current_cost, best_cost, k, temperature, accepted, op, wall):
        self.rows.append(
            (iteration, current_cost, best_cost, k, temperature, int(accepted), op)
        )
        self.wall_clock.append(wall)

    def best_costs(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.HEADER)
            writer.writerows(self.rows)


def default_removal_count(n_customers: int, fraction: float = 0.10) -> int:
    return max(1, round(fraction * n_customers))


def run_search(
    instance: Instance,
    operator,
    config: SearchConfig,
    rng: np.random.Generator | None = None,
) -> tuple[Solution, CostBreakdown, SearchTrace]:
    """One full LNS run; returns the best complete feasible solution found."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    start = time.perf_counter()

    current = build_initial_solution(instance, rng)
    current_cost = evaluate(instance, current)
    best = current.copy()
    best_cost = current_cost

    t0 = config.initial_temperature(current_cost.total_distance)
    alpha = config.decay()
    trace = SearchTrace()

    for t in range(1, config.iterations + 1):
        temperature = t0 * alpha**t
        proposal = operator.propose(instance, current, rng)
        candidate = remove_nodes(current, proposal)
        repair(instance, candidate, proposal)
        cand_cost = evaluate(instance, candidate)

        accepted = sa_accept(current_cost, cand_cost, SAState(temperature, rng))
        if cand_cost.total_cost < best_cost.total_cost:
            outcome = NEW_BEST
            best = candidate.copy()
            best_cost = cand_cost
        elif accepted and cand_cost.total_cost < current_cost.total_cost:
            outcome = ACCEPTED_BETTER
        elif accepted:
            outcome = ACCEPTED_WORSE
        else:
            outcome = REJECTED
        if accepted:
            current = candidate
            current_cost = cand_cost

        observe = getattr(operator, "observe", None)
        if observe is not None:
            observe(outcome)

        trace.append(
            t,
            current_cost.total_cost,
            best_cost.total_cost,
            current_cost.vehicle_count,
            temperature,
            accepted,
            getattr(operator, "name", type(operator).__name__),
            time.perf_counter() - start,
        )

    return best, best_cost, trace


@dataclass
class MemberResult:
    instance_index: int
    member: int
    best_cost: float
    vehicle_count: int
    wall_clock: float
    trace: SearchTrace | None


@dataclass
class BatchResult:
    members: list[MemberResult]
    per_instance_min: list[float]
    mean_cost: float


def _member_seed(base_seed: int, instance_index: int, member: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([base_seed, instance_index, member]))


def _run_member(args):
    from .operators import make_operator

    instance, op_spec, config, instance_index, member, keep_trace = args
    rng = _member_seed(config.seed, instance_index, member)
    operator = make_operator(op_spec, instance)
    start = time.perf_counter()
    _, best_cost, trace = run_search(instance, operator, config, rng)
    wall = time.perf_counter() - start
    return MemberResult(
        instance_index,
        member,
        best_cost.total_cost,
        best_cost.vehicle_count,
        wall,
        trace if keep_trace else None,
    )


def run_batch(
    instances: list[Instance],
    op_spec: dict,
    config: SearchConfig,
    batch: int = 1,
    parallelism: int = 1,
    keep_traces: bool = False,
) -> BatchResult:
    """B independent searches per instance on distinct rng streams.

    Reports the per-instance minimum and the cross-instance mean; results
    are identical for any parallelism degree.
    """
    jobs = [
        (inst, op_spec, config, ii, member, keep_traces)
        for ii, inst in enumerate(instances)
        for member in range(batch)
    ]
    cap = os.environ.get("NEULNS_THREADS")
    if cap:
        parallelism = min(parallelism, max(1, int(cap)))
    if parallelism > 1 and len(jobs) > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(parallelism) as pool:
            members = pool.map(_run_member, jobs)
    else:
        members = [_run_member(job) for job in jobs]

    per_instance_min = []
    for ii in range(len(instances)):
        costs = [m.best_cost for m in members if m.instance_index == ii]
        per_instance_min.append(min(costs))
    return BatchResult(members, per_instance_min, float(np.mean(per_instance_min)))
