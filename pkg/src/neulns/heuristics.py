"""Handcrafted baseline destroy operators: random, ALNS, SISR.

All three share the engine's least-cost repair; they differ only in which
nodes they remove and in what order those nodes are reinserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .core.model import Instance, Solution


def _assigned(solution: Solution) -> list[int]:
    return [u for route in solution.routes for u in route]


class RandomOperator:
    """Uniform removal without replacement; repair order = sampled order."""

    name = "random"

    def __init__(self, m: int):
        self.m = m

    def propose(self, instance: Instance, solution: Solution, rng) -> list[int]:
        assigned = _assigned(solution)
        m = min(self.m, len(assigned))
        idx = rng.choice(len(assigned), size=m, replace=False)
        return [assigned[i] for i in idx]


def random_destroy(instance, solution, m, rng) -> list[int]:
    return RandomOperator(m).propose(instance, solution, rng)


def _removal_savings(instance: Instance, solution: Solution):
    """Detour saving d(prev,u)+d(u,next)-d(prev,next) for every assigned node."""
    dist = instance.dist
    savings = []
    for route in solution.routes:
        for p, u in enumerate(route):
            prev = route[p - 1] if p > 0 else 0
            nxt = route[p + 1] if p + 1 < len(route) else 0
            savings.append((dist[prev, u] + dist[u, nxt] - dist[prev, nxt], u))
    return savings


def worst_destroy(instance, solution, m, rng) -> list[int]:
    savings = _removal_savings(instance, solution)
    savings.sort(key=lambda t: (-t[0], t[1]))
    return [u for _, u in savings[:m]]


def shaw_destroy(instance, solution, m, rng) -> list[int]:
    """Seed uniformly, then take the m-1 most related nodes (distance + demand)."""
    assigned = _assigned(solution)
    seed = assigned[rng.integers(len(assigned))]
    scale = instance.dist.max()
    if scale <= 0:
        scale = 1.0
    q = instance.demand
    related = [
        (instance.dist[seed, u] / scale + abs(q[seed] - q[u]) / instance.capacity, u)
        for u in assigned
        if u != seed
    ]
    related.sort(key=lambda t: (t[0], t[1]))
    return [seed] + [u for _, u in related[: m - 1]]


@dataclass
class AlnsState:
    """Roulette-wheel weights over the destroy pool, refreshed per segment."""

    sigma: tuple[float, float, float] = (10.0, 5.0, 1.0)
    reaction: float = 0.8
    segment: int = 100
    weights: np.ndarray = field(default_factory=lambda: np.ones(3))
    scores: np.ndarray = field(default_factory=lambda: np.zeros(3))
    uses: np.ndarray = field(default_factory=lambda: np.zeros(3))
    iteration: int = 0

    def probabilities(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    def record(self, op_index: int, outcome: str) -> None:
        score = {
            engine.NEW_BEST: self.sigma[0],
            engine.ACCEPTED_BETTER: self.sigma[1],
            engine.ACCEPTED_WORSE: self.sigma[2],
        }.get(outcome, 0.0)
        self.scores[op_index] += score
        self.iteration += 1
        if self.iteration % self.segment == 0:
            used = self.uses > 0
            lam = self.reaction
            self.weights[used] = (
                lam * self.weights[used]
                + (1 - lam) * self.scores[used] / self.uses[used]
            )
            # Keep roulette selection possible for every operator.
            self.weights = np.maximum(self.weights, 1e-6)
            self.scores[:] = 0.0
            self.uses[:] = 0.0


class AlnsOperator:
    """Adaptive selection between random, worst, and Shaw removal."""

    name = "alns"
    destroyers = (random_destroy, worst_destroy, shaw_destroy)

    def __init__(self, m: int, state: AlnsState | None = None):
        self.m = m
        self.state = state or AlnsState()
        self._last = 0

    def propose(self, instance: Instance, solution: Solution, rng) -> list[int]:
        self._last = int(rng.choice(len(self.destroyers), p=self.state.probabilities()))
        self.state.uses[self._last] += 1
        m = min(self.m, sum(len(r) for r in solution.routes))
        removed = self.destroyers[self._last](instance, solution, m, rng)
        order = list(removed)
        rng.shuffle(order)
        return order

    def observe(self, outcome: str) -> None:
        self.state.record(self._last, outcome)


class SisrOperator:
    """String removal: contiguous segments near a seed customer, one per route.

    Simplified relative to the full published algorithm: no split strings,
    no blink insertion; repair order is demand-descending with random
    tie-break, cardinality targets an average of `m` removals.
    """

    name = "sisr"

    def __init__(self, m: int, k_routes: int = 3, l_max: int = 10):
        self.m = m
        self.k_routes = k_routes
        self.l_max = l_max

    def propose(self, instance: Instance, solution: Solution, rng) -> list[int]:
        assigned = _assigned(solution)
        seed = assigned[rng.integers(len(assigned))]
        dist = instance.dist

        # Rank routes by their closest node to the seed.
        ranked = []
        for route in solution.routes:
            ds = [dist[seed, u] for u in route]
            c = int(np.argmin(ds))
            ranked.append((ds[c], c, route))
        ranked.sort(key=lambda t: t[0])
        chosen = ranked[: min(self.k_routes, len(ranked))]

        removed: list[int] = []
        remaining = self.m
        for idx, (_, center, route) in enumerate(chosen):
            slots_left = len(chosen) - idx
            want = max(1, math.ceil(remaining / slots_left))
            length = min(want, self.l_max, len(route))
            lo = max(0, center - length + 1)
            hi = min(center, len(route) - length)
            start = int(rng.integers(lo, hi + 1))
            removed.extend(route[start : start + length])
            remaining -= length
            if remaining <= 0:
                break

        # Demand-descending reinsertion, ties broken randomly.
        tiebreak = rng.random(len(removed))
        order = sorted(
            range(len(removed)),
            key=lambda i: (-instance.demand[removed[i]], tiebreak[i]),
        )
        return [removed[i] for i in order]
