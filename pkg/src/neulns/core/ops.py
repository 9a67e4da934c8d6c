"""Route scheduling, feasibility, cost, and destroy/repair primitives."""

from __future__ import annotations

import numpy as np

from ..errors import IncompleteSolution, InfeasibleNode, InvalidDestroySet
from . import kernels
from .model import CostBreakdown, Instance, RouteSchedule, Solution, Violation


def _seq(route) -> np.ndarray:
    return np.asarray(route, dtype=np.int64)


def schedule_route(instance: Instance, route) -> RouteSchedule:
    """Full timing/load profile of a route; violations are computed, not hidden."""
    instance.check_route_ids(route)
    arrival, wait, bstart, depart, slack, cumload, cumdist, total_dist, load, ret = (
        kernels.route_profile(
            _seq(route), instance.dist, instance.tw_start, instance.tw_end,
            instance.service, instance.demand,
        )
    )
    return RouteSchedule(
        sequence=list(route),
        arrival=arrival,
        wait=wait,
        service_start=bstart,
        departure=depart,
        forward_slack=slack,
        cumulative_load=cumload,
        cumulative_distance=cumdist,
        cumulative_travel_time=arrival.copy(),
        route_load=float(load),
        total_distance=float(total_dist),
        return_time=float(ret),
    )


def evaluate(instance: Instance, solution: Solution) -> CostBreakdown:
    """Total distance + vehicle_cost per non-empty route."""
    if not solution.is_complete:
        raise IncompleteSolution(f"{len(solution.unassigned)} unassigned nodes")
    total = 0.0
    k = 0
    dist = instance.dist
    for route in solution.routes:
        if not route:
            continue
        k += 1
        prev = 0
        for u in route:
            total += dist[prev, u]
            prev = u
        total += dist[prev, 0]
    total = float(total)
    return CostBreakdown(total, k, total + instance.vehicle_cost * k)


def check_feasibility(instance: Instance, solution: Solution) -> list[Violation]:
    """Capacity, time-window, and coverage violations as data."""
    violations: list[Violation] = []
    seen: dict[int, int] = {}
    for ri, route in enumerate(solution.routes):
        sched = schedule_route(instance, route)
        if sched.route_load > instance.capacity:
            violations.append(
                Violation("Capacity", ri, -1, sched.route_load - instance.capacity)
            )
        for p, u in enumerate(route):
            late = sched.service_start[p] - instance.tw_end[u]
            if late > 0:
                violations.append(Violation("TimeWindow", ri, u, float(late)))
            if u in seen:
                violations.append(Violation("Duplicate", ri, u, 1.0))
            seen[u] = ri
    for u in solution.unassigned:
        if u in seen:
            violations.append(Violation("Duplicate", -1, u, 1.0))
    covered = set(seen) | solution.unassigned
    for u in instance.customers:
        if u not in covered:
            violations.append(Violation("Missing", -1, u, 1.0))
    return violations


def remove_nodes(solution: Solution, node_list) -> Solution:
    """Move the listed customers to `unassigned`; drops emptied routes.

    Returns a new Solution; relative order of remaining visits is kept.
    """
    nodes = list(node_list)
    targets = set(nodes)
    if len(targets) != len(nodes):
        raise InvalidDestroySet("duplicate nodes in destroy set")
    if 0 in targets:
        raise InvalidDestroySet("depot cannot be removed")
    assigned = set(solution.assigned_customers())
    unknown = targets - assigned
    if unknown:
        raise InvalidDestroySet(f"nodes not currently assigned: {sorted(unknown)}")

    routes = []
    for route in solution.routes:
        kept = [u for u in route if u not in targets]
        if kept:
            routes.append(kept)
    return Solution(routes, solution.unassigned | targets)


def single_node_feasible(instance: Instance, node: int) -> bool:
    """Whether `node` alone in a fresh route satisfies capacity and its window."""
    if instance.demand[node] > instance.capacity:
        return False
    arrival = instance.dist[0, node]
    return max(arrival, instance.tw_start[node]) <= instance.tw_end[node]


def least_cost_insert(instance: Instance, solution: Solution, node: int) -> Solution:
    """Insert `node` at the feasible (route, position) minimizing the cost increase.

    Opening a new route costs its depot legs plus `vehicle_cost`; ties keep
    the lowest route index, then the lowest position, with "new route" last.
    Mutates and returns `solution`.
    """
    if node not in solution.unassigned:
        raise InvalidDestroySet(f"node {node} is not unassigned")

    best_route = -1
    best_pos = -1
    best_delta = np.inf
    for ri, route in enumerate(solution.routes):
        pos, delta = kernels.best_position(
            _seq(route), node, instance.dist, instance.tw_start, instance.tw_end,
            instance.service, instance.demand, instance.capacity,
        )
        if pos >= 0 and delta < best_delta:
            best_route, best_pos, best_delta = ri, pos, delta

    if single_node_feasible(instance, node):
        new_delta = instance.dist[0, node] + instance.dist[node, 0] + instance.vehicle_cost
        if new_delta < best_delta:
            best_route = -2
            best_delta = new_delta
    if best_route == -1:
        raise InfeasibleNode(f"node {node} cannot be feasibly inserted anywhere")

    if best_route == -2:
        solution.routes.append([node])
    else:
        solution.routes[best_route].insert(best_pos, node)
    solution.unassigned.discard(node)
    return solution


def repair(instance: Instance, solution: Solution, ordered_list) -> Solution:
    """Sequential least-cost insertion of all unassigned nodes, in the given order."""
    if set(ordered_list) != solution.unassigned or len(ordered_list) != len(
        solution.unassigned
    ):
        raise InvalidDestroySet("repair order must be a permutation of the unassigned set")
    for node in ordered_list:
        least_cost_insert(instance, solution, node)
    return solution


def build_initial_solution(instance: Instance, rng: np.random.Generator) -> Solution:
    """Least-cost insertion of all customers in uniformly shuffled order."""
    order = rng.permutation(instance.n_customers) + 1
    solution = Solution([], set(int(u) for u in order))
    for node in order:
        least_cost_insert(instance, solution, int(node))
    return solution
