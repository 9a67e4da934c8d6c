"""Primitive node/edge features and the sparse attention mask."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import schedule_route
from ..core.model import Instance, Solution
from ..errors import IncompleteSolution
from ..instance_io import NO_TW_HORIZON

CVRPTW_NODE_FEATS = 8
CVRP_NODE_FEATS = 5


@dataclass
class PrimitiveEmbeddings:
    node: np.ndarray  # (N, 8) cvrptw / (N, 5) cvrp
    edge: np.ndarray  # (N, N, 2): normalized distance, in-solution flag
    mask: np.ndarray | None  # (N, N) bool, True = arc j->i excluded for node i


def feature_width(variant: str) -> int:
    return CVRPTW_NODE_FEATS if variant == "cvrptw" else CVRP_NODE_FEATS


def _scales(instance: Instance) -> tuple[float, float]:
    dist_scale = float(instance.dist.max())
    if dist_scale <= 0:
        dist_scale = 1.0
    depot_end = float(instance.tw_end[0])
    time_scale = depot_end if depot_end < NO_TW_HORIZON / 2 else dist_scale
    return dist_scale, time_scale


def primitive_embed(
    instance: Instance, solution: Solution, mask: np.ndarray | None = None
) -> PrimitiveEmbeddings:
    """Solution-conditioned node/edge features, all normalized to O(1).

    CVRPTW node features: window start/end, demand, route total demand,
    cumulative demand, cumulative distance, elapsed time, forward slack.
    CVRP drops the window and slack columns. The depot row keeps its own
    window and zeros for the route-cumulative columns.
    """
    if not solution.is_complete:
        raise IncompleteSolution("features require a complete solution")

    n = instance.n_nodes
    tw = instance.variant == "cvrptw"
    dist_scale, time_scale = _scales(instance)
    q_scale = instance.capacity

    node = np.zeros((n, feature_width(instance.variant)))
    edge = np.empty((n, n, 2))
    edge[:, :, 0] = instance.dist / dist_scale
    edge[:, :, 1] = 0.0

    if tw:
        node[0, 0] = instance.tw_start[0] / time_scale
        node[0, 1] = instance.tw_end[0] / time_scale

    for route in solution.routes:
        sched = schedule_route(instance, route)
        prev = 0
        for p, u in enumerate(route):
            if tw:
                node[u] = (
                    instance.tw_start[u] / time_scale,
                    instance.tw_end[u] / time_scale,
                    instance.demand[u] / q_scale,
                    sched.route_load / q_scale,
                    sched.cumulative_load[p] / q_scale,
                    sched.cumulative_distance[p] / dist_scale,
                    sched.cumulative_travel_time[p] / time_scale,
                    sched.forward_slack[p] / time_scale,
                )
            else:
                node[u] = (
                    instance.demand[u] / q_scale,
                    sched.route_load / q_scale,
                    sched.cumulative_load[p] / q_scale,
                    sched.cumulative_distance[p] / dist_scale,
                    sched.cumulative_travel_time[p] / time_scale,
                )
            edge[prev, u, 1] = 1.0
            prev = u
        edge[prev, 0, 1] = 1.0

    return PrimitiveEmbeddings(node, edge, mask)


def sparse_mask(
    instance: Instance, solution: Solution, keep_frac: float = 0.10
) -> np.ndarray:
    """Large-instance mask: for each node keep only the nearest `keep_frac`
    of nodes, its current-route neighbors, and the depot. True = excluded."""
    n = instance.n_nodes
    keep = max(1, int(np.ceil(keep_frac * n)))
    mask = np.ones((n, n), dtype=bool)

    order = np.argsort(instance.dist, axis=1, kind="stable")
    for i in range(n):
        nearest = [j for j in order[i] if j != i][:keep]
        mask[i, nearest] = False
    mask[:, 0] = False  # depot always visible

    for route in solution.routes:
        prev = 0
        for u in route:
            mask[u, prev] = False
            mask[prev, u] = False
            prev = u
        mask[0, prev] = False
        mask[prev, 0] = False

    np.fill_diagonal(mask, True)
    return mask
