"""Instance and solution data model for CVRP/CVRPTW."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidRoute


@dataclass(frozen=True)
class Node:
    """A single node; id 0 is the depot."""

    id: int
    x: float
    y: float
    demand: float
    tw_start: float
    tw_end: float
    service_time: float


class Instance:
    """A routing instance over an explicit (possibly asymmetric) distance matrix.

    Node arrays are indexed by node id; index 0 is the depot. Travel time
    equals travel distance (unit speed).
    """

    def __init__(
        self,
        name: str,
        capacity: float,
        vehicle_cost: float,
        demand: np.ndarray,
        tw_start: np.ndarray,
        tw_end: np.ndarray,
        service: np.ndarray,
        dist: np.ndarray,
        x: np.ndarray | None = None,
        y: np.ndarray | None = None,
        variant: str = "cvrptw",
    ):
        n = len(demand)
        self.name = name
        self.capacity = float(capacity)
        self.vehicle_cost = float(vehicle_cost)
        self.demand = np.ascontiguousarray(demand, dtype=np.float64)
        self.tw_start = np.ascontiguousarray(tw_start, dtype=np.float64)
        self.tw_end = np.ascontiguousarray(tw_end, dtype=np.float64)
        self.service = np.ascontiguousarray(service, dtype=np.float64)
        self.dist = np.ascontiguousarray(dist, dtype=np.float64)
        self.x = None if x is None else np.asarray(x, dtype=np.float64)
        self.y = None if y is None else np.asarray(y, dtype=np.float64)
        self.variant = variant

        if self.dist.shape != (n, n):
            raise ValueError(f"distance matrix shape {self.dist.shape} != ({n}, {n})")
        if np.any(self.dist < 0) or np.any(np.diag(self.dist) != 0):
            raise ValueError("distances must be >= 0 with zero diagonal")
        if self.demand[0] != 0:
            raise ValueError("depot demand must be 0")
        if np.any(self.demand < 0):
            raise ValueError("demands must be >= 0")
        if np.any(self.tw_start > self.tw_end):
            raise ValueError("tw_start must be <= tw_end")
        if np.any(self.service < 0):
            raise ValueError("service times must be >= 0")

    @property
    def n_nodes(self) -> int:
        return len(self.demand)

    @property
    def n_customers(self) -> int:
        return self.n_nodes - 1

    @property
    def customers(self) -> range:
        return range(1, self.n_nodes)

    def node(self, i: int) -> Node:
        xi = float(self.x[i]) if self.x is not None else 0.0
        yi = float(self.y[i]) if self.y is not None else 0.0
        return Node(
            i, xi, yi,
            float(self.demand[i]),
            float(self.tw_start[i]), float(self.tw_end[i]),
            float(self.service[i]),
        )

    def check_route_ids(self, route) -> None:
        for i in route:
            if not 1 <= i < self.n_nodes:
                raise InvalidRoute(f"node id {i} not a customer of this instance")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.capacity == other.capacity
            and self.vehicle_cost == other.vehicle_cost
            and self.variant == other.variant
            and np.array_equal(self.demand, other.demand)
            and np.array_equal(self.tw_start, other.tw_start)
            and np.array_equal(self.tw_end, other.tw_end)
            and np.array_equal(self.service, other.service)
            and np.array_equal(self.dist, other.dist)
            and _opt_array_equal(self.x, other.x)
            and _opt_array_equal(self.y, other.y)
        )


def _opt_array_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


@dataclass
class Solution:
    """A set of routes plus (mid-operator only) unassigned customers.

    Each route is an ordered list of customer ids; the depot is implicit
    at both ends.
    """

    routes: list[list[int]] = field(default_factory=list)
    unassigned: set[int] = field(default_factory=set)

    def copy(self) -> "Solution":
        return Solution([r[:] for r in self.routes], set(self.unassigned))

    @property
    def is_complete(self) -> bool:
        return not self.unassigned

    def assigned_customers(self):
        for route in self.routes:
            yield from route

    def route_of(self, node: int) -> int:
        """Index of the route containing `node`, or -1."""
        for ri, route in enumerate(self.routes):
            if node in route:
                return ri
        return -1


@dataclass(frozen=True)
class CostBreakdown:
    total_distance: float
    vehicle_count: int
    total_cost: float


@dataclass
class RouteSchedule:
    """Timing and load profile of one route; positions follow the sequence."""

    sequence: list[int]
    arrival: np.ndarray
    wait: np.ndarray
    service_start: np.ndarray
    departure: np.ndarray
    forward_slack: np.ndarray
    cumulative_load: np.ndarray
    cumulative_distance: np.ndarray
    cumulative_travel_time: np.ndarray
    route_load: float
    total_distance: float
    return_time: float


@dataclass(frozen=True)
class Violation:
    kind: str  # Capacity | TimeWindow | Duplicate | Missing
    route_index: int
    node: int
    magnitude: float
