"""Random instance generation and JSON file formats."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core.model import Instance, Solution
from .errors import ParseError, SchemaError

# Stand-in horizon for variants without binding time windows.
NO_TW_HORIZON = 1e9


@dataclass
class GeneratorConfig:
    n_customers: int
    variant: str = "cvrptw"  # "cvrp" | "cvrptw"
    map_size: float = 100.0
    demand_range: tuple[int, int] = (1, 9)
    capacity: float = 100.0
    tw_start_range: tuple[float, float] = (0.0, 290.0)
    tw_due_range: tuple[float, float] = (10.0, 300.0)
    service_time: float = 10.0
    depot_window: tuple[float, float] = (0.0, 300.0)
    vehicle_cost: float = 0.0
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.n_customers < 1:
            raise ValueError("n_customers must be >= 1")
        if self.variant not in ("cvrp", "cvrptw"):
            raise ValueError(f"unknown variant {self.variant!r}")


def euclidean_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    return np.hypot(dx, dy)


def generate(config: GeneratorConfig) -> Instance:
    """Sample an instance; deterministic per seed.

    CVRPTW due times are drawn on [start + min_width, 300] so every window
    is valid and at least one service long; customers whose window cannot
    be reached from the depot are resampled.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_customers + 1
    x = np.empty(n)
    y = np.empty(n)
    demand = np.zeros(n)
    tw_start = np.zeros(n)
    tw_end = np.full(n, NO_TW_HORIZON)
    service = np.zeros(n)

    x[0] = rng.uniform(0, config.map_size)
    y[0] = rng.uniform(0, config.map_size)
    tw = config.variant == "cvrptw"
    if tw:
        tw_start[0], tw_end[0] = config.depot_window

    qlo, qhi = config.demand_range
    slo, shi = config.tw_start_range
    dlo, dhi = config.tw_due_range
    min_width = dlo - slo
    for i in range(1, n):
        while True:
            xi = rng.uniform(0, config.map_size)
            yi = rng.uniform(0, config.map_size)
            qi = float(rng.integers(qlo, qhi + 1))
            if not tw:
                x[i], y[i], demand[i] = xi, yi, qi
                break
            si = rng.uniform(slo, shi)
            ei = rng.uniform(si + min_width, dhi)
            if np.hypot(xi - x[0], yi - y[0]) <= ei:
                x[i], y[i], demand[i] = xi, yi, qi
                tw_start[i], tw_end[i] = si, ei
                service[i] = config.service_time
                break

    name = config.name or f"{config.variant}-{config.n_customers}-seed{config.seed}"
    return Instance(
        name=name,
        capacity=config.capacity,
        vehicle_cost=config.vehicle_cost,
        demand=demand,
        tw_start=tw_start,
        tw_end=tw_end,
        service=service,
        dist=euclidean_matrix(x, y),
        x=x,
        y=y,
        variant=config.variant,
    )


_INSTANCE_KEYS = {"name", "capacity", "vehicle_cost", "variant", "nodes", "matrix"}
_NODE_KEYS = {"id", "x", "y", "demand", "tw_start", "tw_end", "service"}


def save_instance(instance: Instance, path) -> None:
    nodes = []
    for i in range(instance.n_nodes):
        node = instance.node(i)
        nodes.append(
            {
                "id": node.id,
                "x": node.x,
                "y": node.y,
                "demand": node.demand,
                "tw_start": node.tw_start,
                "tw_end": node.tw_end,
                "service": node.service_time,
            }
        )
    if instance.x is not None and np.array_equal(
        instance.dist, euclidean_matrix(instance.x, instance.y)
    ):
        matrix = "euclidean"
    else:
        matrix = [float(v) for v in instance.dist.ravel()]
    doc = {
        "name": instance.name,
        "capacity": instance.capacity,
        "vehicle_cost": instance.vehicle_cost,
        "variant": instance.variant,
        "nodes": nodes,
        "matrix": matrix,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_instance(path) -> Instance:
    doc = _load_json(path)
    missing = _INSTANCE_KEYS - set(doc)
    if missing:
        raise SchemaError(f"{path}: missing instance fields {sorted(missing)}")
    nodes = doc["nodes"]
    if not isinstance(nodes, list) or not nodes:
        raise SchemaError(f"{path}: 'nodes' must be a non-empty list")
    n = len(nodes)
    x = np.empty(n)
    y = np.empty(n)
    demand = np.empty(n)
    tw_start = np.empty(n)
    tw_end = np.empty(n)
    service = np.empty(n)
    for idx, nd in enumerate(nodes):
        miss = _NODE_KEYS - set(nd)
        if miss:
            raise SchemaError(f"{path}: node {idx} missing fields {sorted(miss)}")
        if nd["id"] != idx:
            raise SchemaError(f"{path}: node ids must be 0..N in order, got {nd['id']} at {idx}")
        x[idx], y[idx] = nd["x"], nd["y"]
        demand[idx] = nd["demand"]
        tw_start[idx], tw_end[idx] = nd["tw_start"], nd["tw_end"]
        service[idx] = nd["service"]

    matrix = doc["matrix"]
    if matrix == "euclidean":
        dist = euclidean_matrix(x, y)
    else:
        if len(matrix) != n * n:
            raise SchemaError(f"{path}: matrix has {len(matrix)} entries, expected {n * n}")
        dist = np.asarray(matrix, dtype=np.float64).reshape(n, n)
    try:
        return Instance(
            name=doc["name"],
            capacity=doc["capacity"],
            vehicle_cost=doc["vehicle_cost"],
            demand=demand,
            tw_start=tw_start,
            tw_end=tw_end,
            service=service,
            dist=dist,
            x=x,
            y=y,
            variant=doc["variant"],
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def save_solution(solution: Solution, path, instance_name: str = "", cost=None) -> None:
    doc = {
        "instance_name": instance_name,
        "routes": [list(map(int, r)) for r in solution.routes],
    }
    if cost is not None:
        doc["total_distance"] = cost.total_distance
        doc["vehicle_count"] = cost.vehicle_count
        doc["total_cost"] = cost.total_cost
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_solution(path) -> Solution:
    doc = _load_json(path)
    if "routes" not in doc:
        raise SchemaError(f"{path}: missing 'routes' field")
    routes = doc["routes"]
    if not isinstance(routes, list) or any(not isinstance(r, list) for r in routes):
        raise SchemaError(f"{path}: 'routes' must be a list of lists")
    return Solution([list(map(int, r)) for r in routes], set())


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top-level value must be an object")
    return doc
