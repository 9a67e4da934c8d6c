import numpy as np
import pytest

from neulns.core.model import Instance
from neulns.instance_io import NO_TW_HORIZON, euclidean_matrix


def make_instance(
    coords,
    demands=None,
    windows=None,
    service=0.0,
    capacity=100.0,
    vehicle_cost=0.0,
    dist=None,
    variant=None,
):
    """Hand-built instance; coords[0] is the depot."""
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    x, y = coords[:, 0], coords[:, 1]
    if demands is None:
        demands = [0.0] + [1.0] * (n - 1)
    if windows is None:
        windows = [(0.0, NO_TW_HORIZON)] * n
        if variant is None:
            variant = "cvrp"
    tw = np.asarray(windows, dtype=float)
    srv = np.full(n, float(service))
    srv[0] = 0.0
    return Instance(
        name="fixture",
        capacity=capacity,
        vehicle_cost=vehicle_cost,
        demand=np.asarray(demands, dtype=float),
        tw_start=tw[:, 0],
        tw_end=tw[:, 1],
        service=srv,
        dist=euclidean_matrix(x, y) if dist is None else np.asarray(dist, dtype=float),
        x=x,
        y=y,
        variant=variant or "cvrptw",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
