"""Core VRP data model and route operations.

The scheduling/insertion kernels have a compiled implementation and a
pure-Python fallback. Selection happens once at import: the compiled
backend is preferred, `NEULNS_BACKEND=python|c` overrides.
"""

import os

from . import _pykernels

_choice = os.environ.get("NEULNS_BACKEND", "").lower()
if _choice == "python":
    kernels = _pykernels
else:
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        if _choice == "c":
            raise ImportError(
                "NEULNS_BACKEND=c requested but the compiled kernels are not built"
            )
        kernels = _pykernels

KERNEL_BACKEND = kernels.BACKEND

from .model import (  # noqa: E402
    CostBreakdown,
    Instance,
    Node,
    RouteSchedule,
    Solution,
    Violation,
)
from .ops import (  # noqa: E402
    build_initial_solution,
    check_feasibility,
    evaluate,
    least_cost_insert,
    remove_nodes,
    repair,
    schedule_route,
    single_node_feasible,
)

__all__ = [
    "KERNEL_BACKEND",
    "kernels",
    "Instance",
    "Node",
    "Solution",
    "RouteSchedule",
    "CostBreakdown",
    "Violation",
    "schedule_route",
    "evaluate",
    "check_feasibility",
    "remove_nodes",
    "least_cost_insert",
    "repair",
    "build_initial_solution",
    "single_node_feasible",
]
