"""neulns: large-neighborhood-search CVRP/CVRPTW solver with learned and
handcrafted destroy/repair heuristics."""

from .core import KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
