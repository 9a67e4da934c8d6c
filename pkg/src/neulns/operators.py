"""Operator registry: build destroy/repair operators from a picklable spec.

Specs are plain dicts so batch workers can reconstruct operators in
subprocesses; the neural operator is loaded lazily from its checkpoint.
"""

from __future__ import annotations

from .core.model import Instance
from .engine import default_removal_count
from .heuristics import AlnsOperator, RandomOperator, SisrOperator

OPERATOR_NAMES = ("random", "alns", "sisr", "neural")


def make_operator(spec: dict, instance: Instance):
    kind = spec["op"]
    m = spec.get("m") or default_removal_count(instance.n_customers)
    if kind == "random":
        return RandomOperator(m)
    if kind == "alns":
        return AlnsOperator(m)
    if kind == "sisr":
        return SisrOperator(
            m,
            k_routes=spec.get("k_routes", 3),
            l_max=spec.get("l_max", 10),
        )
    if kind == "neural":
        from .policy import NeuralOperator, load_model

        model, _, _ = load_model(spec["ckpt"])
        return NeuralOperator(model, m, mode=spec.get("mode", "greedy"))
    raise ValueError(f"unknown operator {kind!r}; choose from {OPERATOR_NAMES}")
