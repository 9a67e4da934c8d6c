"""The learned destroy/repair operator wrapping the policy network."""

from __future__ import annotations

import numpy as np
import torch

from ..core.model import Instance, Solution
from ..errors import CheckpointMismatch
from .features import primitive_embed, sparse_mask
from .network import PolicyNetwork

# Instances at or above this node count get the sparse top-nearest mask.
SPARSE_MASK_MIN_NODES = 200


class NeuralOperator:
    """Policy-driven proposal: remove the decoded nodes, reinsert in decode order."""

    name = "neural"

    def __init__(
        self,
        model: PolicyNetwork,
        m: int,
        mode: str = "greedy",
        mask_min_nodes: int = SPARSE_MASK_MIN_NODES,
        mask_keep_frac: float = 0.10,
    ):
        self.model = model
        self.m = m
        self.mode = mode
        self.mask_min_nodes = mask_min_nodes
        self.mask_keep_frac = mask_keep_frac

    def _check_variant(self, instance: Instance) -> None:
        if instance.variant != self.model.hp.variant:
            raise CheckpointMismatch(
                f"model is for {self.model.hp.variant}, instance is {instance.variant}"
            )

    def propose(self, instance: Instance, solution: Solution, rng) -> list[int]:
        ids, _, _ = self.propose_with_info(instance, solution, rng)
        return ids

    def propose_with_info(self, instance: Instance, solution: Solution, rng):
        """Returns (removal list, per-step log-probs, pooled graph state)."""
        self._check_variant(instance)
        mask = None
        if instance.n_nodes >= self.mask_min_nodes:
            mask = sparse_mask(instance, solution, self.mask_keep_frac)
        feats = primitive_embed(instance, solution, mask)
        m = min(self.m, instance.n_customers)
        with torch.no_grad():
            node_emb, pooled = self.model.encode(feats.node, feats.edge, feats.mask)
            ids, logps = self.model.decode(node_emb, pooled, m, self.mode, rng)
        return ids, logps.numpy(), pooled.numpy()
