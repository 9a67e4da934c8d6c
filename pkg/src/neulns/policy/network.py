"""Edge-aware graph-attention encoder, GRU pointer decoder, and critic."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
import torch
from torch import nn

from ..errors import InvalidM, IsolatedNode
from .features import feature_width

LEAKY_SLOPE = 0.01


@dataclass
class HyperParams:
    variant: str = "cvrptw"
    n_embed: int = 64
    n_edge_embed: int = 16
    n_decoder: int = 64
    n_critic: int = 64
    n_layers: int = 2

    @property
    def n_node_feat(self) -> int:
        return feature_width(self.variant)

    def to_dict(self) -> dict:
        return asdict(self)


class EgateLayer(nn.Module):
    """One attention layer with per-coordinate (element-wise) softmax weights.

    Attention logits are vectors: each embedding coordinate is normalized
    independently over the unmasked in-neighbors. The residual term carries
    the node's own state; the self-arc is excluded from the sum.
    """

    def __init__(self, n_embed: int, n_edge_embed: int):
        super().__init__()
        self.attn = nn.Linear(2 * n_embed + n_edge_embed, n_embed, bias=False)

    def forward(self, node: torch.Tensor, edge: torch.Tensor, exclude: torch.Tensor):
        n = node.shape[0]
        hi = node.unsqueeze(1).expand(n, n, -1)
        hj = node.unsqueeze(0).expand(n, n, -1)
        logits = nn.functional.leaky_relu(
            self.attn(torch.cat((hi, hj, edge), dim=-1)), LEAKY_SLOPE
        )
        logits = logits.masked_fill(exclude.unsqueeze(-1), float("-inf"))
        weights = torch.softmax(logits, dim=1)
        return node + torch.einsum("ijd,jd->id", weights, node)


class PolicyNetwork(nn.Module):
    """Encoder + pointer decoder (the policy) and the value head (the critic)."""

    def __init__(self, hp: HyperParams):
        super().__init__()
        self.hp = hp
        self.node_proj = nn.Linear(hp.n_node_feat, hp.n_embed, bias=False)
        self.edge_proj = nn.Linear(2, hp.n_edge_embed, bias=False)
        self.layers = nn.ModuleList(
            EgateLayer(hp.n_embed, hp.n_edge_embed) for _ in range(hp.n_layers)
        )
        self.gru = nn.GRUCell(hp.n_embed, hp.n_decoder)
        self.ptr_node = nn.Linear(hp.n_embed, hp.n_decoder, bias=False)
        self.ptr_hidden = nn.Linear(hp.n_decoder, hp.n_decoder, bias=False)
        self.ptr_score = nn.Parameter(torch.zeros(hp.n_decoder))
        self.critic_hidden = nn.Linear(hp.n_embed, hp.n_critic)
        self.critic_out = nn.Linear(hp.n_critic, 1)

    # Parameters whose gradients drive the actor vs the critic objective.
    def actor_parameters(self):
        for name, p in self.named_parameters():
            if not name.startswith("critic_"):
                yield p

    def critic_parameters(self):
        yield from self.critic_hidden.parameters()
        yield from self.critic_out.parameters()

    def init_parameters(self, seed: int) -> None:
        """uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per tensor, numpy-seeded."""
        rng = np.random.default_rng(seed)
        for p in self.parameters():
            fan = p.shape[-1] if p.dim() >= 2 else p.numel()
            bound = 1.0 / np.sqrt(fan)
            vals = rng.uniform(-bound, bound, size=tuple(p.shape))
            with torch.no_grad():
                p.copy_(torch.as_tensor(vals, dtype=p.dtype))

    def encode(self, node_feat, edge_feat, mask=None):
        """Returns (per-node embeddings (N, n_embed), mean-pooled graph state)."""
        dtype = self.ptr_score.dtype
        node_feat = torch.as_tensor(node_feat, dtype=dtype)
        edge_feat = torch.as_tensor(edge_feat, dtype=dtype)
        n = node_feat.shape[0]
        exclude = torch.eye(n, dtype=torch.bool)
        if mask is not None:
            exclude = exclude | torch.as_tensor(mask, dtype=torch.bool)
            if bool((exclude.all(dim=1)).any()):
                raise IsolatedNode("some node has no unmasked in-neighbor")

        node = self.node_proj(node_feat)
        edge = self.edge_proj(edge_feat)
        for layer in self.layers:
            node = layer(node, edge, exclude)
        return node, node.mean(dim=0)

    def decode(
        self,
        node_emb: torch.Tensor,
        pooled: torch.Tensor,
        m: int,
        mode: str = "sample",
        rng: np.random.Generator | None = None,
        forced: list[int] | None = None,
    ):
        """Sequentially select m distinct customers; returns (ids, per-step log-probs).

        First GRU input is the pooled graph state, later inputs are the
        embedding of the previously chosen node. Greedy mode breaks score
        ties toward the lowest node id.
        """
        n = node_emb.shape[0]
        if m > n - 1:
            raise InvalidM(f"cannot remove {m} of {n - 1} customers")
        banned = torch.zeros(n, dtype=torch.bool)
        banned[0] = True

        proj_nodes = self.ptr_node(node_emb)
        hidden = torch.zeros(1, self.hp.n_decoder, dtype=pooled.dtype)
        x = pooled.unsqueeze(0)
        ids: list[int] = []
        logps: list[torch.Tensor] = []
        for _ in range(m):
            hidden = self.gru(x, hidden)
            scores = torch.tanh(proj_nodes + self.ptr_hidden(hidden[0])) @ self.ptr_score
            scores = scores.masked_fill(banned, float("-inf"))
            logp = torch.log_softmax(scores, dim=0)
            if forced is not None:
                pick = forced[len(ids)]
            elif mode == "greedy":
                pick = int(torch.argmax(scores).item())
            elif mode == "sample":
                probs = torch.exp(logp).detach().cpu().numpy().astype(np.float64)
                probs = np.where(np.isfinite(probs), probs, 0.0)
                probs /= probs.sum()
                pick = int(rng.choice(n, p=probs))
            else:
                raise ValueError(f"unknown decode mode {mode!r}")
            ids.append(pick)
            logps.append(logp[pick])
            # out-of-place update: masked_fill saves the mask for backward
            banned = banned.clone()
            banned[pick] = True
            x = node_emb[pick].unsqueeze(0)
        return ids, torch.stack(logps)

    def critic_value(self, pooled: torch.Tensor) -> torch.Tensor:
        return self.critic_out(torch.relu(self.critic_hidden(pooled))).squeeze(-1)


def build_model(hp: HyperParams, seed: int = 0) -> PolicyNetwork:
    model = PolicyNetwork(hp)
    model.init_parameters(seed)
    return model
