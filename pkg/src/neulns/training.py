"""Actor-critic training: rollout collection, k-step TD advantages, PPO updates."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch

from .core import build_initial_solution, evaluate, remove_nodes, repair
from .core.model import CostBreakdown, Instance
from .engine import SAState, SearchConfig, default_removal_count, run_search, sa_accept
from .errors import TrainingDiverged
from .instance_io import GeneratorConfig, generate
from .policy import (
    HyperParams,
    NeuralOperator,
    PolicyNetwork,
    build_model,
    load_model,
    model_tensors,
    primitive_embed,
    save_checkpoint,
)

METRICS_HEADER = ("epoch", "mean_reward", "actor_loss", "critic_loss", "val_cost")


@dataclass
class TrainConfig:
    variant: str = "cvrp"
    n_customers: int = 100
    epochs: int = 1000
    instances_per_epoch: int = 128
    batch_size: int = 64
    rollout_steps: int = 10  # m
    n_rollout: int = 20
    gamma: float = 0.99
    clip_eps: float = 0.2
    lr: float = 3e-4
    critic_lr_scale: float = 1.0
    seed: int = 0
    removal_count: int | None = None
    n_layers: int = 2
    n_embed: int = 64
    n_edge_embed: int = 16
    n_decoder: int = 64
    n_critic: int = 64
    advantage_norm: bool = True
    val_instances: int = 8
    val_iterations: int = 50

    def __post_init__(self):
        if not 0 < self.clip_eps < 1:
            raise ValueError("clip_eps must be in (0, 1)")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        for name in ("epochs", "instances_per_epoch", "batch_size", "rollout_steps", "n_rollout"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def hyperparams(self) -> HyperParams:
        return HyperParams(
            variant=self.variant,
            n_embed=self.n_embed,
            n_edge_embed=self.n_edge_embed,
            n_decoder=self.n_decoder,
            n_critic=self.n_critic,
            n_layers=self.n_layers,
        )

    def m_removals(self) -> int:
        return self.removal_count or default_removal_count(self.n_customers)


def reward(prev: CostBreakdown, cur: CostBreakdown) -> float:
    """Cost reduction; improvement is positive."""
    return prev.total_cost - cur.total_cost


def k_step_td(rewards, v_end: float, v_start: float, gamma: float) -> float:
    """Discounted k-step reward sum plus bootstrapped end value, minus start value."""
    acc = 0.0
    g = 1.0
    for r in rewards:
        acc += g * r
        g *= gamma
    return acc + g * v_end - v_start


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


@dataclass
class TrainingSample:
    node_feat: np.ndarray
    edge_feat: np.ndarray
    action: list[int]
    old_logp: float
    advantage: float
    value_target: float
    pooled: np.ndarray  # Enc of the anchor state, under the collecting snapshot


def collect_rollouts(
    instances: list[Instance],
    model: PolicyNetwork,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[list[TrainingSample], float]:
    """Per instance: N_rollout independent m-step trajectories, sampling-mode
    decode, SA acceptance active. Each trajectory yields m samples with
    k-step TD advantages (k = 1..m) anchored at the trajectory start."""
    m = cfg.rollout_steps
    op = NeuralOperator(model, cfg.m_removals(), mode="sample")
    samples: list[TrainingSample] = []
    reward_sum = 0.0
    reward_n = 0

    for instance in instances:
        init_sol = build_initial_solution(instance, rng)
        init_cost = evaluate(instance, init_sol)
        t0 = max(0.01 * init_cost.total_distance, 1e-9)
        alpha = 0.1 ** (1.0 / m)

        for _ in range(cfg.n_rollout):
            sol = init_sol.copy()
            cost = init_cost
            pooled_states: list[np.ndarray] = []
            rewards: list[float] = []
            anchor_feats = None
            anchor_action: list[int] = []
            anchor_logp = 0.0

            for step in range(1, m + 1):
                if step == 1:
                    anchor_feats = primitive_embed(instance, sol)
                ids, logps, pooled = op.propose_with_info(instance, sol, rng)
                if step == 1:
                    anchor_action = ids
                    anchor_logp = float(logps.sum())
                pooled_states.append(pooled)

                candidate = remove_nodes(sol, ids)
                repair(instance, candidate, ids)
                cand_cost = evaluate(instance, candidate)
                rewards.append(reward(cost, cand_cost))
                if sa_accept(cost, cand_cost, SAState(t0 * alpha**step, rng)):
                    sol = candidate
                    cost = cand_cost

            final_feats = primitive_embed(instance, sol)
            with torch.no_grad():
                _, final_pooled = model.encode(final_feats.node, final_feats.edge)
                pooled_states.append(final_pooled.numpy())
                values = model.critic_value(
                    torch.as_tensor(np.stack(pooled_states), dtype=torch.float32)
                ).numpy()

            v0 = float(values[0])
            for k in range(1, m + 1):
                delta = k_step_td(rewards[:k], float(values[k]), v0, cfg.gamma)
                samples.append(
                    TrainingSample(
                        node_feat=anchor_feats.node,
                        edge_feat=anchor_feats.edge,
                        action=anchor_action,
                        old_logp=anchor_logp,
                        advantage=delta,
                        value_target=delta + v0,
                        pooled=pooled_states[0],
                    )
                )
            reward_sum += sum(rewards)
            reward_n += len(rewards)

    return samples, reward_sum / max(reward_n, 1)


class Adam:
    """Minimal Adam with two parameter groups and checkpointable state."""

    def __init__(self, groups: list[tuple[list[torch.Tensor], float]],
                 betas=(0.9, 0.999), eps=1e-8):
        self.groups = [(list(params), lr) for params, lr in groups]
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = [torch.zeros_like(p) for params, _ in self.groups for p in params]
        self.v = [torch.zeros_like(p) for params, _ in self.groups for p in params]

    def _flat(self):
        for params, lr in self.groups:
            for p in params:
                yield p, lr

    def zero_grad(self):
        for p, _ in self._flat():
            if p.grad is not None:
                p.grad.detach_()
                p.grad.zero_()

    @torch.no_grad()
    def step(self):
        self.step_count += 1
        bc1 = 1 - self.beta1**self.step_count
        bc2 = 1 - self.beta2**self.step_count
        for i, (p, lr) in enumerate(self._flat()):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i].mul_(self.beta1).add_(g, alpha=1 - self.beta1)
            self.v[i].mul_(self.beta2).addcmul_(g, g, value=1 - self.beta2)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.addcdiv_(m_hat, v_hat.sqrt().add_(self.eps), value=-lr)

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for i, t in enumerate(self.m):
            out[f"opt.m.{i}"] = t.numpy().astype("<f4")
        for i, t in enumerate(self.v):
            out[f"opt.v.{i}"] = t.numpy().astype("<f4")
        return out

    def load_state(self, tensors: dict[str, np.ndarray], step_count: int):
        for i in range(len(self.m)):
            self.m[i] = torch.from_numpy(tensors[f"opt.m.{i}"].copy()).to(torch.float32)
            self.v[i] = torch.from_numpy(tensors[f"opt.v.{i}"].copy()).to(torch.float32)
        self.step_count = step_count


def ppo_update(
    samples: list[TrainingSample],
    model: PolicyNetwork,
    opt: Adam,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """One pass over the samples in shuffled minibatches.

    Actor: clipped surrogate on the log-prob ratio, re-encoding the stored
    state under current parameters. Critic: squared-error regression of the
    stored pooled state toward delta + v_old, which moves phi along
    delta * grad(v) as in the semi-gradient TD update.
    """
    order = rng.permutation(len(samples))
    advantages = np.array([s.advantage for s in samples])
    if cfg.advantage_norm and len(samples) > 1:
        std = advantages.std()
        advantages = (advantages - advantages.mean()) / (std if std > 0 else 1.0)

    actor_losses = []
    critic_losses = []
    for lo in range(0, len(order), cfg.batch_size):
        batch = order[lo : lo + cfg.batch_size]
        objs = []
        for idx in batch:
            s = samples[idx]
            node_emb, pooled = model.encode(s.node_feat, s.edge_feat)
            _, logps = model.decode(node_emb, pooled, len(s.action), forced=s.action)
            ratio = torch.exp(logps.sum() - s.old_logp)
            adv = float(advantages[idx])
            clipped = torch.clamp(ratio, 1 - cfg.clip_eps, 1 + cfg.clip_eps)
            objs.append(torch.minimum(ratio * adv, clipped * adv))
        actor_loss = -torch.stack(objs).mean()

        pooled_in = torch.as_tensor(
            np.stack([samples[i].pooled for i in batch]), dtype=torch.float32
        )
        targets = torch.as_tensor(
            np.array([samples[i].value_target for i in batch]), dtype=torch.float32
        )
        critic_loss = ((model.critic_value(pooled_in) - targets) ** 2).mean()

        total = actor_loss + critic_loss
        if not torch.isfinite(total):
            raise TrainingDiverged(
                f"non-finite loss (actor={actor_loss.item()}, critic={critic_loss.item()})"
            )
        opt.zero_grad()
        total.backward()
        opt.step()
        actor_losses.append(float(actor_loss.detach()))
        critic_losses.append(float(critic_loss.detach()))

    return float(np.mean(actor_losses)), float(np.mean(critic_losses))


def _validation_cost(model: PolicyNetwork, instances, cfg: TrainConfig) -> float:
    costs = []
    search = SearchConfig(iterations=cfg.val_iterations)
    for i, instance in enumerate(instances):
        op = NeuralOperator(model, cfg.m_removals(), mode="greedy")
        rng = np.random.default_rng(derive_seed(cfg.seed, 3, i))
        _, best_cost, _ = run_search(instance, op, search, rng)
        costs.append(best_cost.total_cost)
    return float(np.mean(costs))


def _make_optimizer(model: PolicyNetwork, cfg: TrainConfig) -> Adam:
    return Adam(
        [
            (list(model.actor_parameters()), cfg.lr),
            (list(model.critic_parameters()), cfg.lr * cfg.critic_lr_scale),
        ]
    )


def train(cfg: TrainConfig, out_dir, resume: str | None = None) -> Path:
    """Alternate rollout collection and PPO updates; checkpoint every epoch.

    Emits `metrics.csv` and `ckpt_{epoch}.bin` (parameters + optimizer
    state) under out_dir. Returns the path of the last checkpoint.
    """
    threads = os.environ.get("NEULNS_THREADS")
    if threads:
        torch.set_num_threads(max(1, int(threads)))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    start_epoch = 0
    if resume:
        model, meta, extra = load_model(resume)
        if meta["hyperparams"] != cfg.hyperparams().to_dict():
            from .errors import CheckpointMismatch

            raise CheckpointMismatch("resume checkpoint does not match the config")
        opt = _make_optimizer(model, cfg)
        opt.load_state(extra, meta["opt_step"])
        start_epoch = meta["step"]
    else:
        model = build_model(cfg.hyperparams(), seed=cfg.seed)
        opt = _make_optimizer(model, cfg)

    val_instances = [
        generate(
            GeneratorConfig(
                n_customers=cfg.n_customers,
                variant=cfg.variant,
                seed=derive_seed(cfg.seed, 4, i),
            )
        )
        for i in range(cfg.val_instances)
    ]

    metrics_path = out_dir / "metrics.csv"
    write_header = start_epoch == 0 or not metrics_path.exists()
    last_ckpt = Path(resume) if resume else None
    with open(metrics_path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if write_header:
            writer.writerow(METRICS_HEADER)
        for epoch in range(start_epoch, cfg.epochs):
            rng = np.random.default_rng(
                np.random.SeedSequence([cfg.seed, 1, epoch])
            )
            instances = [
                generate(
                    GeneratorConfig(
                        n_customers=cfg.n_customers,
                        variant=cfg.variant,
                        seed=derive_seed(cfg.seed, 2, epoch, i),
                    )
                )
                for i in range(cfg.instances_per_epoch)
            ]
            samples, mean_reward = collect_rollouts(instances, model, cfg, rng)
            actor_loss, critic_loss = ppo_update(samples, model, opt, cfg, rng)
            val_cost = _validation_cost(model, val_instances, cfg)
            writer.writerow([epoch, mean_reward, actor_loss, critic_loss, val_cost])
            fh.flush()

            last_ckpt = out_dir / f"ckpt_{epoch}.bin"
            tensors = model_tensors(model)
            tensors.update(opt.state_tensors())
            save_checkpoint(
                last_ckpt,
                tensors,
                {
                    "hyperparams": model.hp.to_dict(),
                    "step": epoch + 1,
                    "opt_step": opt.step_count,
                    "train_config": asdict(cfg),
                },
            )
    return last_ckpt
