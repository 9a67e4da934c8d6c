import numpy as np
import pytest
import torch

from neulns.core.model import CostBreakdown
from neulns.errors import TrainingDiverged
from neulns.instance_io import GeneratorConfig, generate
from neulns.policy import build_model, load_checkpoint
from neulns.training import (
    Adam,
    TrainConfig,
    collect_rollouts,
    k_step_td,
    ppo_update,
    reward,
    train,
)


def _tiny_cfg(**overrides):
    base = dict(
        variant="cvrp",
        n_customers=6,
        epochs=1,
        instances_per_epoch=2,
        batch_size=8,
        rollout_steps=2,
        n_rollout=2,
        removal_count=2,
        n_layers=1,
        n_embed=16,
        n_edge_embed=8,
        n_decoder=16,
        n_critic=16,
        val_instances=2,
        val_iterations=5,
        seed=0,
    )
    base.update(overrides)
    return TrainConfig(**base)


class TestReward:
    def test_improvement_is_positive(self):
        prev = CostBreakdown(1188.14, 10, 1188.14)
        cur = CostBreakdown(1078.16, 10, 1078.16)
        assert reward(prev, cur) == pytest.approx(109.98)

    def test_deterioration_is_negative(self):
        assert reward(CostBreakdown(5.0, 1, 5.0), CostBreakdown(7.0, 1, 7.0)) == -2.0


class TestKStepTd:
    def test_one_step(self):
        # r + gamma * v_end - v_start = 1 + 0.9*10 - 3 = 7
        assert k_step_td([1.0], 10.0, 3.0, 0.9) == pytest.approx(7.0)

    def test_two_step(self):
        # 1 + 0.5*2 + 0.25*2 - 0 = 2.5
        assert k_step_td([1.0, 2.0], 2.0, 0.0, 0.5) == pytest.approx(2.5)

    def test_gamma_one_is_plain_sum(self):
        assert k_step_td([1.0, 1.0, 1.0], 4.0, 2.0, 1.0) == pytest.approx(5.0)


class TestTrainConfig:
    def test_rejects_bad_clip(self):
        with pytest.raises(ValueError):
            _tiny_cfg(clip_eps=0.0)

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            _tiny_cfg(gamma=1.5)

    def test_default_removal_count_is_ten_percent(self):
        assert TrainConfig(n_customers=100).m_removals() == 10


class TestCollectRollouts:
    def test_sample_count_identity(self):
        cfg = _tiny_cfg(instances_per_epoch=3, rollout_steps=4, n_rollout=2)
        instances = [
            generate(GeneratorConfig(n_customers=6, variant="cvrp", seed=s))
            for s in range(3)
        ]
        model = build_model(cfg.hyperparams(), seed=0)
        samples, _ = collect_rollouts(instances, model, cfg, np.random.default_rng(0))
        assert len(samples) == 3 * 4 * 2

    def test_anchor_fields_shared_within_trajectory(self):
        cfg = _tiny_cfg(rollout_steps=3, n_rollout=1, instances_per_epoch=1)
        inst = generate(GeneratorConfig(n_customers=6, variant="cvrp", seed=1))
        model = build_model(cfg.hyperparams(), seed=1)
        samples, _ = collect_rollouts([inst], model, cfg, np.random.default_rng(1))
        assert len(samples) == 3
        first = samples[0]
        for s in samples[1:]:
            assert s.action == first.action
            assert s.old_logp == first.old_logp
            assert np.array_equal(s.node_feat, first.node_feat)


def _one_sample(cfg, seed=0):
    inst = generate(GeneratorConfig(n_customers=6, variant="cvrp", seed=seed))
    model = build_model(cfg.hyperparams(), seed=seed)
    samples, _ = collect_rollouts([inst], model, cfg, np.random.default_rng(seed))
    return model, samples[:1]


class TestPpoUpdate:
    def test_fresh_samples_have_unit_ratio(self):
        # with lr=0 the parameters never move, so ratio == 1 and the actor
        # loss equals minus the mean advantage
        cfg = _tiny_cfg(lr=0.0, advantage_norm=False, rollout_steps=1, n_rollout=1)
        model, samples = _one_sample(cfg)
        opt = Adam([(list(model.parameters()), 0.0)])
        actor_loss, _ = ppo_update(samples, model, opt, cfg, np.random.default_rng(0))
        assert actor_loss == pytest.approx(-samples[0].advantage, abs=1e-6)

    def test_ratio_two_positive_advantage_clips(self):
        cfg = _tiny_cfg(lr=0.0, advantage_norm=False, rollout_steps=1, n_rollout=1)
        model, samples = _one_sample(cfg)
        samples[0].old_logp -= np.log(2.0)  # current logp implies ratio 2
        samples[0].advantage = 1.5
        opt = Adam([(list(model.parameters()), 0.0)])
        actor_loss, _ = ppo_update(samples, model, opt, cfg, np.random.default_rng(0))
        assert actor_loss == pytest.approx(-1.2 * 1.5, abs=1e-5)

    def test_ratio_half_negative_advantage_takes_pessimistic_branch(self):
        # min(rho*adv, clip(rho)*adv) with adv < 0 keeps the clipped term:
        # min(0.5*-2, 0.8*-2) = -1.6, so the loss is +1.6
        cfg = _tiny_cfg(lr=0.0, advantage_norm=False, rollout_steps=1, n_rollout=1)
        model, samples = _one_sample(cfg)
        samples[0].old_logp += np.log(2.0)  # ratio 0.5
        samples[0].advantage = -2.0
        opt = Adam([(list(model.parameters()), 0.0)])
        actor_loss, _ = ppo_update(samples, model, opt, cfg, np.random.default_rng(0))
        assert actor_loss == pytest.approx(1.6, abs=1e-5)

    def test_parameters_change_with_positive_lr(self):
        cfg = _tiny_cfg(advantage_norm=False, rollout_steps=1, n_rollout=1)
        model, samples = _one_sample(cfg)
        before = [p.detach().clone() for p in model.parameters()]
        opt = Adam([(list(model.parameters()), cfg.lr)])
        ppo_update(samples, model, opt, cfg, np.random.default_rng(0))
        assert any(
            not torch.equal(a, b) for a, b in zip(before, model.parameters())
        )

    def test_non_finite_loss_raises(self):
        cfg = _tiny_cfg(lr=0.0, advantage_norm=False, rollout_steps=1, n_rollout=1)
        model, samples = _one_sample(cfg)
        samples[0].advantage = float("nan")
        opt = Adam([(list(model.parameters()), 0.0)])
        with pytest.raises(TrainingDiverged):
            ppo_update(samples, model, opt, cfg, np.random.default_rng(0))


class TestAdam:
    def test_matches_torch_adam(self):
        g = torch.Generator().manual_seed(0)
        target = torch.randn(5, generator=g)
        ours = torch.randn(5, generator=g, requires_grad=True)
        ref = ours.detach().clone().requires_grad_(True)
        opt_a = Adam([([ours], 1e-2)])
        opt_b = torch.optim.Adam([ref], lr=1e-2)
        for _ in range(50):
            opt_a.zero_grad()
            ((ours - target) ** 2).sum().backward()
            opt_a.step()
            opt_b.zero_grad()
            ((ref - target) ** 2).sum().backward()
            opt_b.step()
        assert torch.allclose(ours, ref, atol=1e-6)

    def test_state_round_trip(self):
        p = torch.randn(3, requires_grad=True)
        opt = Adam([([p], 1e-3)])
        p.grad = torch.ones(3)
        opt.step()
        state = opt.state_tensors()
        q = p.detach().clone().requires_grad_(True)
        opt2 = Adam([([q], 1e-3)])
        opt2.load_state(state, opt.step_count)
        assert torch.allclose(opt.m[0], opt2.m[0])
        assert torch.allclose(opt.v[0], opt2.v[0])
        assert opt2.step_count == 1


class TestTrain:
    def test_smoke_emits_metrics_and_checkpoints(self, tmp_path):
        cfg = _tiny_cfg(epochs=2)
        last = train(cfg, tmp_path / "run")
        assert last == tmp_path / "run" / "ckpt_1.bin"
        lines = (tmp_path / "run" / "metrics.csv").read_text().splitlines()
        assert lines[0] == "epoch,mean_reward,actor_loss,critic_loss,val_cost"
        assert len(lines) == 3
        _, meta = load_checkpoint(last)
        assert meta["step"] == 2
        assert meta["train_config"]["n_customers"] == 6

    def test_resume_is_bit_exact(self, tmp_path):
        full = train(_tiny_cfg(epochs=2), tmp_path / "full")
        first = train(_tiny_cfg(epochs=1), tmp_path / "split")
        resumed = train(_tiny_cfg(epochs=2), tmp_path / "split", resume=str(first))
        assert full.read_bytes() == resumed.read_bytes()
