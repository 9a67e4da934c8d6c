import numpy as np
import pytest
import torch

from neulns.core import build_initial_solution
from neulns.errors import CheckpointMismatch, InvalidM, IsolatedNode
from neulns.instance_io import GeneratorConfig, generate
from neulns.policy import (
    EgateLayer,
    HyperParams,
    NeuralOperator,
    build_model,
    load_checkpoint,
    load_model,
    model_tensors,
    primitive_embed,
    save_checkpoint,
    save_model,
    sparse_mask,
)


def _instance_and_solution(n=20, variant="cvrptw", seed=0):
    inst = generate(GeneratorConfig(n_customers=n, variant=variant, seed=seed))
    sol = build_initial_solution(inst, np.random.default_rng(seed))
    return inst, sol


class TestPrimitiveEmbed:
    def test_feature_widths(self):
        for variant, width in (("cvrptw", 8), ("cvrp", 5)):
            inst, sol = _instance_and_solution(variant=variant)
            feats = primitive_embed(inst, sol)
            assert feats.node.shape == (21, width)
            assert feats.edge.shape == (21, 21, 2)

    def test_in_solution_arc_count(self):
        inst, sol = _instance_and_solution(n=30)
        feats = primitive_embed(inst, sol)
        n_routes = len(sol.routes)
        assert feats.edge[:, :, 1].sum() == 30 + n_routes

    def test_demand_normalization(self):
        inst, sol = _instance_and_solution(variant="cvrp")
        feats = primitive_embed(inst, sol)
        u = next(u for u in inst.customers if inst.demand[u] == 9)
        assert feats.node[u, 0] == pytest.approx(0.09)

    def test_entries_are_order_one(self):
        inst, sol = _instance_and_solution(n=50)
        feats = primitive_embed(inst, sol)
        assert np.all(np.abs(feats.node) <= 5.0)
        assert np.all(np.abs(feats.edge) <= 1.0)
        assert set(np.unique(feats.edge[:, :, 1])) <= {0.0, 1.0}

    def test_depot_row(self):
        inst, sol = _instance_and_solution()
        feats = primitive_embed(inst, sol)
        assert feats.node[0, 0] == 0.0
        assert feats.node[0, 1] == pytest.approx(1.0)  # depot due / time scale
        assert np.all(feats.node[0, 2:] == 0.0)


class TestEgateLayer:
    def _random_inputs(self, seed, n=9, ne=6, ni=4):
        g = torch.Generator().manual_seed(seed)
        node = torch.randn(n, ne, generator=g, dtype=torch.float64)
        edge = torch.randn(n, n, ni, generator=g, dtype=torch.float64)
        mask = torch.rand(n, n, generator=g) < 0.3
        exclude = mask | torch.eye(n, dtype=torch.bool)
        # keep every row attendable
        for i in range(n):
            if exclude[i].all():
                exclude[i, (i + 1) % n] = False
        layer = EgateLayer(ne, ni).double()
        with torch.no_grad():
            layer.attn.weight.copy_(
                torch.randn(ne, 2 * ne + ni, generator=g, dtype=torch.float64)
            )
        return layer, node, edge, exclude

    def test_zero_weights_give_neighbor_mean(self):
        layer, node, edge, exclude = self._random_inputs(0)
        with torch.no_grad():
            layer.attn.weight.zero_()
        out = layer(node, edge, exclude)
        for i in range(node.shape[0]):
            nbrs = node[~exclude[i]]
            assert torch.allclose(out[i], node[i] + nbrs.mean(dim=0), atol=1e-12)

    def test_attention_rows_sum_to_one_per_coordinate(self):
        for seed in range(20):
            layer, node, edge, exclude = self._random_inputs(seed)
            n = node.shape[0]
            hi = node.unsqueeze(1).expand(n, n, -1)
            hj = node.unsqueeze(0).expand(n, n, -1)
            logits = torch.nn.functional.leaky_relu(
                layer.attn(torch.cat((hi, hj, edge), dim=-1)), 0.01
            )
            logits = logits.masked_fill(exclude.unsqueeze(-1), float("-inf"))
            weights = torch.softmax(logits, dim=1)
            sums = weights.sum(dim=1)
            assert torch.all((sums - 1).abs() < 1e-6)

    def test_masked_arc_has_zero_influence(self):
        for seed in range(100):
            layer, node, edge, exclude = self._random_inputs(seed)
            masked = torch.nonzero(exclude & ~torch.eye(len(node), dtype=torch.bool))
            if not len(masked):
                continue
            i, j = masked[seed % len(masked)].tolist()
            out = layer(node, edge, exclude)
            node2 = node.clone()
            node2[j] += torch.randn(node.shape[1], dtype=torch.float64)
            edge2 = edge.clone()
            edge2[i, j] += torch.randn(edge.shape[2], dtype=torch.float64)
            out2 = layer(node2, edge2, exclude)
            assert torch.allclose(out[i], out2[i], atol=1e-12)


class TestEncoder:
    def test_output_shapes_and_hyperparams(self):
        inst, sol = _instance_and_solution()
        model = build_model(HyperParams(variant="cvrptw"), seed=0)
        feats = primitive_embed(inst, sol)
        node_emb, pooled = model.encode(feats.node, feats.edge)
        assert node_emb.shape == (21, 64)
        assert pooled.shape == (64,)
        assert model.layers[0].attn.weight.shape == (64, 2 * 64 + 16)
        assert torch.allclose(pooled, node_emb.mean(dim=0))

    def test_permutation_equivariance(self):
        inst, sol = _instance_and_solution(n=15)
        model = build_model(HyperParams(variant="cvrptw"), seed=1)
        feats = primitive_embed(inst, sol)
        rng = np.random.default_rng(0)
        perm = rng.permutation(16)
        node_emb, pooled = model.encode(feats.node, feats.edge)
        node_emb_p, pooled_p = model.encode(
            feats.node[perm], feats.edge[np.ix_(perm, perm)]
        )
        assert torch.allclose(node_emb[perm], node_emb_p, atol=1e-5)
        assert torch.allclose(pooled, pooled_p, atol=1e-5)

    def test_isolated_node_raises(self):
        inst, sol = _instance_and_solution(n=5)
        model = build_model(HyperParams(variant="cvrptw"), seed=0)
        feats = primitive_embed(inst, sol)
        mask = np.ones((6, 6), dtype=bool)
        with pytest.raises(IsolatedNode):
            model.encode(feats.node, feats.edge, mask)


class TestDecoder:
    def _encoded(self, seed=0, n=10):
        inst, sol = _instance_and_solution(n=n, seed=seed)
        model = build_model(HyperParams(variant="cvrptw"), seed=seed)
        feats = primitive_embed(inst, sol)
        node_emb, pooled = model.encode(feats.node, feats.edge)
        return model, node_emb, pooled

    def test_greedy_tie_picks_lowest_id(self):
        model, node_emb, pooled = self._encoded()
        with torch.no_grad():
            model.ptr_score.zero_()  # all scores equal
        ids, _ = model.decode(node_emb, pooled, 3, mode="greedy")
        assert ids == [1, 2, 3]

    def test_no_repeats_and_probs_valid(self):
        model, node_emb, pooled = self._encoded(seed=3)
        rng = np.random.default_rng(0)
        ids, logps = model.decode(node_emb, pooled, 10, mode="sample", rng=rng)
        assert len(set(ids)) == 10 and 0 not in ids
        assert torch.all(logps <= 0)
        assert torch.isfinite(logps).all()

    def test_zeroed_pointer_samples_uniformly(self):
        model, node_emb, pooled = self._encoded()
        with torch.no_grad():
            model.ptr_score.zero_()
        rng = np.random.default_rng(7)
        trials = 20_000
        counts = np.zeros(11)
        for _ in range(trials):
            ids, _ = model.decode(node_emb, pooled, 1, mode="sample", rng=rng)
            counts[ids[0]] += 1
        p = 0.1
        sigma = np.sqrt(p * (1 - p) / trials)
        assert np.all(np.abs(counts[1:] / trials - p) < 3 * sigma)

    def test_forced_matches_action(self):
        model, node_emb, pooled = self._encoded(seed=5)
        ids, logps = model.decode(node_emb, pooled, 4, forced=[4, 2, 9, 1])
        assert ids == [4, 2, 9, 1]
        assert logps.shape == (4,)

    def test_invalid_m(self):
        model, node_emb, pooled = self._encoded()
        with pytest.raises(InvalidM):
            model.decode(node_emb, pooled, 11, mode="greedy")


class TestCritic:
    def test_zero_parameters_give_zero(self):
        model = build_model(HyperParams(), seed=0)
        with torch.no_grad():
            for p in model.critic_parameters():
                p.zero_()
        assert model.critic_value(torch.randn(64)) == 0.0

    def test_hidden_width(self):
        model = build_model(HyperParams(), seed=0)
        assert model.critic_hidden.weight.shape == (64, 64)

    def test_finite_on_random_inputs(self):
        model = build_model(HyperParams(), seed=2)
        g = torch.Generator().manual_seed(0)
        vals = model.critic_value(torch.randn(10_000, 64, generator=g) * 10)
        assert torch.isfinite(vals).all()


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        model = build_model(HyperParams(variant="cvrptw", n_layers=3), seed=4)
        path = tmp_path / "ckpt.bin"
        save_model(path, model, step=7)
        loaded, meta, extra = load_model(path)
        assert meta["step"] == 7
        assert meta["hyperparams"]["n_layers"] == 3
        assert extra == {}
        for (na, a), (nb, b) in zip(
            model.named_parameters(), loaded.named_parameters()
        ):
            assert na == nb
            assert np.array_equal(
                a.detach().numpy().astype("<f4"), b.detach().numpy()
            )

    def test_variant_mismatch(self, tmp_path):
        model = build_model(HyperParams(variant="cvrp"), seed=0)
        path = tmp_path / "cvrp.bin"
        save_model(path, model)
        from neulns.policy import load_model_expecting

        with pytest.raises(CheckpointMismatch):
            load_model_expecting(path, HyperParams(variant="cvrptw"))

    def test_raw_format_round_trip(self, tmp_path):
        tensors = {"a": np.arange(6, dtype="<f4").reshape(2, 3), "b": np.ones(4, dtype="<f4")}
        path = tmp_path / "raw.bin"
        save_checkpoint(path, tensors, {"k": 1})
        loaded, meta = load_checkpoint(path)
        assert meta == {"k": 1}
        assert all(np.array_equal(tensors[k], loaded[k]) for k in tensors)


class TestNeuralOperator:
    def test_operator_invariants(self):
        for seed in range(30):
            inst, sol = _instance_and_solution(n=12, seed=seed)
            model = build_model(HyperParams(variant="cvrptw"), seed=seed)
            op = NeuralOperator(model, 4, mode="sample")
            proposal = op.propose(inst, sol, np.random.default_rng(seed))
            assert len(proposal) == len(set(proposal)) == 4
            assert 0 not in proposal
            assert set(proposal) <= set(sol.assigned_customers())

    def test_greedy_deterministic(self):
        inst, sol = _instance_and_solution(n=15, seed=2)
        model = build_model(HyperParams(variant="cvrptw"), seed=2)
        op = NeuralOperator(model, 5, mode="greedy")
        a = op.propose(inst, sol, np.random.default_rng(0))
        b = op.propose(inst, sol, np.random.default_rng(99))
        assert a == b

    def test_variant_mismatch(self):
        inst, sol = _instance_and_solution(n=5, variant="cvrp", seed=1)
        model = build_model(HyperParams(variant="cvrptw"), seed=0)
        op = NeuralOperator(model, 2)
        with pytest.raises(CheckpointMismatch):
            op.propose(inst, sol, np.random.default_rng(0))


class TestSparseMask:
    def test_keeps_nearest_depot_and_route_neighbors(self):
        inst, sol = _instance_and_solution(n=40, seed=1)
        mask = sparse_mask(inst, sol, keep_frac=0.10)
        keep = int(np.ceil(0.10 * 41))
        assert not mask[1:, 0].any()
        assert mask.diagonal().all()
        for i in range(1, 41):
            nearest = [j for j in np.argsort(inst.dist[i], kind="stable") if j != i][:keep]
            assert not mask[i, nearest].any()
        for route in sol.routes:
            path = [0] + route + [0]
            for a, b in zip(path, path[1:]):
                assert not mask[a, b] or a == b
                assert not mask[b, a] or a == b

    def test_masked_encode_runs(self):
        inst, sol = _instance_and_solution(n=40, seed=3)
        model = build_model(HyperParams(variant="cvrptw", n_layers=3), seed=0)
        feats = primitive_embed(inst, sol, sparse_mask(inst, sol))
        node_emb, pooled = model.encode(feats.node, feats.edge, feats.mask)
        assert torch.isfinite(node_emb).all() and torch.isfinite(pooled).all()
