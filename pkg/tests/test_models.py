import numpy as np
import pytest

from datagen.dataset import project_to_pmu_subset
from engine.tensor import Tensor, no_grad
from grid.pmu_graph import PmuGraph, induce_pmu_graph
from models.model import ModelInstance, majority_vote, rebind_graph
from models.spec import ALL_FAMILIES, Detection, Family, ModelSpec, build_spec
from training.config import TrainConfig
from training.trainer import train
from utils.errors import BindingError, ConfigError, DegenerateNeighborhoodError, DimensionError


def tiny_spec(family, **overrides) -> ModelSpec:
    return build_spec(family, **{"input_dim": 2, "hidden": 4, "gnn_out": 3, **overrides})


class TestSpec:
    def test_sage_defaults_to_max(self):
        spec = build_spec("rgsage")
        assert spec.sage_aggregator == "max"
        assert spec.label == "rgsage-max"

    def test_aggregator_only_for_sage(self):
        with pytest.raises(ConfigError):
            build_spec("rgcn", sage_aggregator="mean")

    def test_unknown_family(self):
        with pytest.raises(ConfigError):
            build_spec("lstm")
        with pytest.raises(ConfigError):
            Family.parse("transformer")

    def test_unknown_activation(self):
        with pytest.raises(ConfigError):
            build_spec("rgat", activation="gelu")

    def test_family_flags(self):
        assert not Family.GRU_AGG.uses_graph
        assert Family.RGATV2.uses_graph and Family.RGATV2.uses_attention
        assert not Family.RGSAGE.uses_attention


class TestMajorityVote:
    def test_strict_majority(self):
        assert majority_vote(np.array([True, True, False]))
        assert not majority_vote(np.array([True, False]))
        assert not majority_vote(np.array([False, False, False]))

    def test_batched(self):
        votes = np.array([[1, 1, 0], [1, 0, 0]], dtype=bool)
        np.testing.assert_array_equal(majority_vote(votes), [True, False])


@pytest.mark.parametrize("family", ALL_FAMILIES)
class TestEveryFamily:
    def test_output_shapes(self, family, toy_graph, rng):
        model = ModelInstance(tiny_spec(family), toy_graph)
        sample = rng.normal(size=(4, 5, 2))
        out = model.forward(sample)
        assert out.shape == ((4,) if family == Family.GRU_LOCAL else ())
        batch = model.forward_batch(rng.normal(size=(3, 4, 5, 2)))
        assert batch.shape == ((3, 4) if family == Family.GRU_LOCAL else (3,))
        assert model.predict(sample) in (Detection.FAULT, Detection.NO_FAULT)

    def test_same_seed_same_parameters(self, family, toy_graph):
        a = ModelInstance(tiny_spec(family, seed=3), toy_graph)
        b = ModelInstance(tiny_spec(family, seed=3), toy_graph)
        c = ModelInstance(tiny_spec(family, seed=4), toy_graph)
        assert a.checksum() == b.checksum()
        assert a.checksum() != c.checksum()

    def test_node_permutation_invariance(self, family, toy_graph, rng):
        model = ModelInstance(tiny_spec(family), toy_graph)
        sample = rng.normal(size=(4, 5, 2))
        perm = np.array([3, 1, 0, 2])
        new_position = {int(old): new for new, old in enumerate(perm)}
        relabeled = PmuGraph(
            pmu_buses=toy_graph.pmu_buses,
            edges=tuple(
                tuple(sorted((toy_graph.pmu_buses[new_position[toy_graph.position[u]]],
                              toy_graph.pmu_buses[new_position[toy_graph.position[v]]])))
                for u, v in toy_graph.edges
            ),
        )
        original = model.forward(sample).data
        permuted = model.rebind_graph(relabeled).forward(sample[perm]).data
        if family == Family.GRU_LOCAL:
            np.testing.assert_allclose(permuted, original[perm], atol=1e-12)
        else:
            np.testing.assert_allclose(permuted, original, atol=1e-12)

    def test_rebind_shares_parameters(self, family, toy_graph, rng):
        model = ModelInstance(tiny_spec(family), toy_graph)
        before = model.checksum()
        smaller = PmuGraph(pmu_buses=(1, 2, 3), edges=((1, 2), (2, 3)))
        bound = rebind_graph(model, smaller)
        assert bound.checksum() == before
        assert bound.num_nodes == 3 and model.num_nodes == 4
        for (name, p), (_, q) in zip(model.named_parameters(), bound.named_parameters()):
            assert p is q, name
        bound.forward(rng.normal(size=(3, 5, 2)))
        with pytest.raises(BindingError):
            model.forward(rng.normal(size=(3, 5, 2)))

    def test_training_loss_is_scalar(self, family, toy_graph, rng):
        model = ModelInstance(tiny_spec(family), toy_graph)
        loss = model.loss(rng.normal(size=(3, 4, 5, 2)), [1, 0, 1], training=True, rng=rng)
        assert loss.shape == () and np.isfinite(loss.item())


def test_single_pmu_rgcn_by_hand(rng):
    model = ModelInstance(tiny_spec("rgcn"), PmuGraph(pmu_buses=(13,), edges=()))
    sample = rng.normal(size=(1, 5, 2))
    with no_grad():
        h = model.gru.forward(Tensor(sample[0])).data
    gcn = np.maximum(h @ model.gnn[0].W.data, 0.0)
    state = model.norms[0].state
    bn = (gcn - state.running_mean) / np.sqrt(state.running_var + state.eps)
    expected = bn @ model.head.w.data[:, 0] + model.head.b.data[0]
    assert model.forward(sample).item() == pytest.approx(expected, abs=1e-12)


def test_single_pmu_sage_has_no_neighbors():
    with pytest.raises(DegenerateNeighborhoodError):
        ModelInstance(tiny_spec("rgsage"), PmuGraph(pmu_buses=(13,), edges=()))


def test_single_pmu_attention_uses_self_loop(rng):
    model = ModelInstance(tiny_spec("rgatv2"), PmuGraph(pmu_buses=(13,), edges=()))
    assert np.isfinite(model.forward(rng.normal(size=(1, 5, 2))).item())


def test_gru_local_decides_by_vote(toy_graph):
    model = ModelInstance(tiny_spec("gru_local"), toy_graph)
    np.testing.assert_array_equal(model.decide(np.array([[1.0, 2.0, -1.0, 0.5], [1.0, -2.0, -1.0, 0.5]])), [True, False])


def test_eval_forward_leaves_running_stats(toy_graph, rng):
    model = ModelInstance(tiny_spec("rgat"), toy_graph)
    before = model.checksum()
    model.predict_batch(rng.normal(size=(2, 4, 5, 2)))
    assert model.checksum() == before
    model.loss(rng.normal(size=(2, 4, 5, 2)), [0, 1], training=True, rng=rng)
    assert model.checksum() != before


def test_feature_width_checked(toy_graph):
    model = ModelInstance(tiny_spec("gru_agg"), toy_graph)
    with pytest.raises(DimensionError):
        model.forward(np.zeros((4, 5, 3)))


def test_sage_trained_on_eleven_scores_the_full_feeder(small_dataset, feeder, pmu_table):
    train_split = project_to_pmu_subset(small_dataset, pmu_table[11])
    model = ModelInstance(build_spec("rgsage", hidden=8, gnn_out=8), induce_pmu_graph(feeder, pmu_table[11]))
    train(model, train_split.train, TrainConfig(epochs=1, batch_size=16, hidden=8), seed=0)
    full = model.rebind_graph(induce_pmu_graph(feeder, pmu_table[25]))
    test = project_to_pmu_subset(small_dataset, pmu_table[25]).test
    with no_grad():
        logits = full.forward_batch(test.features).data
    assert logits.shape == (len(test),)
    assert np.all(np.isfinite(logits))
