import numpy as np
import pytest

from engine import ops
from engine.gradcheck import check_gradients, relative_error
from engine.tensor import Tensor, backward, debug_finite, no_grad, parameter
from engine.ops import BatchNormState
from utils.errors import (
    BatchTooSmallError,
    ConfigError,
    DataError,
    DegenerateNeighborhoodError,
    DimensionError,
    NonFiniteError,
    UsageError,
)

TOL = 1e-6


def _assert_grads_match(loss_fn, tensors):
    errors = check_gradients(loss_fn, tensors)
    worst = max(errors.values())
    assert worst < TOL, errors


class TestTape:
    def test_shared_input_accumulates(self):
        x = parameter([1.0, -2.0, 3.0])
        backward(ops.sum(ops.mul(x, x)))
        np.testing.assert_allclose(x.grad, 2 * x.data)

    def test_grad_accumulates_across_calls_until_reset(self):
        x = parameter([1.0, 2.0])
        backward(ops.sum(ops.mul(x, 3.0)))
        backward(ops.sum(ops.mul(x, 3.0)))
        np.testing.assert_allclose(x.grad, [6.0, 6.0])
        x.zero_grad()
        assert x.grad is None

    def test_backward_needs_scalar(self):
        x = parameter(np.ones((2, 2)))
        with pytest.raises(UsageError):
            backward(ops.mul(x, 2.0))

    def test_backward_needs_tape(self):
        with pytest.raises(UsageError):
            backward(ops.sum(Tensor([1.0, 2.0])))

    def test_no_grad_records_nothing(self):
        x = parameter([1.0, 2.0])
        with no_grad():
            y = ops.sum(ops.mul(x, x))
        assert not y.requires_grad

    def test_construction_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            Tensor([1.0, np.nan])

    def test_debug_finite_flags_overflow(self):
        x = Tensor([1e308])
        with np.errstate(over="ignore"):
            assert not np.isfinite(ops.mul(x, 10.0).data).any()
            with debug_finite():
                with pytest.raises(NonFiniteError):
                    ops.mul(x, 10.0)

    def test_replay_is_bitwise_identical(self, rng):
        w = parameter(rng.normal(size=(4, 3)))
        x = Tensor(rng.normal(size=(5, 4)))
        segments = np.array([0, 0, 1, 2, 2])

        def run():
            w.zero_grad()
            scores = ops.sum(ops.tanh(ops.matmul(x, w)), axis=-1)
            loss = ops.bce_with_logits(ops.segment_softmax(scores, segments, 3), [1.0, 0.0, 1.0, 0.0, 1.0])
            tape = backward(loss)
            return loss.item(), len(tape), w.grad.copy()

        first, second = run(), run()
        assert first[:2] == second[:2]
        np.testing.assert_array_equal(first[2], second[2])


def _off_kink(draw, shape):
    """Values at least 0.1 away from zero, where ReLU-type ops bend."""
    return draw.choice([-1.0, 1.0], size=shape) * draw.uniform(0.1, 2.0, size=shape)


def _pointwise_case(draw):
    shape = tuple(int(s) for s in draw.integers(1, 5, size=2))
    x = parameter(_off_kink(draw, shape))
    w = Tensor(draw.normal(size=shape))
    slope = float(draw.uniform(0.01, 0.5))
    return lambda: ops.sum(ops.mul(ops.add(ops.leaky_relu(x, slope), ops.sigmoid(ops.tanh(x))), w)), {"x": x}


def _matmul_case(draw):
    m, k, n = (int(s) for s in draw.integers(1, 5, size=3))
    a = parameter(draw.normal(size=(m, k)))
    b = parameter(draw.normal(size=(k, n)))
    return lambda: ops.sum(ops.tanh(ops.matmul(a, b))), {"a": a, "b": b}


def _concat_case(draw):
    rows = int(draw.integers(1, 4))
    left = parameter(draw.normal(size=(rows, int(draw.integers(1, 4)))))
    right = parameter(draw.normal(size=(rows, int(draw.integers(1, 4)))))
    width = left.shape[1] + right.shape[1]
    w = Tensor(draw.normal(size=(rows, width)))
    return lambda: ops.sum(ops.mul(ops.sigmoid(ops.concat([left, right], axis=-1)), w)), {"l": left, "r": right}


def _segment_softmax_case(draw):
    num_segments = int(draw.integers(1, 4))
    segments = np.sort(np.concatenate([np.arange(num_segments), draw.integers(0, num_segments, size=3)]))
    scores = parameter(draw.normal(size=segments.size) * draw.uniform(0.5, 3.0))
    w = Tensor(draw.normal(size=segments.size))
    return lambda: ops.sum(ops.mul(ops.segment_softmax(scores, segments, num_segments), w)), {"s": scores}


def _batch_norm_case(draw):
    rows, cols = int(draw.integers(3, 7)), int(draw.integers(1, 4))
    x = parameter(draw.normal(size=(rows, cols)) * draw.uniform(0.5, 2.0))
    gamma = parameter(draw.uniform(0.5, 1.5, size=cols))
    beta = parameter(draw.normal(size=cols))
    w = Tensor(draw.normal(size=(rows, cols)))
    state = BatchNormState.fresh(cols)
    return (
        lambda: ops.sum(ops.mul(ops.batch_norm(x, state, gamma, beta, training=True), w)),
        {"x": x, "gamma": gamma, "beta": beta},
    )


def _bce_case(draw):
    size = int(draw.integers(1, 8))
    z = parameter(draw.normal(size=size) * 3.0)
    labels = draw.integers(0, 2, size=size).astype(float)
    return lambda: ops.bce_with_logits(z, labels), {"z": z}


RANDOM_CASES = [_pointwise_case, _matmul_case, _concat_case, _segment_softmax_case, _batch_norm_case, _bce_case]


@pytest.mark.parametrize("trial", range(100))
def test_random_op_compositions_match_finite_differences(trial):
    draw = np.random.default_rng(trial)
    loss_fn, tensors = RANDOM_CASES[trial % len(RANDOM_CASES)](draw)
    errors = check_gradients(loss_fn, tensors)
    assert max(errors.values()) < 1e-5, errors


class TestGradients:
    def test_arithmetic_and_matmul(self, rng):
        a = parameter(rng.normal(size=(3, 4)))
        b = parameter(rng.normal(size=(4, 2)))
        c = parameter(rng.normal(size=(3, 2)))
        _assert_grads_match(
            lambda: ops.sum(ops.mul(ops.sub(ops.matmul(a, b), c), ops.add(c, 1.5))),
            {"a": a, "b": b, "c": c},
        )

    def test_batched_matmul_broadcasts(self, rng):
        a = parameter(rng.normal(size=(2, 3, 4)))
        b = parameter(rng.normal(size=(4, 5)))
        m = parameter(rng.normal(size=(3, 3)))
        _assert_grads_match(lambda: ops.sum(ops.tanh(ops.matmul(m, ops.matmul(a, b)))), {"a": a, "b": b, "m": m})

    def test_shape_ops(self, rng):
        x = parameter(rng.normal(size=(2, 3)))
        bias = parameter(rng.normal(size=(3,)))

        def loss():
            wide = ops.add(x, ops.expand(bias, (2, 3)))
            joined = ops.concat([wide, ops.reshape(x, (2, 3))], axis=-1)
            return ops.sum(ops.sigmoid(ops.gather(joined, np.array([1, 0, 1]), axis=0)))

        _assert_grads_match(loss, {"x": x, "bias": bias})

    def test_segment_sum_and_max(self, rng):
        x = parameter(rng.normal(size=(5, 3)))
        w = Tensor(rng.normal(size=(2, 3)))
        _assert_grads_match(
            lambda: ops.sum(ops.mul(ops.segment_sum(x, np.array([0, 1, 0, 1, 1]), 2), w)),
            {"x": x},
        )
        _assert_grads_match(lambda: ops.sum(ops.mul(ops.max_reduce(x, axis=0), w[0])), {"x": x})

    def test_concat_with_empty_operand(self, rng):
        x = parameter(rng.normal(size=(3,)))
        empty = parameter(np.zeros((0,)))
        joined = ops.concat([x, empty])
        np.testing.assert_array_equal(joined.data, x.data)
        backward(ops.sum(ops.mul(joined, 2.0)))
        np.testing.assert_allclose(x.grad, [2.0, 2.0, 2.0])
        assert empty.grad is None or empty.grad.shape == (0,)

    def test_index(self, rng):
        x = parameter(rng.normal(size=(4, 3)))
        _assert_grads_match(lambda: ops.sum(ops.tanh(x[1:3, :2])), {"x": x})


class TestSegmentSoftmax:
    def test_sums_to_one_per_segment(self, rng):
        scores = Tensor(rng.normal(size=(2, 6)))
        segments = np.array([0, 0, 1, 2, 2, 2])
        alpha = ops.segment_softmax(scores, segments, 3).data
        for s in range(3):
            np.testing.assert_allclose(alpha[:, segments == s].sum(axis=1), 1.0)

    def test_singleton_segment_gets_weight_one(self):
        alpha = ops.segment_softmax(Tensor([5.0, -1.0, 2.0]), np.array([0, 1, 1]), 2).data
        assert alpha[0] == pytest.approx(1.0)

    def test_large_scores_stay_finite(self):
        alpha = ops.segment_softmax(Tensor([1000.0, 999.0]), np.array([0, 0]), 1).data
        np.testing.assert_allclose(alpha, [1 / (1 + np.exp(-1)), np.exp(-1) / (1 + np.exp(-1))])

    def test_gradient(self, rng):
        scores = parameter(rng.normal(size=(6,)))
        w = Tensor(rng.normal(size=(6,)))
        segments = np.array([0, 0, 1, 2, 2, 2])
        _assert_grads_match(lambda: ops.sum(ops.mul(ops.segment_softmax(scores, segments, 3), w)), {"s": scores})

    def test_per_segment_shift_leaves_weights_unchanged(self, rng):
        scores = rng.normal(size=(3, 7))
        segments = np.array([0, 0, 1, 1, 1, 2, 3])
        shift = rng.uniform(-100.0, 100.0, size=4)[segments]
        alpha = ops.segment_softmax(Tensor(scores), segments, 4).data
        shifted = ops.segment_softmax(Tensor(scores + shift), segments, 4).data
        np.testing.assert_allclose(shifted, alpha, atol=1e-12)
        assert np.all((alpha > 0.0) & (alpha <= 1.0))

    def test_empty_segment_rejected(self):
        with pytest.raises(DegenerateNeighborhoodError):
            ops.segment_softmax(Tensor([1.0, 2.0]), np.array([0, 2]), 3)


class TestPointwise:
    def test_leaky_relu_slope_range(self):
        with pytest.raises(ConfigError):
            ops.leaky_relu(Tensor([1.0]), 1.5)

    def test_unknown_activation(self):
        with pytest.raises(ConfigError):
            ops.activation("swish")

    def test_elementwise_dispatch(self):
        x = Tensor([-1.0, 2.0])
        np.testing.assert_allclose(ops.elementwise("relu", x).data, [0.0, 2.0])
        np.testing.assert_allclose(ops.elementwise("add", x, x).data, [-2.0, 4.0])

    def test_binary_shapes_must_match(self):
        with pytest.raises(DimensionError):
            ops.add(Tensor(np.ones(3)), Tensor(np.ones(4)))


class TestDropout:
    def test_eval_is_identity(self):
        x = Tensor(np.ones((3, 3)))
        assert ops.dropout(x, 0.5, training=False) is x

    def test_training_preserves_mean(self):
        x = Tensor(np.ones(200_000))
        out = ops.dropout(x, 0.3, training=True, rng=np.random.default_rng(0)).data
        assert out.mean() == pytest.approx(1.0, abs=0.01)
        assert set(np.unique(out)) <= {0.0, 1.0 / 0.7}

    def test_zero_fraction_matches_probability(self):
        out = ops.dropout(Tensor(np.ones(1_000_000)), 0.2, training=True, rng=np.random.default_rng(0)).data
        assert np.mean(out == 0.0) == pytest.approx(0.2, abs=0.005)

    def test_training_needs_generator(self):
        with pytest.raises(ConfigError):
            ops.dropout(Tensor(np.ones(3)), 0.5, training=True)

    def test_probability_range(self):
        with pytest.raises(ConfigError):
            ops.dropout(Tensor(np.ones(3)), 1.0, training=False)


class TestBatchNorm:
    def test_training_standardizes_and_updates_running_stats(self, rng):
        x = Tensor(rng.normal(3.0, 2.0, size=(50, 4)))
        state = BatchNormState.fresh(4)
        out = ops.batch_norm(x, state, Tensor(np.ones(4)), Tensor(np.zeros(4)), training=True).data
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-4)
        np.testing.assert_allclose(state.running_mean, 0.1 * x.data.mean(axis=0))
        np.testing.assert_allclose(state.running_var, 0.9 + 0.1 * x.data.var(axis=0, ddof=1))

    def test_eval_uses_running_stats(self):
        state = BatchNormState(running_mean=np.array([1.0]), running_var=np.array([4.0]), eps=0.0)
        out = ops.batch_norm(Tensor([[3.0]]), state, Tensor([2.0]), Tensor([0.5]), training=False).data
        assert out[0, 0] == pytest.approx(2.0 * (3.0 - 1.0) / 2.0 + 0.5)

    def test_single_row_rejected_in_training(self):
        with pytest.raises(BatchTooSmallError):
            ops.batch_norm(Tensor([[1.0, 2.0]]), BatchNormState.fresh(2), Tensor(np.ones(2)), Tensor(np.zeros(2)), True)

    def test_gradient(self, rng):
        x = parameter(rng.normal(size=(6, 3)))
        gamma = parameter(rng.uniform(0.5, 1.5, size=3))
        beta = parameter(rng.normal(size=3))
        w = Tensor(rng.normal(size=(6, 3)))
        state = BatchNormState.fresh(3)
        _assert_grads_match(
            lambda: ops.sum(ops.mul(ops.batch_norm(x, state, gamma, beta, training=True), w)),
            {"x": x, "gamma": gamma, "beta": beta},
        )


class TestBce:
    def test_matches_formula(self):
        z = np.array([0.3, -1.2, 2.0])
        y = np.array([1.0, 0.0, 0.0])
        p = 1 / (1 + np.exp(-z))
        expected = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
        assert ops.bce_with_logits(Tensor(z), y).item() == pytest.approx(expected)

    def test_extreme_logits_are_finite(self):
        loss = ops.bce_with_logits(Tensor([1000.0, -1000.0]), [1.0, 0.0]).item()
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.isfinite(ops.bce_with_logits(Tensor([1000.0]), [0.0]).item())

    def test_gradient_is_prob_minus_label(self):
        z = parameter([0.0, 2.0])
        backward(ops.bce_with_logits(z, [1.0, 0.0]))
        np.testing.assert_allclose(z.grad, (1 / (1 + np.exp(-z.data)) - [1.0, 0.0]) / 2)

    def test_label_validation(self):
        with pytest.raises(DataError):
            ops.bce_with_logits(Tensor([0.0]), [0.5])
        with pytest.raises(DimensionError):
            ops.bce_with_logits(Tensor([0.0, 1.0]), [1.0])


def test_relative_error_zero_when_both_vanish():
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
