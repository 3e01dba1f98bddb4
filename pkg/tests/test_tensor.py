"""
Tests for the autodiff tensor engine.
"""
import numpy as np
import pytest

from src.lsp_distill.core.exceptions import ContractError, NumericError, ShapeError
from src.lsp_distill.tensor import (
    Tape,
    Tensor,
    check_gradients,
    gradient_check,
    is_grad_enabled,
    no_grad,
    ops,
    parameter,
)


def leaf(rng, shape, low=-1.0, high=1.0, away=0.0):
    """Trainable tensor with entries at least ``away`` from zero."""
    values = rng.uniform(low, high, size=shape)
    if away:
        values = np.sign(values) * (away + np.abs(values))
    return parameter(values)


def weighted_mean(fn):
    """Scalar objective ``mean(fn(x) * w)`` with fixed random weights."""
    def objective(x):
        out = fn(x)
        w = Tensor(np.random.default_rng(7).uniform(0.5, 1.5, size=out.shape))
        return ops.mean(ops.mul(out, w))
    return objective


class TestTensorBasics:
    """Construction, views and scalar access."""

    def test_data_is_float32(self):
        """Values are stored as contiguous float32."""
        t = Tensor([[1, 2], [3, 4]])
        assert t.data.dtype == np.float32
        assert t.shape == (2, 2)
        assert t.data.flags["C_CONTIGUOUS"]

    def test_numpy_view_is_read_only(self):
        """numpy() cannot be used to mutate the tensor."""
        t = Tensor(np.ones(3))
        view = t.numpy()
        with pytest.raises(ValueError):
            view[0] = 5.0

    def test_item_requires_single_element(self):
        """item() refuses tensors with more than one element."""
        assert Tensor(2.5).item() == 2.5
        with pytest.raises(ContractError):
            Tensor(np.ones(2)).item()

    def test_detach_drops_gradient(self):
        """A detached tensor shares values but never requires a gradient."""
        p = parameter(np.ones(3))
        d = p.detach()
        assert not d.requires_grad
        np.testing.assert_array_equal(d.data, p.data)


class TestTape:
    """Recording, backward and clearing."""

    def test_backward_accumulates_into_leaves(self):
        """d/dx sum(x * x) = 2x."""
        x = parameter([1.0, -2.0, 3.0])
        with Tape() as tape:
            tape.backward(ops.sum(ops.mul(x, x)))
        np.testing.assert_allclose(x.grad, [2.0, -4.0, 6.0])

    def test_second_backward_adds_again(self):
        """Backward twice without zero_grad doubles the gradient."""
        x = parameter([1.0, 2.0])
        with Tape() as tape:
            loss = ops.sum(ops.mul(x, x))
            tape.backward(loss)
            tape.backward(loss)
        np.testing.assert_allclose(x.grad, [4.0, 8.0])

    def test_backward_needs_scalar(self):
        """A non-scalar loss is rejected."""
        x = parameter(np.ones((2, 2)))
        with Tape() as tape:
            y = ops.scale(x, 2.0)
            with pytest.raises(ContractError):
                tape.backward(y)

    def test_tape_cleared_on_exit(self):
        """Leaving the context forgets every operation."""
        x = parameter(np.ones(2))
        with Tape() as tape:
            y = ops.sum(ops.exp(x))
            assert len(tape) == 2
        assert len(tape) == 0
        assert not y.requires_grad
        with pytest.raises(ContractError):
            y.backward()

    def test_no_grad_records_nothing(self):
        """Under no_grad outputs are constants and the tape stays empty."""
        x = parameter(np.ones(3))
        with Tape() as tape:
            with no_grad():
                assert not is_grad_enabled()
                y = ops.sum(ops.square(x))
            assert not y.requires_grad
            assert len(tape) == 0
        assert is_grad_enabled()

    def test_constants_are_not_recorded(self):
        """Operations on tensors without gradients stay off the tape."""
        with Tape() as tape:
            ops.add(Tensor(np.ones(2)), Tensor(np.ones(2)))
            assert len(tape) == 0


class TestOpsForward:
    """Forward values and error handling."""

    def test_matmul_shape_error(self):
        """Inner dimensions must agree."""
        with pytest.raises(ShapeError):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_broadcast_gradient_sums_rows(self):
        """A bias row broadcast over three rows collects three gradients."""
        a = parameter(np.zeros((3, 4)))
        b = parameter(np.zeros(4))
        with Tape() as tape:
            tape.backward(ops.sum(ops.add(a, b)))
        np.testing.assert_allclose(b.grad, np.full(4, 3.0))
        np.testing.assert_allclose(a.grad, np.ones((3, 4)))

    def test_incompatible_broadcast(self):
        """Mismatched shapes raise ShapeError."""
        with pytest.raises(ShapeError):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 2))))

    def test_log_is_clamped(self):
        """log(0) is log(1e-10) and passes no gradient."""
        x = parameter([0.0, 1.0])
        with Tape() as tape:
            y = ops.log(x)
            tape.backward(ops.sum(y))
        assert np.isclose(y.data[0], np.log(1e-10), rtol=1e-6)
        assert x.grad[0] == 0.0
        assert np.isclose(x.grad[1], 1.0)

    def test_log_softmax_rows_normalise(self, rng):
        """exp(log_softmax) sums to one per row, even for large logits."""
        x = Tensor(rng.normal(size=(5, 4)) * 50)
        probs = np.exp(ops.log_softmax(x).data.astype(np.float64))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-5)

    def test_dropout_identity_outside_training(self, rng):
        """Dropout returns its input unchanged when not training or rate is 0."""
        x = Tensor(np.ones((4, 4)))
        assert ops.dropout(x, 0.5, rng, training=False) is x
        assert ops.dropout(x, 0.0, rng, training=True) is x

    def test_dropout_scales_kept_units(self, rng):
        """Kept units are scaled by 1 / (1 - rate)."""
        out = ops.dropout(Tensor(np.ones((50, 50))), 0.5, rng, training=True).data
        assert np.all(np.isin(out, [0.0, 2.0]))
        assert 0.3 < np.mean(out == 0.0) < 0.7

    def test_concat_cols_requires_equal_rows(self):
        """Column concatenation checks row counts."""
        with pytest.raises(ShapeError):
            ops.concat_cols([Tensor(np.ones((2, 1))), Tensor(np.ones((3, 1)))])

    def test_gather_scatter_adjoint(self, rng):
        """<gather(x), y> equals <x, scatter(y)>."""
        x = rng.normal(size=(5, 3))
        y = rng.normal(size=(7, 3))
        idx = rng.integers(5, size=7)
        left = np.sum(ops.gather_rows(Tensor(x), idx).data * y)
        right = np.sum(x * ops.scatter_add_rows(Tensor(y), idx, 5).data)
        assert np.isclose(left, right, rtol=1e-5)

    def test_gather_rows_index_check(self):
        """Out-of-range row indices raise ContractError."""
        with pytest.raises(ContractError):
            ops.gather_rows(Tensor(np.ones((3, 2))), np.array([0, 3]))


class TestSegmentOps:
    """Per-receiver softmax and maximum."""

    def test_segment_softmax_sums_to_one(self, rng):
        """Every non-empty segment is a distribution, per head."""
        seg = np.array([0, 0, 1, 1, 1, 3])
        out = ops.segment_softmax(Tensor(rng.normal(size=(6, 2))), seg, 4).data
        sums = np.zeros((4, 2))
        np.add.at(sums, seg, out)
        np.testing.assert_allclose(sums[[0, 1, 3]], 1.0, atol=1e-6)
        assert np.all(sums[2] == 0)

    def test_segment_softmax_rejects_non_finite(self):
        """A NaN score raises NumericError."""
        with pytest.raises(NumericError):
            ops.segment_softmax(Tensor([0.0, np.nan]), np.array([0, 0]), 1)

    def test_segment_max_routes_gradient_to_first_max(self):
        """Ties send the sub-gradient to the first maximal row."""
        x = parameter([[1.0, 5.0], [3.0, 5.0], [2.0, 0.0]])
        with Tape() as tape:
            out = ops.segment_max(x, np.array([0, 0, 1]), 2)
            tape.backward(ops.sum(out))
        np.testing.assert_array_equal(out.data, [[3.0, 5.0], [2.0, 0.0]])
        np.testing.assert_array_equal(x.grad, [[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])

    def test_segment_max_empty_segment(self):
        """A segment with no rows raises ContractError."""
        with pytest.raises(ContractError):
            ops.segment_max(Tensor(np.ones((2, 1))), np.array([0, 0]), 2)


SMOOTH_UNARY = {
    "exp": ops.exp,
    "sigmoid": ops.sigmoid,
    "elu": ops.elu,
    "square": ops.square,
    "log_softmax": ops.log_softmax,
    "softmax": ops.softmax,
    "transpose": ops.transpose,
    "sum_axis0": lambda x: ops.sum(x, axis=0),
    "mean_axis1": lambda x: ops.mean(x, axis=1, keepdims=True),
    "reshape": lambda x: ops.reshape(x, (2, 6)),
}

KINKED_UNARY = {
    "relu": ops.relu,
    "leaky_relu": lambda x: ops.leaky_relu(x, 0.2),
    "abs": ops.abs,
}


class TestGradients:
    """Tape gradients agree with central differences."""

    @pytest.mark.parametrize("name", sorted(SMOOTH_UNARY))
    def test_smooth_unary(self, name, rng):
        """Smooth elementwise and reshaping ops."""
        x = leaf(rng, (3, 4))
        assert gradient_check(weighted_mean(SMOOTH_UNARY[name]), x) < 1e-3

    @pytest.mark.parametrize("name", sorted(KINKED_UNARY))
    def test_kinked_unary_away_from_zero(self, name, rng):
        """Piecewise-linear ops, sampled away from their kink."""
        x = leaf(rng, (3, 4), away=0.05)
        assert gradient_check(weighted_mean(KINKED_UNARY[name]), x) < 1e-3

    def test_log_and_sqrt_on_positive_inputs(self, rng):
        """log and sqrt on inputs well inside their domain."""
        x = leaf(rng, (3, 3), low=0.5, high=2.0)
        assert gradient_check(weighted_mean(ops.log), x) < 1e-3
        assert gradient_check(weighted_mean(ops.sqrt), x) < 1e-3

    def test_binary_ops(self, rng):
        """add, sub, mul, div and matmul with respect to both operands."""
        a = leaf(rng, (3, 4))
        b = leaf(rng, (3, 4), low=0.5, high=1.5)
        c = leaf(rng, (4, 2))
        w = Tensor(rng.uniform(0.5, 1.5, size=(3, 4)))
        for op in (ops.add, ops.sub, ops.mul, ops.div):
            errors = check_gradients(lambda: ops.mean(ops.mul(op(a, b), w)), [a, b])
            assert max(errors.values()) < 1e-3, op.__name__
        errors = check_gradients(lambda: ops.mean(ops.matmul(a, c)), [a, c])
        assert max(errors.values()) < 1e-3

    def test_segment_softmax_and_max(self, rng):
        """Segment reductions over a random grouping."""
        seg = rng.integers(4, size=12)
        seg[:4] = np.arange(4)
        # well separated values keep every arg-max stable under the difference step
        x = parameter(rng.permutation(np.linspace(-1.0, 1.0, 36)).reshape(12, 3))
        assert gradient_check(weighted_mean(lambda t: ops.segment_softmax(t, seg, 4)), x) < 1e-3
        assert gradient_check(weighted_mean(lambda t: ops.segment_max(t, seg, 4)), x) < 1e-3
        assert gradient_check(weighted_mean(ops.max_rows), x) < 1e-3

    def test_gather_scatter_concat(self, rng):
        """Indexing ops and column concatenation."""
        idx = rng.integers(5, size=8)
        x = leaf(rng, (5, 3))
        y = leaf(rng, (5, 2))
        assert gradient_check(weighted_mean(lambda t: ops.gather_rows(t, idx)), x) < 1e-3
        assert gradient_check(weighted_mean(lambda t: ops.scatter_add_rows(t, np.arange(5) % 2, 2)), x) < 1e-3
        errors = check_gradients(lambda: ops.mean(ops.square(ops.concat_cols([x, y]))), [x, y])
        assert max(errors.values()) < 1e-3

    def test_gradient_check_step_bounds(self, rng):
        """Steps outside [1e-5, 1e-2] are refused."""
        x = leaf(rng, (2,))
        with pytest.raises(ContractError):
            gradient_check(lambda t: ops.sum(t), x, step=0.1)
