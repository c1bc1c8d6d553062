import numpy as np
import pytest

from errors import ConfigError, GraphConsumedError, NumericError, ShapeError
from fibrosis.tensor_core import (
    Adam,
    AdamState,
    Tensor,
    adam_step,
    bce_loss,
    conv2d,
    conv_transpose2d,
    dense,
    gradcheck,
    l1_loss,
    leaky_relu,
    no_grad,
    reshape,
    sigmoid,
    tanh,
)

SEEDS = range(20)


def _weighted(out, weights):
    """Scalar reduction of a non-scalar output"""
    return (out * weights).sum()


def naive_conv2d(x, k, b, stride, padding):
    n, c_in, h, w = x.shape
    c_out, _, kh, kw = k.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((n, c_out, h_out, w_out))
    for i in range(n):
        for o in range(c_out):
            for y in range(h_out):
                for x_ in range(w_out):
                    window = xp[i, :, y * stride:y * stride + kh, x_ * stride:x_ * stride + kw]
                    out[i, o, y, x_] = np.sum(window * k[o]) + b[o]
    return out


# =============================================================================
# Gradient checks
# =============================================================================

class TestGradients:

    @pytest.mark.parametrize("seed", SEEDS)
    def test_conv2d(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(2, 2, 6, 6))
        k = rng.normal(size=(3, 2, 4, 4))
        b = rng.normal(size=3)
        w = rng.normal(size=(2, 3, 3, 3))
        ok, worst = gradcheck(lambda x, k, b: _weighted(conv2d(x, k, b, 2, 1), w), [x, k, b])
        assert ok, worst

    @pytest.mark.parametrize("seed", SEEDS)
    def test_conv_transpose2d(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(2, 3, 3, 3))
        k = rng.normal(size=(3, 2, 4, 4))
        b = rng.normal(size=2)
        w = rng.normal(size=(2, 2, 6, 6))
        ok, worst = gradcheck(lambda x, k, b: _weighted(conv_transpose2d(x, k, b, 2, 1), w), [x, k, b])
        assert ok, worst

    @pytest.mark.parametrize("seed", SEEDS)
    def test_dense(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(4, 5))
        weight = rng.normal(size=(3, 5))
        bias = rng.normal(size=3)
        w = rng.normal(size=(4, 3))
        ok, worst = gradcheck(lambda x, a, b: _weighted(dense(x, a, b), w), [x, weight, bias])
        assert ok, worst

    @pytest.mark.parametrize("seed", SEEDS)
    def test_activations(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(3, 4))
        w = rng.normal(size=(3, 4))
        for fn in (lambda t: leaky_relu(t, 0.2), tanh, sigmoid):
            ok, worst = gradcheck(lambda t: _weighted(fn(t), w), [x])
            assert ok, worst

    @pytest.mark.parametrize("seed", SEEDS)
    def test_losses(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(2, 3))
        b = rng.normal(size=(2, 3))
        ok, worst = gradcheck(l1_loss, [a, b])
        assert ok, worst

        pred = rng.uniform(0.1, 0.9, size=(5, 1))
        target = (rng.uniform(size=(5, 1)) > 0.5).astype(float)
        ok, worst = gradcheck(lambda p: bce_loss(p, target), [pred])
        assert ok, worst

    @pytest.mark.parametrize("seed", SEEDS)
    def test_elementwise_and_reductions(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(3, 4))
        b = rng.normal(size=(4,))

        def fn(a, b):
            h = (a * b - b + a).abs()
            return reshape(h, (4, 3)).mean(axis=0).sum()

        ok, worst = gradcheck(fn, [a, b])
        assert ok, worst

    def test_chained_generator_like_stack(self, rng):
        z = rng.normal(size=(2, 3))
        weight = rng.normal(size=(2 * 2 * 2, 3)) * 0.5
        bias = rng.normal(size=8) * 0.1
        k = rng.normal(size=(2, 1, 4, 4)) * 0.5
        kb = rng.normal(size=1) * 0.1

        def fn(z, weight, bias, k, kb):
            h = leaky_relu(dense(z, weight, bias))
            h = reshape(h, (2, 2, 2, 2))
            return tanh(conv_transpose2d(h, k, kb, 2, 1)).mean()

        ok, worst = gradcheck(fn, [z, weight, bias, k, kb])
        assert ok, worst


# =============================================================================
# Forward semantics
# =============================================================================

class TestWorkedExamples:

    def test_conv2d_diagonal_kernel(self):
        x = np.arange(1.0, 10.0).reshape(1, 3, 3)
        k = np.array([[[[1.0, 0.0], [0.0, 1.0]]]])
        out = conv2d(x, k, np.zeros(1))
        np.testing.assert_array_equal(out.data, [[[6.0, 8.0], [12.0, 14.0]]])

    def test_conv2d_zero_input_gives_bias(self, rng):
        out = conv2d(np.zeros((2, 5, 5)), rng.normal(size=(3, 2, 3, 3)), np.array([1.0, -2.0, 0.5]))
        np.testing.assert_array_equal(out.data[:, 0, 0], [1.0, -2.0, 0.5])
        assert np.all(out.data == out.data[:, :1, :1])

    def test_conv_transpose_scatter(self):
        out = conv_transpose2d(np.full((1, 1, 1), 2.0), np.array([[[[1.0, 2.0], [3.0, 4.0]]]]), np.zeros(1))
        np.testing.assert_array_equal(out.data, [[[2.0, 4.0], [6.0, 8.0]]])

    def test_dense_matvec(self):
        out = dense(np.array([1.0, 2.0]), np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2))
        np.testing.assert_array_equal(out.data, [3.0, 2.0])

    def test_activations_at_known_points(self):
        assert leaky_relu(np.array(-1.0), 0.2).item() == pytest.approx(-0.2)
        assert tanh(np.array(0.0)).item() == 0.0
        assert sigmoid(np.array(0.0)).item() == 0.5

    def test_l1(self):
        assert l1_loss(np.array([1.0, 3.0]), np.array([2.0, 5.0])).item() == 1.5
        assert l1_loss(np.array([0.0]), np.array([-0.7])).item() == pytest.approx(0.7)

    @pytest.mark.parametrize("pred,target,expected", [
        (0.5, 1.0, np.log(2.0)),
        (0.9, 0.0, -np.log(0.1)),
        (1.0 - 1e-12, 1.0, 1e-7),
    ])
    def test_bce(self, pred, target, expected):
        loss = bce_loss(np.array([pred]), np.array([target])).item()
        assert loss == pytest.approx(expected, rel=1e-4, abs=1e-6)

    def test_zero_gradient_leaves_adam_params(self):
        (new,), _ = adam_step([np.array([0.4, -1.0])], [np.zeros(2)], AdamState())
        np.testing.assert_array_equal(new, [0.4, -1.0])

    def test_unused_parameter_gets_zero_grad(self):
        a = Tensor(np.ones(2), requires_grad=True)
        b = Tensor(np.ones(3), requires_grad=True)
        (a * 2.0 + b.sum() * 0.0).sum().backward()
        np.testing.assert_array_equal(b.grad, np.zeros(3))


class TestLayers:

    @pytest.mark.parametrize("stride,padding", [(1, 0), (2, 1), (1, 2)])
    def test_conv2d_matches_loop(self, rng, stride, padding):
        x = rng.normal(size=(2, 3, 7, 7))
        k = rng.normal(size=(4, 3, 3, 3))
        b = rng.normal(size=4)
        out = conv2d(x, k, b, stride, padding)
        np.testing.assert_allclose(out.data, naive_conv2d(x, k, b, stride, padding), rtol=1e-12, atol=1e-12)

    def test_conv2d_unbatched_form(self, rng):
        x = rng.normal(size=(3, 8, 8))
        k = rng.normal(size=(2, 3, 4, 4))
        b = np.zeros(2)
        out = conv2d(x, k, b, 2, 1)
        assert out.shape == (2, 4, 4)
        np.testing.assert_allclose(out.data, conv2d(x[None], k, b, 2, 1).data[0])

    def test_conv_transpose_is_adjoint_of_conv(self, rng):
        x = rng.normal(size=(1, 3, 8, 8))
        k = rng.normal(size=(5, 3, 4, 4))
        y = rng.normal(size=(1, 5, 4, 4))
        lhs = np.sum(conv2d(x, k, np.zeros(5), 2, 1).data * y)
        rhs = np.sum(x * conv_transpose2d(y, k, np.zeros(3), 2, 1).data)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_conv_transpose_doubles_extent(self, rng):
        x = rng.normal(size=(2, 4, 6, 6))
        out = conv_transpose2d(x, rng.normal(size=(4, 3, 4, 4)), np.zeros(3), 2, 1)
        assert out.shape == (2, 3, 12, 12)

    def test_channel_mismatch(self, rng):
        with pytest.raises(ShapeError):
            conv2d(rng.normal(size=(1, 2, 5, 5)), rng.normal(size=(3, 4, 3, 3)), np.zeros(3))

    def test_dense_single_vector(self):
        out = dense(np.array([1.0, 2.0]), np.array([[1.0, 0.0], [1.0, 1.0]]), np.array([0.5, -1.0]))
        np.testing.assert_array_equal(out.data, [1.5, 2.0])

    def test_activation_rejects_non_finite(self):
        with pytest.raises(NumericError):
            tanh(np.array([0.0, np.nan]))

    def test_bce_clamps_saturated_predictions(self):
        pred = Tensor(np.array([0.0, 1.0]), requires_grad=True)
        loss = bce_loss(pred, np.array([1.0, 0.0]))
        assert np.isfinite(loss.item())
        assert loss.item() == pytest.approx(-np.log(1e-7))
        loss.backward()
        np.testing.assert_array_equal(pred.grad, [0.0, 0.0])


# =============================================================================
# Graph bookkeeping
# =============================================================================

class TestBackward:

    def test_shared_subexpression_accumulates(self):
        x = Tensor(np.array([2.0, -3.0]), requires_grad=True)
        y = x * x
        (y + y).sum().backward()
        np.testing.assert_array_equal(x.grad, [8.0, -12.0])

    def test_second_backward_raises(self):
        x = Tensor(np.ones(3), requires_grad=True)
        loss = (x * 2.0).sum()
        loss.backward()
        with pytest.raises(GraphConsumedError):
            loss.backward()

    def test_non_scalar_loss(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ShapeError):
            (x * 2.0).backward()

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with no_grad():
            y = (x * 2.0).sum()
        assert not y.requires_grad
        y.backward()
        assert x.grad is None

    def test_constants_get_no_grad(self):
        x = Tensor(np.ones(2), requires_grad=True)
        c = Tensor(np.full(2, 3.0))
        (x * c).sum().backward()
        assert c.grad is None
        np.testing.assert_array_equal(x.grad, [3.0, 3.0])


# =============================================================================
# Adam
# =============================================================================

class TestAdam:

    def test_first_step_is_sign_scaled(self):
        p = np.array([1.0, -2.0, 0.5])
        g = np.array([0.3, -4.0, 1e-3])
        (new,), state = adam_step([p], [g], AdamState(lr=0.1))
        np.testing.assert_allclose(new, p - 0.1 * g / (np.abs(g) + 1e-8), rtol=1e-12)
        assert state.t == 1

    @pytest.mark.parametrize("grad", [1e-6, -0.3, 50.0])
    def test_constant_gradient_steps_bounded_by_lr(self, grad):
        lr = 0.01
        p = np.array([0.5])
        state = AdamState(lr=lr)
        for _ in range(2):
            (new,), state = adam_step([p], [np.array([grad])], state)
            step = abs(new[0] - p[0])
            assert step <= lr * (1 + 1e-12)
            assert step == pytest.approx(lr * abs(grad) / (abs(grad) + 1e-8), rel=1e-9)
            assert np.sign(p[0] - new[0]) == np.sign(grad)
            p = new

    def test_inputs_untouched(self):
        p = np.array([1.0])
        state = AdamState(lr=0.1)
        adam_step([p], [np.array([1.0])], state)
        assert p[0] == 1.0
        assert state.t == 0 and state.m == []

    def test_missing_grad_counts_as_zero(self):
        (new,), _ = adam_step([np.array([1.0, 2.0])], [None], AdamState())
        np.testing.assert_array_equal(new, [1.0, 2.0])

    def test_minimizes_quadratic(self):
        target = np.array([3.0, -1.0])
        p = Tensor(np.zeros(2), requires_grad=True)
        opt = Adam([p], lr=0.1)
        for _ in range(500):
            opt.zero_grad()
            ((p - target) * (p - target)).sum().backward()
            opt.step()
        np.testing.assert_allclose(p.data, target, atol=1e-2)

    @pytest.mark.parametrize("kwargs", [{"lr": 0.0}, {"beta1": 1.0}, {"eps": -1.0}])
    def test_invalid_hyperparameters(self, kwargs):
        with pytest.raises(ConfigError):
            AdamState(**kwargs)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            adam_step([np.zeros(2)], [np.zeros(3)], AdamState())
