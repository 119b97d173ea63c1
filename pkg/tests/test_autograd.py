import numpy as np
import pytest

from dctnet import autograd as ag
from dctnet import nn
from dctnet.errors import (AxisOutOfRange, MissingGradient, NonScalarLoss,
                           ShapeMismatch)

from gradcheck import FixedReadout, fd_gradcheck

SEEDS = range(5)


def t64(rng, *shape, requires_grad=True, shift=0.0):
    return ag.Tensor(rng.normal(size=shape) + shift, requires_grad=requires_grad)


class TestBackward:
    def test_sum_gives_ones(self):
        x = ag.Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        ag.backward(ag.tsum(x))
        assert np.array_equal(x.grad, np.ones((2, 3)))

    def test_quadratic_gives_2x(self):
        x = ag.Tensor(np.arange(5.0), requires_grad=True)
        ag.backward(ag.tsum(ag.mul(x, x)))
        assert np.allclose(x.grad, 2 * x.data)

    def test_diamond_graph_accumulates(self):
        x = ag.Tensor(np.ones(3), requires_grad=True)
        y = ag.add(x, x)
        ag.backward(ag.tsum(ag.mul(y, y)))
        # d/dx sum((2x)^2) = 8x
        assert np.allclose(x.grad, 8 * x.data)

    def test_non_scalar_loss_rejected(self):
        x = ag.Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(NonScalarLoss):
            ag.backward(ag.mul(x, x))

    def test_no_grad_suppresses_graph(self):
        x = ag.Tensor(np.ones(3), requires_grad=True)
        with ag.no_grad():
            y = ag.mul(x, x)
        assert y._backward is None and not y.requires_grad


class TestSgd:
    def test_zero_gradient_keeps_parameters(self):
        p = nn.Parameter(np.ones(4, dtype=np.float64))
        p.tensor.grad = np.zeros(4)
        nn.sgd_step([p], lr=0.1, momentum=0.9)
        assert np.array_equal(p.data, np.ones(4))

    def test_momentum_zero_is_plain_descent(self):
        p = nn.Parameter(np.full(3, 5.0))
        p.tensor.grad = np.full(3, 2.0)
        nn.sgd_step([p], lr=0.5, momentum=0.0)
        assert np.allclose(p.data, 5.0 - 0.5 * 2.0)

    def test_two_steps_unrolled_recurrence(self):
        # constant gradient g: v1 = g, v2 = 0.9 g + g -> total lr*g*(1+1.9)
        p = nn.Parameter(np.zeros(1))
        for _ in range(2):
            p.tensor.grad = np.array([3.0])
            nn.sgd_step([p], lr=0.1, momentum=0.9)
        assert np.allclose(p.data, -0.1 * 3.0 * (1 + 1.9))

    def test_missing_gradient(self):
        p = nn.Parameter(np.zeros(2))
        with pytest.raises(MissingGradient):
            nn.sgd_step([p], lr=0.1)

    def test_gradients_cleared_after_step(self):
        p = nn.Parameter(np.zeros(2))
        p.tensor.grad = np.ones(2)
        nn.sgd_step([p], lr=0.1)
        assert p.tensor.grad is None


class TestShapes:
    def test_conv_channel_mismatch(self):
        x = ag.Tensor(np.zeros((1, 3, 5, 5)))
        w = ag.Tensor(np.zeros((2, 4, 3, 3)))
        with pytest.raises(ShapeMismatch):
            nn.conv2d(x, w)

    def test_linear_mismatch(self):
        with pytest.raises(ShapeMismatch):
            nn.linear(ag.Tensor(np.zeros((2, 5))), ag.Tensor(np.zeros((3, 4))))

    def test_softmax_axis_range(self):
        with pytest.raises(AxisOutOfRange):
            ag.softmax(ag.Tensor(np.zeros((2, 3))), axis=2)

    def test_bn_param_length(self):
        x = ag.Tensor(np.zeros((1, 3, 2, 2)))
        with pytest.raises(ShapeMismatch):
            nn.batch_norm2d(x, ag.Tensor(np.ones(4)), ag.Tensor(np.zeros(4)),
                            np.zeros(4), np.ones(4), True)


class TestOpSemantics:
    def test_identity_convolution(self):
        x = ag.Tensor(np.random.default_rng(0).normal(size=(1, 1, 6, 6)))
        w = ag.Tensor(np.ones((1, 1, 1, 1)))
        out = nn.conv2d(x, w, stride=1)
        assert np.allclose(out.data, x.data)

    def test_box_sum_kernel(self):
        x = ag.Tensor(np.full((1, 1, 5, 5), 3.0))
        w = ag.Tensor(np.ones((1, 1, 3, 3)))
        out = nn.conv2d(x, w)
        assert out.shape == (1, 1, 3, 3)
        assert np.allclose(out.data, 27.0)

    def test_conv_matches_naive_loops(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(2, 3, 5, 5))
        w = rng.normal(size=(4, 3, 3, 3))
        b = rng.normal(size=4)
        out = nn.conv2d(ag.Tensor(x), ag.Tensor(w), ag.Tensor(b),
                        stride=2, padding=1).data
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        ref = np.zeros_like(out)
        for n in range(2):
            for f in range(4):
                for i in range(out.shape[2]):
                    for j in range(out.shape[3]):
                        acc = b[f]
                        for c in range(3):
                            for u in range(3):
                                for v in range(3):
                                    acc += xp[n, c, 2 * i + u, 2 * j + v] \
                                        * w[f, c, u, v]
                        ref[n, f, i, j] = acc
        assert np.abs(out - ref).max() < 1e-10

    def test_conv_linearity(self):
        rng = np.random.default_rng(2)
        w = ag.Tensor(rng.normal(size=(3, 2, 3, 3)))
        x = rng.normal(size=(1, 2, 6, 6))
        y = rng.normal(size=(1, 2, 6, 6))
        a, b = 1.7, -0.6
        combined = nn.conv2d(ag.Tensor(a * x + b * y), w, padding=1).data
        separate = a * nn.conv2d(ag.Tensor(x), w, padding=1).data \
            + b * nn.conv2d(ag.Tensor(y), w, padding=1).data
        assert np.abs(combined - separate).max() < 1e-9

    def test_softmax_uniform(self):
        out = ag.softmax(ag.Tensor(np.zeros((2, 5))), axis=1)
        assert np.allclose(out.data, 0.2)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(3)
        out = ag.softmax(ag.Tensor(rng.normal(size=(20, 11)) * 10), axis=1)
        assert np.abs(out.data.sum(axis=1) - 1).max() < 1e-12
        assert (out.data > 0).all() and (out.data < 1).all()

    def test_relu_disjoint_support(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=100)
        prod = ag.relu(ag.Tensor(-x)).data * ag.relu(ag.Tensor(x)).data
        assert (prod == 0).all()

    def test_cross_entropy_perfect_logits(self):
        logits = np.zeros((3, 4))
        labels = np.array([1, 2, 0])
        logits[np.arange(3), labels] = 1e4        # margin -> infinity
        loss = nn.cross_entropy(ag.Tensor(logits), labels)
        assert loss.data.item() < 1e-12

    def test_batch_norm_identity_on_normalized(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(8, 3, 4, 4))
        x = (x - x.mean(axis=(0, 2, 3), keepdims=True)) \
            / x.std(axis=(0, 2, 3), keepdims=True)
        out = nn.batch_norm2d(ag.Tensor(x), ag.Tensor(np.ones(3)),
                              ag.Tensor(np.zeros(3)), np.zeros(3), np.ones(3),
                              training=True)
        assert np.abs(out.data - x).max() < 1e-4   # eps-guarded variance

    def test_batch_norm_constant_channel_gives_beta(self):
        x = np.full((4, 2, 3, 3), 7.0)
        beta = np.array([1.5, -2.0])
        out = nn.batch_norm2d(ag.Tensor(x), ag.Tensor(np.ones(2)),
                              ag.Tensor(beta), np.zeros(2), np.ones(2),
                              training=True)
        assert np.allclose(out.data, beta[None, :, None, None])

    def test_batch_norm_running_stats(self):
        rng = np.random.default_rng(6)
        x = rng.normal(loc=3.0, size=(16, 2, 5, 5))
        rm, rv = np.zeros(2), np.ones(2)
        nn.batch_norm2d(ag.Tensor(x), ag.Tensor(np.ones(2)),
                        ag.Tensor(np.zeros(2)), rm, rv, training=True)
        mu = x.mean(axis=(0, 2, 3))
        assert np.allclose(rm, 0.1 * mu)
        # eval mode then uses the running buffers
        out = nn.batch_norm2d(ag.Tensor(x), ag.Tensor(np.ones(2)),
                              ag.Tensor(np.zeros(2)), rm, rv, training=False)
        expect = (x - rm[:, None, None]) / np.sqrt(rv[:, None, None] + 1e-5)
        assert np.abs(out.data - expect).max() < 1e-12

    def test_batch_norm_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(6, 3, 4, 4))
        g, b = rng.normal(size=3), rng.normal(size=3)
        out = nn.batch_norm2d(ag.Tensor(x), ag.Tensor(g), ag.Tensor(b),
                              np.zeros(3), np.ones(3), training=True)
        mu = x.mean(axis=(0, 2, 3), keepdims=True)
        var = x.var(axis=(0, 2, 3), keepdims=True)
        ref = (x - mu) / np.sqrt(var + 1e-5) * g[None, :, None, None] \
            + b[None, :, None, None]
        assert np.abs(out.data - ref).max() < 1e-10

    def test_max_pool_values(self):
        x = np.arange(16.0).reshape(1, 1, 4, 4)
        out = nn.max_pool2d(ag.Tensor(x), 2, stride=2)
        assert np.array_equal(out.data[0, 0], [[5, 7], [13, 15]])

    def test_global_avg_pool(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(2, 3, 4, 5))
        out = nn.global_avg_pool(ag.Tensor(x))
        assert np.allclose(out.data, x.mean(axis=(2, 3)))

    def test_forward_determinism(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(2, 3, 8, 8)).astype(np.float32)
        w = rng.normal(size=(4, 3, 3, 3)).astype(np.float32)
        a = nn.conv2d(ag.Tensor(x), ag.Tensor(w), padding=1).data
        b = nn.conv2d(ag.Tensor(x), ag.Tensor(w), padding=1).data
        assert np.array_equal(a, b)


@pytest.mark.parametrize("seed", SEEDS)
class TestGradients:
    def test_conv2d(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 2, 3, 5, 4)
        w = t64(rng, 4, 3, 3, 3)
        b = t64(rng, 4)
        stride = 1 + seed % 2
        fd_gradcheck(lambda: readout(nn.conv2d(x, w, b, stride=stride, padding=1)), [x, w, b])

    def test_batch_norm_train(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 3, 2, 4, 3)
        g = t64(rng, 2, shift=1.0)
        b = t64(rng, 2)
        rm, rv = np.zeros(2), np.ones(2)
        fd_gradcheck(lambda: readout(nn.batch_norm2d(x, g, b, rm, rv, training=True)), [x, g, b])

    def test_batch_norm_eval(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 3, 2, 4, 3)
        g = t64(rng, 2, shift=1.0)
        b = t64(rng, 2)
        rm, rv = rng.normal(size=2), np.abs(rng.normal(size=2)) + 0.5
        fd_gradcheck(lambda: readout(nn.batch_norm2d(x, g, b, rm, rv, training=False)), [x, g, b])

    def test_relu(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 4, 7)
        x.data[np.abs(x.data) < 1e-3] += 0.1     # keep clear of the kink
        fd_gradcheck(lambda: readout(ag.relu(x)), [x])

    def test_softmax(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 3, 6)
        fd_gradcheck(lambda: readout(ag.softmax(x, axis=1)), [x])

    def test_add_broadcast(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 2, 3, 4)
        y = t64(rng, 3, 1)
        fd_gradcheck(lambda: readout(ag.add(x, y)), [x, y])

    def test_linear(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 3, 5)
        w = t64(rng, 4, 5)
        b = t64(rng, 4)
        fd_gradcheck(lambda: readout(nn.linear(x, w, b)), [x, w, b])

    def test_max_pool(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 2, 2, 6, 6)
        fd_gradcheck(lambda: readout(nn.max_pool2d(x, 3, stride=2, padding=1)), [x])

    def test_global_avg_pool(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 2, 3, 4, 4)
        fd_gradcheck(lambda: readout(nn.global_avg_pool(x)), [x])

    def test_cross_entropy(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 4, 5)
        labels = rng.integers(0, 5, size=4)
        fd_gradcheck(lambda: nn.cross_entropy(x, labels), [x])

    def test_matmul(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 3, 4)
        y = t64(rng, 4, 2)
        fd_gradcheck(lambda: readout(ag.matmul(x, y)), [x, y])

    def test_take_channels(self, seed):
        rng = np.random.default_rng(seed)
        readout = FixedReadout(rng)
        x = t64(rng, 6, 3, 3)
        fd_gradcheck(lambda: readout(ag.take_channels(x, [0, 2, 5], axis=-3)), [x])
