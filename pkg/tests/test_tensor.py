import numpy as np
import pytest

from chromaboost.optim import AdamState, adam_step
from chromaboost.tensor import (
    NumericError,
    Tensor,
    add,
    avg_pool3,
    backward,
    conv2d,
    l1_loss,
    leaky_relu,
    relu,
    scale,
)

from oracles import (
    avg_pool3_ref,
    conv2d_ref,
    fd_gradient,
    fd_jacobian,
    l1_ref,
    leaky_relu_ref,
    max_rel_error,
)

GRAD_TOL = 1e-4


def t(arr, grad=False):
    return Tensor(np.asarray(arr, dtype=np.float32), requires_grad=grad)


class TestConvForward:
    def test_identity_kernel(self):
        x = t(np.arange(16).reshape(1, 1, 4, 4))
        out = conv2d(x, t([[[[1.0]]]]), t([0.0]), stride=1, padding=0)
        assert np.array_equal(out.data, x.data)

    def test_ones_kernel_covers_all_input(self):
        # every 3x3 window over a padded 2x2 all-ones input sums to 4
        out = conv2d(t(np.ones((1, 1, 2, 2))), t(np.ones((1, 1, 3, 3))), t([0.0]),
                     stride=1, padding=1)
        assert out.data == pytest.approx(np.full((1, 1, 2, 2), 4.0))

    def test_stride2_output_shape(self):
        out = conv2d(t(np.zeros((1, 1, 4, 4))), t(np.zeros((1, 1, 3, 3))), t([0.0]),
                     stride=2, padding=1)
        assert out.data.shape == (1, 1, 2, 2)

    def test_matches_reference(self, rng):
        x = rng.normal((2, 3, 6, 6)).astype(np.float32)
        w = rng.normal((4, 3, 3, 3), std=0.4).astype(np.float32)
        b = rng.normal((4,)).astype(np.float32)
        for stride, pad in ((1, 1), (2, 1), (1, 0)):
            got = conv2d(t(x), t(w), t(b), stride=stride, padding=pad).data
            want = conv2d_ref(x, w, b, stride, pad)
            # relative to the output scale: cancellation makes elementwise
            # relative error unboundable for any float32 implementation
            assert max_rel_error(got, want, floor=1e-3 * np.abs(want).max()) < 1e-5

    def test_channel_mismatch(self):
        with pytest.raises(ValueError, match="channels"):
            conv2d(t(np.zeros((1, 2, 4, 4))), t(np.zeros((1, 3, 3, 3))), t([0.0]))

    def test_odd_dims_stride2(self):
        with pytest.raises(ValueError, match="even"):
            conv2d(t(np.zeros((1, 1, 5, 5))), t(np.zeros((1, 1, 3, 3))), t([0.0]),
                   stride=2, padding=1)

    def test_unsupported_kernel(self):
        with pytest.raises(ValueError, match="kernel"):
            conv2d(t(np.zeros((1, 1, 8, 8))), t(np.zeros((1, 1, 5, 5))), t([0.0]))


class TestPoolForward:
    def test_constant_input_edge_weights(self):
        out = avg_pool3(t(np.ones((1, 1, 4, 4)))).data[0, 0]
        assert out[0, 0] == pytest.approx(4 / 9)
        assert out[0, 1] == pytest.approx(6 / 9)
        assert out[1, 1] == pytest.approx(1.0)

    def test_impulse_response(self):
        x = np.zeros((1, 1, 5, 5), dtype=np.float32)
        x[0, 0, 2, 2] = 9.0
        out = avg_pool3(t(x)).data[0, 0]
        expected = np.zeros((5, 5))
        expected[1:4, 1:4] = 1.0
        assert out == pytest.approx(expected)

    def test_matches_reference(self, rng):
        x = rng.normal((1, 2, 6, 6)).astype(np.float32)
        got = avg_pool3(t(x)).data
        assert max_rel_error(got, avg_pool3_ref(x)) < 1e-5


class TestElementwise:
    def test_leaky_examples(self):
        out = leaky_relu(t([-1.0, 0.0, 2.0]), 0.1)
        assert out.data == pytest.approx([-0.1, 0.0, 2.0])

    def test_relu_examples(self):
        assert relu(t([-3.0, 5.0])).data == pytest.approx([0.0, 5.0])

    def test_leaky_gradient_at_negative_point(self):
        x = t([-2.0], grad=True)
        loss = l1_loss(leaky_relu(x, 0.1), t([-10.0]))
        backward(loss)
        # d/dx |0.1x + 10| = 0.1 on the negative side
        assert x.grad == pytest.approx([0.1])

    def test_slope_validation(self):
        with pytest.raises(ValueError):
            leaky_relu(t([1.0]), 1.5)

    def test_kink_subgradient_is_positive_side(self):
        x = t([0.0], grad=True)
        loss = l1_loss(relu(x), t([-5.0]))
        backward(loss)
        assert x.grad == pytest.approx([1.0])


class TestAddScale:
    def test_add_ones(self):
        out = add(t(np.ones((2, 2))), t(np.ones((2, 2))))
        assert out.data == pytest.approx(np.full((2, 2), 2.0))

    def test_add_shape_mismatch(self):
        with pytest.raises(ValueError):
            add(t(np.ones((2, 2))), t(np.ones((2, 3))))

    def test_scale_identity_and_zero(self):
        x = t(np.arange(4.0))
        assert np.array_equal(scale(x, t([1.0])).data, x.data)
        assert np.array_equal(scale(x, t([0.0])).data, np.zeros(4, dtype=np.float32))


class TestL1Loss:
    def test_equal_inputs(self):
        x = np.random.RandomState(0).rand(1, 1, 3, 3).astype(np.float32)
        assert float(l1_loss(t(x), t(x)).data) == 0.0

    def test_offset_by_one(self):
        x = np.random.RandomState(0).rand(1, 1, 3, 3).astype(np.float32)
        assert float(l1_loss(t(x + 1.0), t(x)).data) == pytest.approx(1.0, rel=1e-6)

    def test_matches_reference(self, rng):
        a = rng.normal((1, 1, 4, 4)).astype(np.float32)
        b = rng.normal((1, 1, 4, 4)).astype(np.float32)
        assert float(l1_loss(t(a), t(b)).data) == pytest.approx(l1_ref(a, b), rel=1e-6)

    def test_scalar_output(self):
        out = l1_loss(t(np.ones(4)), t(np.zeros(4)))
        assert out.data.shape == ()

    def test_target_with_grad_rejected(self):
        with pytest.raises(ValueError):
            l1_loss(t(np.ones(4)), t(np.zeros(4), grad=True))


class TestBackwardMechanics:
    def test_gate_gradient_hand_example(self):
        # loss = mean|beta * 1| over four ones, beta = 2 -> dloss/dbeta = 1
        x = t(np.ones((1, 1, 2, 2)))
        beta = t([2.0], grad=True)
        loss = l1_loss(scale(x, beta), t(np.zeros((1, 1, 2, 2))))
        backward(loss)
        assert beta.grad == pytest.approx([1.0])

    def test_gradients_accumulate_until_zeroed(self):
        x = t(np.ones((1, 1, 2, 2)))
        beta = t([2.0], grad=True)
        loss = l1_loss(scale(x, beta), t(np.zeros((1, 1, 2, 2))))
        backward(loss)
        backward(loss)
        assert beta.grad == pytest.approx([2.0])
        beta.zero_grad()
        backward(loss)
        assert beta.grad == pytest.approx([1.0])

    def test_non_scalar_loss_rejected(self):
        with pytest.raises(ValueError):
            backward(t(np.ones(3), grad=True))

    def test_scale_input_gradient(self):
        x = t([1.0, -2.0, 3.0], grad=True)
        beta = t([0.5])
        loss = l1_loss(scale(x, beta), t([10.0, 10.0, 10.0]))
        backward(loss)
        # every diff is negative: d/dx_i = -0.5/3
        assert x.grad == pytest.approx(np.full(3, -0.5 / 3), rel=1e-5)


def _engine_grad(build_loss, leaf_value):
    leaf = Tensor(np.asarray(leaf_value, dtype=np.float32), requires_grad=True)
    backward(build_loss(leaf))
    return leaf.grad.astype(np.float64)


def _check_op_gradient(rng, engine_op, shadow_op, shape, points=5, avoid_kink=0.0):
    """FD on a float64 shadow vs backward(), using a fixed-sign absolute
    loss whose target sits far from the output (no L1 kinks nearby)."""
    worst = 0.0
    for _ in range(points):
        x0 = rng.normal(shape).astype(np.float32)
        if avoid_kink:
            x0 = x0 + np.sign(x0).astype(np.float32) * np.float32(avoid_kink)
        base = shadow_op(x0.astype(np.float64))
        offset = np.where(rng.uniform(base.shape) < 0.5, 10.0, -10.0)
        target64 = base - offset

        def loss64(xv):
            return float(np.mean(np.abs(shadow_op(xv) - target64)))

        analytic = _engine_grad(
            lambda leaf: l1_loss(engine_op(leaf), Tensor(target64.astype(np.float32))), x0)
        numeric = fd_gradient(loss64, x0)
        worst = max(worst, max_rel_error(analytic, numeric))
    return worst


class TestGradientChecks:
    """Central finite differences on float64 shadows, 5 random points per op."""

    def test_conv2d_wrt_input(self, rng):
        w = rng.normal((3, 2, 3, 3), std=0.4).astype(np.float32)
        b = rng.normal((3,)).astype(np.float32)
        for stride in (1, 2):
            err = _check_op_gradient(
                rng,
                lambda leaf: conv2d(leaf, Tensor(w), Tensor(b), stride=stride, padding=1),
                lambda xv: conv2d_ref(xv, w, b, stride, 1),
                (1, 2, 4, 4))
            assert err < GRAD_TOL

    def test_conv2d_wrt_weight(self, rng):
        x = rng.normal((1, 2, 4, 4)).astype(np.float32)
        b = rng.normal((3,)).astype(np.float32)
        err = _check_op_gradient(
            rng,
            lambda leaf: conv2d(Tensor(x), leaf, Tensor(b), stride=1, padding=1),
            lambda wv: conv2d_ref(x, wv, b, 1, 1),
            (3, 2, 3, 3))
        assert err < GRAD_TOL

    def test_conv2d_wrt_bias(self, rng):
        x = rng.normal((1, 2, 4, 4)).astype(np.float32)
        w = rng.normal((3, 2, 3, 3), std=0.4).astype(np.float32)
        err = _check_op_gradient(
            rng,
            lambda leaf: conv2d(Tensor(x), Tensor(w), leaf, stride=1, padding=1),
            lambda bv: conv2d_ref(x, w, bv, 1, 1),
            (3,))
        assert err < GRAD_TOL

    def test_conv2d_1x1_wrt_input(self, rng):
        w = rng.normal((3, 2, 1, 1)).astype(np.float32)
        b = rng.normal((3,)).astype(np.float32)
        err = _check_op_gradient(
            rng,
            lambda leaf: conv2d(leaf, Tensor(w), Tensor(b), stride=1, padding=0),
            lambda xv: conv2d_ref(xv, w, b, 1, 0),
            (1, 2, 4, 4))
        assert err < GRAD_TOL

    def test_avg_pool3(self, rng):
        err = _check_op_gradient(rng, avg_pool3, avg_pool3_ref, (1, 2, 5, 5))
        assert err < GRAD_TOL

    def test_leaky_relu(self, rng):
        err = _check_op_gradient(
            rng,
            lambda leaf: leaky_relu(leaf, 0.1),
            lambda xv: leaky_relu_ref(xv, 0.1),
            (1, 1, 4, 4),
            avoid_kink=0.2)
        assert err < GRAD_TOL

    def test_relu(self, rng):
        err = _check_op_gradient(
            rng,
            lambda leaf: relu(leaf),
            lambda xv: np.maximum(xv, 0.0),
            (1, 1, 4, 4),
            avoid_kink=0.2)
        assert err < GRAD_TOL

    def test_add(self, rng):
        other = rng.normal((1, 1, 3, 3)).astype(np.float32)
        err = _check_op_gradient(
            rng,
            lambda leaf: add(leaf, Tensor(other)),
            lambda xv: xv + other,
            (1, 1, 3, 3))
        assert err < GRAD_TOL

    def test_scale_wrt_input_and_gate(self, rng):
        beta = np.float32(0.7)
        err = _check_op_gradient(
            rng,
            lambda leaf: scale(leaf, Tensor([beta])),
            lambda xv: beta * xv,
            (1, 1, 3, 3))
        assert err < GRAD_TOL
        x = rng.normal((1, 1, 3, 3)).astype(np.float32)
        err = _check_op_gradient(
            rng,
            lambda leaf: scale(Tensor(x), leaf),
            lambda bv: bv.reshape(()) * x,
            (1,))
        assert err < GRAD_TOL

    def test_l1_loss_wrt_pred(self, rng):
        # keep |pred - target| > 0.5 so FD never crosses the kink
        target = rng.normal((1, 1, 3, 3)).astype(np.float32)
        offset = np.where(rng.uniform(target.shape) < 0.5, 1.0, -1.0).astype(np.float32)
        x0 = target + offset

        analytic = _engine_grad(lambda leaf: l1_loss(leaf, Tensor(target)), x0)
        numeric = fd_gradient(lambda xv: l1_ref(xv, target), x0)
        assert max_rel_error(analytic, numeric) < GRAD_TOL


class TestChainInvariance:
    def test_composite_matches_jacobian_product(self, rng):
        # conv1x1 -> leaky -> l1 on an 8-element input; compare backward()
        # against the product of per-op dense FD Jacobians.
        x0 = rng.normal((1, 2, 2, 2)).astype(np.float32) + 0.3
        w = rng.normal((2, 2, 1, 1)).astype(np.float32)
        b = rng.normal((2,)).astype(np.float32)
        target = rng.normal((1, 2, 2, 2)).astype(np.float32) + 5.0

        def conv_f(xv):
            return conv2d_ref(xv.reshape(1, 2, 2, 2), w, b, 1, 0).ravel()

        y0 = conv_f(x0)
        j_conv = fd_jacobian(conv_f, x0, 8)
        j_leaky = fd_jacobian(lambda yv: leaky_relu_ref(yv, 0.1), y0, 8)
        z0 = leaky_relu_ref(y0, 0.1)
        j_l1 = fd_jacobian(lambda zv: np.array([l1_ref(zv.reshape(1, 2, 2, 2), target)]), z0, 1)
        chained = (j_l1 @ j_leaky @ j_conv).reshape(1, 2, 2, 2)

        analytic = _engine_grad(
            lambda leaf: l1_loss(
                leaky_relu(conv2d(leaf, Tensor(w), Tensor(b), 1, 0), 0.1), Tensor(target)),
            x0)
        assert max_rel_error(analytic, chained) < GRAD_TOL


class TestDeterminismAndFiniteness:
    def test_forward_and_update_bit_identical(self, rng):
        x = rng.normal((2, 2, 4, 4)).astype(np.float32)
        target = rng.normal((2, 3, 4, 4)).astype(np.float32)
        w0 = rng.normal((3, 2, 3, 3), std=0.3).astype(np.float32)

        def run():
            w = Tensor(w0.copy(), requires_grad=True)
            b = Tensor(np.zeros(3, dtype=np.float32), requires_grad=True)
            state = AdamState.for_params([w, b])
            for _ in range(3):
                loss = l1_loss(conv2d(Tensor(x), w, b, 1, 1), Tensor(target))
                w.zero_grad()
                b.zero_grad()
                backward(loss)
                adam_step([w, b], [w.grad, b.grad], state, lr=1e-2)
            return w.data.tobytes(), b.data.tobytes()

        assert run() == run()

    def test_constructor_rejects_nan(self):
        with pytest.raises(NumericError):
            Tensor(np.array([np.nan], dtype=np.float32))

    def test_overflowing_forward_raises(self):
        big = t(np.full((1, 1, 4, 4), 3e38))
        w = t(np.full((1, 1, 3, 3), 3e38))
        with pytest.raises(NumericError):
            conv2d(big, w, t([0.0]), stride=1, padding=1)
