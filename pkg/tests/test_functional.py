"""Forward behavior of the network ops against loop-based references."""

import numpy as np
import pytest

import oracles
from chirpnet.errors import (
    DegenerateInputError,
    NumericError,
    ParameterError,
    ShapeError,
)
from chirpnet.nn import functional as F
from chirpnet.nn.tensor import Tensor, parameter


class TestConv2d:
    def test_matches_loop_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            h, w = rng.integers(3, 9, size=2)
            cin, cout = rng.integers(1, 4, size=2)
            x = rng.standard_normal((h, w, cin))
            k = rng.standard_normal((cout, cin, 3, 3))
            b = rng.standard_normal(cout)
            got = F.conv2d(x, k, b).data
            want = oracles.naive_conv2d(x, k, b)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_1x1_matches_loop_reference(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((5, 7, 3))
        k = rng.standard_normal((2, 3, 1, 1))
        b = rng.standard_normal(2)
        np.testing.assert_allclose(
            F.conv2d(x, k, b).data, oracles.naive_conv2d(x, k, b), atol=1e-12
        )

    def test_same_padding_preserves_spatial_shape(self):
        x = np.zeros((6, 11, 2))
        k = np.zeros((4, 2, 3, 3))
        out = F.conv2d(x, k, np.zeros(4))
        assert out.shape == (6, 11, 4)

    def test_batch_and_single_agree(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((3, 5, 5, 2))
        k = rng.standard_normal((2, 2, 3, 3))
        b = rng.standard_normal(2)
        batched = F.conv2d(x, k, b).data
        for i in range(3):
            np.testing.assert_allclose(batched[i], F.conv2d(x[i], k, b).data)

    def test_rejects_even_or_large_kernels(self):
        x = np.zeros((4, 4, 1))
        for size in (2, 5):
            with pytest.raises(ParameterError):
                F.conv2d(x, np.zeros((1, 1, size, size)), np.zeros(1))

    def test_rejects_channel_mismatch(self):
        with pytest.raises(ShapeError):
            F.conv2d(np.zeros((4, 4, 2)), np.zeros((1, 3, 3, 3)), np.zeros(1))

    def test_rejects_empty_spatial_input(self):
        with pytest.raises(DegenerateInputError):
            F.conv2d(np.zeros((0, 4, 1)), np.zeros((1, 1, 3, 3)), np.zeros(1))


class TestPooling:
    def test_maxpool_matches_loop_reference(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            h, w = rng.integers(2, 10, size=2)
            c = int(rng.integers(1, 4))
            x = rng.standard_normal((h, w, c))
            np.testing.assert_array_equal(
                F.maxpool2(x).data, oracles.naive_maxpool2(x)
            )

    def test_odd_tail_dropped(self):
        x = np.arange(15.0).reshape(3, 5, 1)
        assert F.maxpool2(x).shape == (1, 2, 1)

    def test_rejects_input_below_window(self):
        with pytest.raises(DegenerateInputError):
            F.maxpool2(np.zeros((1, 4, 1)))

    def test_tie_routes_gradient_to_first_cell_scanned(self):
        """Equal values in one window: the earliest row-major cell wins."""
        x = parameter(np.zeros((2, 2, 1)), dtype=np.float64)
        F.tsum(F.maxpool2(x)).backward()
        np.testing.assert_array_equal(x.grad[:, :, 0], [[1.0, 0.0], [0.0, 0.0]])

    def test_gap_matches_loop_reference(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((7, 9, 5))
        np.testing.assert_allclose(
            F.global_avg_pool(x).data, oracles.naive_gap(x), atol=1e-12
        )

    def test_gap_output_independent_of_width(self):
        """Constant maps of any spatial extent pool to the same vector."""
        for w in (8, 50, 333):
            out = F.global_avg_pool(np.full((4, w, 3), 2.5)).data
            np.testing.assert_allclose(out, [2.5, 2.5, 2.5])


class TestActivations:
    def test_relu_clamps_negatives(self):
        out = F.relu(np.array([-1.0, 0.0, 2.0])).data
        np.testing.assert_array_equal(out, [0.0, 0.0, 2.0])

    def test_adaptive_with_unit_product_matches_plain_tanh(self):
        """n * a = 1 at the initial slope, so the map starts as tanh(x)."""
        x = np.linspace(-3, 3, 50)
        out = F.adaptive(x, np.asarray(0.1), n=10.0).data
        np.testing.assert_allclose(out, np.tanh(x), atol=1e-12)

    def test_adaptive_slope_steepens_the_map(self):
        x = np.array([0.5])
        shallow = F.adaptive(x, np.asarray(0.05), n=10.0).data
        steep = F.adaptive(x, np.asarray(0.3), n=10.0).data
        assert steep[0] > shallow[0]

    def test_adaptive_rejects_vector_slope(self):
        with pytest.raises(ShapeError):
            F.adaptive(np.zeros(3), np.zeros(2), n=10.0)

    def test_adaptive_rejects_bad_n_and_base(self):
        with pytest.raises(ParameterError):
            F.adaptive(np.zeros(3), np.asarray(0.1), n=0.0)
        with pytest.raises(ParameterError):
            F.adaptive(np.zeros(3), np.asarray(0.1), n=10.0, base="gelu")

    def test_activate_dispatch(self):
        x = np.array([-1.0, 1.0])
        np.testing.assert_array_equal(F.activate(x, "relu").data, [0.0, 1.0])
        np.testing.assert_allclose(F.activate(x, "tanh").data, np.tanh(x))
        with pytest.raises(ParameterError):
            F.activate(x, "adaptive")
        with pytest.raises(ParameterError):
            F.activate(x, "sigmoid")


class TestSoftmaxAndLoss:
    def test_softmax_matches_reference(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            v = rng.standard_normal(rng.integers(1, 20))
            np.testing.assert_allclose(
                F.softmax(v).data, oracles.naive_softmax(v), atol=1e-12
            )

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(6)
        out = F.softmax(rng.standard_normal((30, 17)) * 40).data
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)

    def test_softmax_survives_large_logits(self):
        out = F.softmax(np.array([1000.0, 1000.0, -1000.0])).data
        np.testing.assert_allclose(out, [0.5, 0.5, 0.0], atol=1e-12)

    def test_softmax_rejects_nonfinite(self):
        with pytest.raises(NumericError):
            F.softmax(np.array([np.nan, 1.0]))

    def test_softmax_invariant_to_constant_shift(self):
        rng = np.random.default_rng(7)
        v = rng.standard_normal(9)
        np.testing.assert_allclose(
            F.softmax(v).data, F.softmax(v + 123.4).data, atol=1e-12
        )

    def test_cross_entropy_value(self):
        probs = np.array([0.2, 0.5, 0.3])
        loss = F.cross_entropy(probs, 1)
        np.testing.assert_allclose(float(loss.data), -np.log(0.5), rtol=1e-12)

    def test_cross_entropy_clamps_zero_probability(self):
        loss = F.cross_entropy(np.array([0.0, 1.0]), 0)
        assert np.isfinite(loss.data)
        np.testing.assert_allclose(float(loss.data), -np.log(1e-12))

    def test_cross_entropy_target_range(self):
        with pytest.raises(IndexError):
            F.cross_entropy(np.array([1.0]), 1)

    def test_cross_entropy_mean_is_mean_of_singles(self):
        rng = np.random.default_rng(8)
        probs = F.softmax(rng.standard_normal((6, 4))).data
        targets = rng.integers(0, 4, size=6)
        singles = [float(F.cross_entropy(probs[i], targets[i]).data) for i in range(6)]
        got = float(F.cross_entropy_mean(probs, targets).data)
        np.testing.assert_allclose(got, np.mean(singles), rtol=1e-12)


class TestDropout:
    def test_eval_mode_is_identity(self):
        x = np.arange(12.0).reshape(3, 4)
        np.testing.assert_array_equal(
            F.dropout(x, 0.4, train_mode=False).data, x
        )

    def test_train_mode_scales_survivors(self):
        rng = np.random.default_rng(9)
        x = np.ones((100, 100))
        out = F.dropout(x, 0.4, train_mode=True, rng=rng).data
        survivors = out[out > 0]
        np.testing.assert_allclose(survivors, 1.0 / 0.6, rtol=1e-12)
        # survival count concentrates near 60%
        assert 0.55 < survivors.size / x.size < 0.65

    def test_train_mode_preserves_expectation(self):
        rng = np.random.default_rng(10)
        x = np.ones(200_000)
        out = F.dropout(x, 0.25, train_mode=True, rng=rng).data
        assert abs(out.mean() - 1.0) < 0.01

    def test_rate_validation(self):
        with pytest.raises(ParameterError):
            F.dropout(np.ones(3), 1.0, train_mode=True, rng=np.random.default_rng(0))
        with pytest.raises(ParameterError):
            F.dropout(np.ones(3), -0.1, train_mode=False)

    def test_train_mode_requires_rng(self):
        with pytest.raises(ParameterError):
            F.dropout(np.ones(3), 0.5, train_mode=True)


class TestDenseAndShape:
    def test_dense_affine_map(self):
        x = np.array([[1.0, 2.0]])
        w = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, 1.0]])
        b = np.array([0.5, 0.5, 0.5])
        np.testing.assert_allclose(F.dense(x, w, b).data, [[1.5, 2.5, 1.5]])

    def test_dense_rejects_feature_mismatch(self):
        with pytest.raises(ShapeError):
            F.dense(np.zeros((1, 3)), np.zeros((4, 2)), np.zeros(2))

    def test_flatten_round_trip(self):
        x = np.arange(24.0).reshape(2, 3, 4, 1)
        out = F.flatten(x).data
        assert out.shape == (2, 12)
        np.testing.assert_array_equal(out.reshape(x.shape), x)

    def test_slope_recovery_decreases_as_slopes_grow(self):
        small = float(F.slope_recovery([np.asarray(0.1)] * 3, n=10.0).data)
        large = float(F.slope_recovery([np.asarray(0.5)] * 3, n=10.0).data)
        assert large < small

    def test_slope_recovery_needs_slopes(self):
        with pytest.raises(ParameterError):
            F.slope_recovery([], n=10.0)
