import numpy as np
import pytest

from evtrack.errors import ShapeMismatch
from evtrack.npu.array import (ARRAY_DIM, MacReport, PeArray,
                               conv2d_output_stationary, fc_output_stationary,
                               pool2d, relu_requantize)
from oracles import nested_loop_conv, nested_loop_fc


def random_layer(rng):
    c = int(rng.integers(1, 6))
    o = int(rng.integers(1, 8))
    k = int(rng.integers(1, 4))
    stride = int(rng.integers(1, 3))
    pad = int(rng.integers(0, k))
    h = int(rng.integers(k, 12))
    w = int(rng.integers(k, 12))
    act = rng.integers(-128, 128, (c, h, w)).astype(np.int8)
    # sprinkle zeros so skipping is exercised
    act[rng.random(act.shape) < 0.3] = 0
    weights = rng.integers(-128, 128, (o, c, k, k)).astype(np.int8)
    weights[rng.random(weights.shape) < 0.3] = 0
    bias = rng.integers(-1000, 1000, o).astype(np.int32)
    return act, weights, bias, stride, pad


class TestConv:
    def test_zero_activations_give_bias(self):
        act = np.zeros((2, 6, 6), dtype=np.int8)
        weights = np.ones((3, 2, 3, 3), dtype=np.int8)
        bias = np.array([5, -7, 9], dtype=np.int32)
        out, report = conv2d_output_stationary(act, weights, bias, pad=1)
        assert (out[0] == 5).all() and (out[1] == -7).all() and (out[2] == 9).all()
        assert report.executed == 0
        assert report.skipped == report.dense

    def test_identity_1x1_kernel(self):
        rng = np.random.default_rng(0)
        act = rng.integers(-50, 50, (1, 8, 8)).astype(np.int8)
        act[rng.random(act.shape) < 0.4] = 0
        weights = np.ones((1, 1, 1, 1), dtype=np.int8)
        out, report = conv2d_output_stationary(act, weights)
        assert np.array_equal(out[0], act[0].astype(np.int32))
        assert report.executed == int(np.count_nonzero(act))

    def test_bit_exact_vs_nested_loop_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            act, weights, bias, stride, pad = random_layer(rng)
            out, report = conv2d_output_stationary(act, weights, bias,
                                                   stride=stride, pad=pad)
            expected, executed = nested_loop_conv(act, weights, bias,
                                                  stride=stride, pad=pad)
            assert np.array_equal(out, expected.astype(np.int32))
            assert report.executed == executed
            assert report.dense == report.executed + report.skipped
            assert report.dense == out.size * weights.shape[1] * weights.shape[2] ** 2

    def test_per_pe_counters_account_for_all_skips(self):
        rng = np.random.default_rng(3)
        act, weights, bias, stride, pad = random_layer(rng)
        pe = PeArray()
        out, report = conv2d_output_stationary(act, weights, bias, stride=stride,
                                               pad=pad, pe_array=pe)
        assert int(report.pe_skip_counts.sum()) == report.skipped
        assert report.pe_skip_counts.shape == (ARRAY_DIM, ARRAY_DIM)

    def test_wide_output_tiles_onto_array(self):
        # 40x40 output spans multiple 16x16 tiles
        act = np.ones((1, 40, 40), dtype=np.int8)
        weights = np.ones((1, 1, 1, 1), dtype=np.int8)
        out, report = conv2d_output_stationary(act, weights)
        assert out.shape == (1, 40, 40)
        assert (out == 1).all()
        assert report.executed == 1600

    def test_shape_mismatch(self):
        act = np.zeros((2, 6, 6), dtype=np.int8)
        with pytest.raises(ShapeMismatch):
            conv2d_output_stationary(act, np.zeros((1, 3, 3, 3), dtype=np.int8))
        with pytest.raises(ShapeMismatch):
            conv2d_output_stationary(act, np.zeros((1, 2, 3, 3), dtype=np.int8),
                                     bias=np.zeros(2, dtype=np.int32))
        with pytest.raises(ShapeMismatch):
            conv2d_output_stationary(act, np.zeros((1, 2, 7, 7), dtype=np.int8))


class TestFc:
    def test_bit_exact_vs_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(1, 400))
            o = int(rng.integers(1, 300))
            act = rng.integers(-128, 128, n).astype(np.int8)
            act[rng.random(n) < 0.3] = 0
            weights = rng.integers(-128, 128, (o, n)).astype(np.int8)
            weights[rng.random((o, n)) < 0.3] = 0
            bias = rng.integers(-500, 500, o).astype(np.int32)
            out, report = fc_output_stationary(act, weights, bias)
            expected, executed = nested_loop_fc(act, weights, bias)
            assert np.array_equal(out, expected.astype(np.int32))
            assert report.executed == executed
            assert report.dense == o * n

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            fc_output_stationary(np.zeros(10, dtype=np.int8),
                                 np.zeros((2, 11), dtype=np.int8))


class TestPool:
    def test_max_pool(self):
        act = np.array([[[1, 2, 3, 4],
                         [5, 6, 7, 8],
                         [9, 10, 11, 12],
                         [13, 14, 15, 16]]], dtype=np.int8)
        out = pool2d(act, window=2, stride=2, mode="max")
        assert np.array_equal(out, np.array([[[6, 8], [14, 16]]], dtype=np.int8))

    def test_avg_pool_floor(self):
        act = np.array([[[1, 2], [3, 5]]], dtype=np.int8)
        out = pool2d(act, window=2, stride=2, mode="avg")
        assert out[0, 0, 0] == (1 + 2 + 3 + 5) // 4

    def test_window_too_large(self):
        with pytest.raises(ShapeMismatch):
            pool2d(np.zeros((1, 2, 2), dtype=np.int8), window=3, stride=1)


class TestRequantize:
    def test_relu_clamps_negative(self):
        acc = np.array([-100, 0, 100], dtype=np.int32)
        out = relu_requantize(acc, scale=1.0, relu=True)
        assert np.array_equal(out, np.array([0, 0, 100], dtype=np.int8))

    def test_saturates_to_int8(self):
        acc = np.array([100_000, -100_000], dtype=np.int32)
        out = relu_requantize(acc, scale=1.0, relu=False)
        assert np.array_equal(out, np.array([127, -128], dtype=np.int8))


def test_mac_report_merge():
    a = MacReport(dense=10, executed=4)
    b = MacReport(dense=6, executed=6)
    merged = a.merge(b)
    assert merged.dense == 16 and merged.executed == 10 and merged.skipped == 6
