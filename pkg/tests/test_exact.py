import numpy as np
import pytest

from enlca.enla import normalize_and_scale
from enlca.exact import (
    attention_row_entropies,
    correlation_map,
    exact_attention,
    shannon_entropy,
)
from enlca.matrices import RngSpec, ShapeError, gaussian_sample

from oracles import columns, naive_attention


def seeded_instance(seed, c=3, c_out=3, n=4):
    base = RngSpec(seed)
    q = gaussian_sample(base.stream(1), c, n)
    k = gaussian_sample(base.stream(2), c, n)
    v = gaussian_sample(base.stream(3), c_out, n)
    return q, k, v


def test_single_position_passes_values_through():
    q, k, v = seeded_instance(0, n=1)
    out = exact_attention(q, k, v, keep_weights=True)
    assert np.array_equal(out.y, v)
    assert np.array_equal(out.weights, [[1.0]])


def test_zero_features_give_uniform_mixing():
    v = gaussian_sample(RngSpec(1), 5, 9)
    out = exact_attention(np.zeros((4, 9)), np.zeros((4, 9)), v)
    expected = np.repeat(v.mean(axis=1, keepdims=True), 9, axis=1)
    assert np.abs(out.y - expected).max() < 1e-12


def test_against_scalar_oracle():
    q, k, v = seeded_instance(7)
    expected = np.array(naive_attention(columns(q), columns(k), columns(v))).T
    out = exact_attention(q, k, v)
    assert np.abs(out.y - expected).max() < 1e-12


def test_rows_are_stochastic():
    q, k, v = seeded_instance(3, c=4, c_out=2, n=12)
    weights = exact_attention(q, k, v, keep_weights=True).weights
    assert np.abs(weights.sum(axis=1) - 1.0).max() < 1e-9
    assert (weights >= 0).all() and (weights <= 1).all()


def test_key_value_permutation_invariance():
    q, k, v = seeded_instance(11, n=10)
    perm = RngSpec(5).generator().permutation(10)
    base = exact_attention(q, k, v).y
    permuted = exact_attention(q, k[:, perm], v[:, perm]).y
    assert np.abs(base - permuted).max() < 1e-12


def test_query_permutation_equivariance():
    q, k, v = seeded_instance(13, n=10)
    perm = RngSpec(6).generator().permutation(10)
    base = exact_attention(q, k, v).y
    permuted = exact_attention(q[:, perm], k, v).y
    assert np.abs(base[:, perm] - permuted).max() < 1e-12


def test_key_shift_invariance():
    q, k, v = seeded_instance(17, n=8)
    offset = gaussian_sample(RngSpec(8), 3, 1)
    shifted = exact_attention(q, k + offset, v).y
    assert np.abs(exact_attention(q, k, v).y - shifted).max() < 1e-9


def test_chunking_does_not_change_results():
    q, k, v = seeded_instance(19, c=5, c_out=4, n=37)
    full = exact_attention(q, k, v, chunk_size=37).y
    tiny = exact_attention(q, k, v, chunk_size=3).y
    assert np.abs(full - tiny).max() < 1e-12


def test_repeat_calls_are_bitwise_identical():
    q, k, v = seeded_instance(23, n=20)
    assert np.array_equal(exact_attention(q, k, v).y, exact_attention(q, k, v).y)


def test_shape_validation():
    with pytest.raises(ShapeError):
        exact_attention(np.zeros((3, 4)), np.zeros((2, 4)), np.zeros((3, 4)))
    with pytest.raises(ShapeError):
        exact_attention(np.zeros((3, 4)), np.zeros((3, 4)), np.zeros((3, 5)))


class TestCorrelationMap:
    def test_single_position(self):
        out = correlation_map([[1.0]], [[2.0]], 0)
        assert np.array_equal(out, [1.0])

    def test_zero_features_uniform(self):
        out = correlation_map(np.zeros((3, 5)), np.zeros((3, 5)), 2)
        assert np.abs(out - 0.2).max() < 1e-15

    def test_amplification_raises_peak(self):
        base = RngSpec(31)
        theta = gaussian_sample(base.stream(1), 6, 25)
        delta = gaussian_sample(base.stream(2), 6, 25)
        q1, k1 = normalize_and_scale(theta, delta, 1.0)
        q6, k6 = normalize_and_scale(theta, delta, 6.0)
        sharp = correlation_map(q6, k6, 4)
        flat = correlation_map(q1, k1, 4)
        assert sharp.max() >= flat.max()

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            correlation_map(np.zeros((2, 3)), np.zeros((2, 3)), 3)


class TestEntropy:
    def test_uniform_is_log_n(self):
        assert abs(shannon_entropy(np.full(8, 0.125)) - np.log(8)) < 1e-12

    def test_point_mass_is_zero(self):
        assert shannon_entropy([0.0, 1.0, 0.0]) == 0.0

    def test_row_entropies_match_weights(self):
        q, k, v = seeded_instance(37, c=4, c_out=2, n=15)
        weights = exact_attention(q, k, v, keep_weights=True).weights
        expected = np.array([shannon_entropy(row) for row in weights])
        assert np.abs(attention_row_entropies(q, k) - expected).max() < 1e-12
