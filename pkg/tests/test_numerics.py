import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scenefuse.errors import ConfigError, ShapeError, UsageError
from scenefuse.numerics import (
    LinearMap,
    MultiHeadParams,
    Tape,
    check_gradients,
    cross_attention,
    cross_entropy,
    finite_diff,
    layer_norm,
    linear,
    matmul,
    mul,
    multi_head_cross_attention,
    relative_error,
    softmax_rows,
    total,
)

import oracles


def matrices(rows=st.integers(1, 6), cols=st.integers(1, 6), lo=-1e4, hi=1e4):
    return st.tuples(rows, cols).flatmap(
        lambda s: arrays(np.float64, s, elements=st.floats(lo, hi, allow_nan=False))
    )


# --- matmul ----------------------------------------------------------------

def test_matmul_identity():
    m = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(matmul(np.eye(3), m), m)


def test_matmul_small_against_scalar_loop():
    a, b = [[1.0, 2.0], [3.0, 4.0]], [[5.0], [6.0]]
    expected = oracles.matmul(a, b)
    assert expected == [[17.0], [39.0]]
    np.testing.assert_array_equal(matmul(np.array(a), np.array(b)), expected)


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


# --- softmax ---------------------------------------------------------------

@pytest.mark.parametrize("row, expected", [
    ([0.0, 0.0, 0.0], [1 / 3, 1 / 3, 1 / 3]),
    ([math.log(2.0), 0.0], [2 / 3, 1 / 3]),
    ([1000.0, 1000.0], [0.5, 0.5]),
])
def test_softmax_examples(row, expected):
    np.testing.assert_allclose(softmax_rows(np.array([row])), [expected], rtol=0, atol=1e-15)


@settings(max_examples=300, deadline=None)
@given(matrices())
def test_softmax_row_stochastic(m):
    p = softmax_rows(m)
    assert (p >= 0).all()
    np.testing.assert_allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(matrices(lo=-100, hi=100), st.floats(-1e3, 1e3))
def test_softmax_shift_invariance(m, c):
    shift = np.full((m.shape[0], 1), c)
    np.testing.assert_allclose(softmax_rows(m + shift), softmax_rows(m), rtol=0, atol=1e-12)


def test_softmax_mask_zeroes_entries_and_handles_empty_rows():
    p = softmax_rows(np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]),
                     mask=np.array([[True, False, True], [False, False, False]]))
    assert p[0, 1] == 0.0
    np.testing.assert_allclose(p[0].sum(), 1.0)
    np.testing.assert_array_equal(p[1], 0.0)


# --- layer norm ------------------------------------------------------------

def test_layer_norm_constant_row_is_zero():
    np.testing.assert_array_equal(layer_norm(np.full((1, 3), 7.5), 1e-5), np.zeros((1, 3)))


def test_layer_norm_unit_row_eps_zero():
    np.testing.assert_allclose(layer_norm(np.array([[1.0, -1.0]]), 0.0), [[1.0, -1.0]], atol=1e-15)


def test_layer_norm_against_scalar_oracle():
    expected = oracles.layer_norm_row([0.0, 2.0], 1e-5)
    np.testing.assert_allclose(layer_norm(np.array([[0.0, 2.0]]), 1e-5)[0], expected, rtol=1e-15)


@settings(max_examples=200, deadline=None)
@given(matrices(cols=st.integers(2, 8), lo=-10, hi=10))
def test_layer_norm_idempotent_on_standardised_rows(m):
    m = m - m.mean(axis=1, keepdims=True)
    sd = np.sqrt((m * m).mean(axis=1, keepdims=True))
    if (sd < 1e-3).any():
        return
    z = m / sd
    np.testing.assert_allclose(layer_norm(z, 0.0), z, rtol=0, atol=1e-12)


def test_layer_norm_affine():
    x = np.array([[0.0, 2.0]])
    y = layer_norm(x, 0.0, gamma=np.array([2.0, 3.0]), beta=np.array([1.0, 1.0]))
    np.testing.assert_allclose(y, [[-1.0, 4.0]])


# --- attention -------------------------------------------------------------

def test_cross_attention_single_key_returns_value():
    rng = np.random.default_rng(1)
    v = rng.uniform(-1, 1, (1, 4))
    out = cross_attention(rng.uniform(-1, 1, (5, 4)), v, 4)
    np.testing.assert_allclose(out, np.repeat(v, 5, axis=0), atol=1e-15)


def test_cross_attention_identical_keys_returns_value():
    rng = np.random.default_rng(2)
    v = rng.uniform(-1, 1, (1, 3))
    out = cross_attention(rng.uniform(-1, 1, (4, 3)), np.repeat(v, 6, axis=0), 3)
    np.testing.assert_allclose(out, np.repeat(v, 4, axis=0), atol=1e-15)


def test_cross_attention_brute_force_example():
    q, kv = [[1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]
    w = oracles.softmax([1 / math.sqrt(2), 0.0])
    assert oracles.attention(q, kv, kv, 2) == [[w[0], w[1]]]
    np.testing.assert_allclose(cross_attention(np.array(q), np.array(kv), 2), [[w[0], w[1]]],
                               rtol=1e-15)


def test_cross_attention_shape_errors():
    with pytest.raises(ShapeError):
        cross_attention(np.ones((2, 3)), np.ones((2, 4)), 3)
    with pytest.raises(ShapeError):
        cross_attention(np.ones((2, 3)), np.ones((2, 3)), 4)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cross_attention_kv_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    q = rng.uniform(-1, 1, (int(rng.integers(1, 5)), d))
    kv = rng.uniform(-1, 1, (int(rng.integers(1, 8)), d))
    perm = rng.permutation(kv.shape[0])
    np.testing.assert_allclose(cross_attention(q, kv[perm], d), cross_attention(q, kv, d),
                               rtol=0, atol=1e-12)


def test_mha_single_head_identity_reduces_to_cross_attention():
    rng = np.random.default_rng(3)
    q, kv = rng.uniform(-1, 1, (3, 4)), rng.uniform(-1, 1, (5, 4))
    out = multi_head_cross_attention(q, kv, MultiHeadParams.identity(4))
    np.testing.assert_allclose(out, cross_attention(q, kv, 4), rtol=0, atol=1e-15)


def test_mha_permutation_invariance():
    rng = np.random.default_rng(4)
    params = MultiHeadParams.random(rng, 6, 5, 3, bias=True)
    q, kv = rng.uniform(-1, 1, (2, 6)), rng.uniform(-1, 1, (7, 5))
    perm = rng.permutation(7)
    np.testing.assert_allclose(multi_head_cross_attention(q, kv[perm], params),
                               multi_head_cross_attention(q, kv, params), rtol=0, atol=1e-12)


def test_mha_two_heads_against_scalar_oracle():
    rng = np.random.default_rng(5)
    params = MultiHeadParams.random(rng, 4, 3, 2)
    q, kv = rng.uniform(-1, 1, (2, 4)), rng.uniform(-1, 1, (3, 3))
    expected = oracles.multi_head(
        q.tolist(), kv.tolist(),
        [m.weight.tolist() for m in params.q_proj],
        [m.weight.tolist() for m in params.k_proj],
        [m.weight.tolist() for m in params.v_proj],
        params.out_proj.weight.tolist(),
    )
    np.testing.assert_allclose(multi_head_cross_attention(q, kv, params), expected, rtol=1e-13)


def test_mha_rejects_non_divisible_heads():
    with pytest.raises(ConfigError):
        MultiHeadParams.random(np.random.default_rng(0), 5, 5, 2)
    eye = LinearMap.identity(5)
    params = MultiHeadParams((eye, eye), (eye, eye), (eye, eye), eye)
    with pytest.raises(ConfigError):
        multi_head_cross_attention(np.ones((1, 5)), np.ones((2, 5)), params)


# --- tape & finite differences --------------------------------------------

def test_backward_of_sum_is_ones():
    tape = Tape()
    x = tape.var(np.random.default_rng(0).uniform(-1, 1, (3, 4)))
    tape.backward(total(x))
    np.testing.assert_array_equal(tape.grad(x), np.ones((3, 4)))


def test_empty_tape_yields_zero_gradients():
    tape = Tape()
    x = tape.var(np.ones((2, 2)))
    np.testing.assert_array_equal(tape.grad(x), np.zeros((2, 2)))


def test_backward_rejects_non_scalar():
    tape = Tape()
    x = tape.var(np.ones((2, 2)))
    with pytest.raises(UsageError):
        tape.backward(x * 2.0)


def test_finite_diff_of_sum():
    x = np.random.default_rng(0).uniform(-1, 1, (3, 3))
    np.testing.assert_allclose(finite_diff(lambda v: v.sum(), x), np.ones((3, 3)), atol=1e-10)


def test_finite_diff_of_half_squared_norm():
    x = np.random.default_rng(1).uniform(-1, 1, (2, 5))
    np.testing.assert_allclose(finite_diff(lambda v: 0.5 * (v * v).sum(), x), x, atol=1e-8)


def test_relative_error_floor():
    assert relative_error(1.0, 1.0 + 1e-9) < 1e-8
    assert relative_error(1e-9, 0.0) == pytest.approx(1e-5)


@pytest.mark.parametrize("seed", range(10))
def test_softmax_then_dot_gradient(seed):
    rng = np.random.default_rng(seed)
    params = {"x": rng.uniform(-1, 1, (3, 5))}
    r = rng.uniform(-1, 1, (3, 5))
    res = check_gradients(lambda p: total(mul(softmax_rows(p["x"]), r)), params)
    assert res.max_rel_error < 1e-6


def test_layer_norm_gradient_at_constant_row():
    r = np.random.default_rng(0).uniform(-1, 1, (1, 6))
    res = check_gradients(lambda p: total(mul(layer_norm(p["x"], 1e-5), r)), {"x": np.full((1, 6), 0.4)})
    assert res.max_rel_error < 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_linear_and_cross_entropy_gradients(seed):
    rng = np.random.default_rng(seed)
    params = {"x": rng.uniform(-1, 1, (1, 4)), "lin": LinearMap.random(rng, 4, 5, bias=True)}
    target = int(rng.integers(5))
    res = check_gradients(lambda p: cross_entropy(linear(p["x"], p["lin"]), target), params)
    assert res.max_rel_error < 1e-6


# --- cross entropy ---------------------------------------------------------

def test_cross_entropy_peaked():
    logits = np.zeros(4)
    logits[2] = 1e3
    assert cross_entropy(logits, 2) < 1e-6


def test_cross_entropy_uniform():
    assert float(cross_entropy(np.zeros(4), 1)) == pytest.approx(math.log(4), abs=1e-15)
    assert math.log(4) == pytest.approx(1.386294, abs=1e-6)


def test_cross_entropy_random_against_scalar():
    logits = np.random.default_rng(9).uniform(-3, 3, 7)
    assert float(cross_entropy(logits, 3)) == pytest.approx(oracles.cross_entropy(logits.tolist(), 3),
                                                            rel=1e-14)


def test_cross_entropy_target_out_of_range():
    with pytest.raises(UsageError):
        cross_entropy(np.zeros(3), 3)
