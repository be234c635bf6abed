"""Flat-vector arithmetic: pinned values, algebraic properties, eager checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from samlab import vectors
from samlab.errors import ConfigError, DimensionError, NonFiniteError

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


def vec(n_max=32):
    return st.integers(min_value=1, max_value=n_max).flatmap(
        lambda n: st.lists(finite, min_size=n, max_size=n).map(
            lambda xs: np.asarray(xs, dtype=np.float64)))


def same_len_pair(n_max=32):
    return st.integers(min_value=1, max_value=n_max).flatmap(
        lambda n: st.tuples(
            st.lists(finite, min_size=n, max_size=n),
            st.lists(finite, min_size=n, max_size=n)).map(
            lambda ab: (np.asarray(ab[0]), np.asarray(ab[1]))))


def test_dot_pinned_values():
    assert vectors.dot([1.0, 2.0], [3.0, 4.0]) == 11.0
    assert vectors.dot([-0.44], [1.21]) == -0.5324


def test_l2_norm_pinned_values():
    assert vectors.l2_norm([3.0, 4.0]) == 5.0
    assert vectors.l2_norm([0.51, 2.01]) == pytest.approx(np.sqrt(0.51**2 + 2.01**2), rel=1e-15)


def test_axpy_pinned_value():
    out = vectors.axpy(-0.1, np.array([1.1]), np.array([1.0]))
    assert out.tolist() == [0.89]


def test_scale_and_subtract():
    assert vectors.scale(0.5, np.array([2.0, -4.0])).tolist() == [1.0, -2.0]
    assert vectors.subtract(np.array([3.0, 1.0]), np.array([1.0, 1.0])).tolist() == [2.0, 0.0]


@settings(max_examples=100)
@given(same_len_pair())
def test_dot_symmetric_bitwise(pair):
    a, b = pair
    assert vectors.dot(a, b) == vectors.dot(b, a)


@settings(max_examples=100)
@given(same_len_pair(), st.floats(min_value=-100, max_value=100, allow_nan=False))
def test_dot_bilinear(pair, alpha):
    a, b = pair
    lhs = vectors.dot(vectors.scale(alpha, a), b)
    rhs = alpha * vectors.dot(a, b)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


@settings(max_examples=100)
@given(vec())
def test_norm_squared_matches_dot(v):
    n = vectors.l2_norm(v)
    assert n * n == pytest.approx(vectors.dot(v, v), rel=1e-12, abs=1e-300)


@settings(max_examples=100)
@given(vec())
def test_axpy_self_cancellation_exact_zero(v):
    out = vectors.axpy(-1.0, v, v)
    assert np.all(out == 0.0)


@settings(max_examples=100)
@given(vec())
def test_square_equals_self_multiply_bitwise(v):
    assert vectors.square(v).tobytes() == vectors.multiply(v, v).tobytes()


def test_elementwise_dispatch():
    v = np.array([-2.0, 3.0])
    assert vectors.elementwise("square", v).tolist() == [4.0, 9.0]
    assert vectors.elementwise("abs", v).tolist() == [2.0, 3.0]
    assert vectors.elementwise("multiply", v, v).tolist() == [4.0, 9.0]


def test_elementwise_errors():
    v = np.array([1.0])
    with pytest.raises(ConfigError):
        vectors.elementwise("cube", v)
    with pytest.raises(DimensionError):
        vectors.elementwise("multiply", v)
    with pytest.raises(DimensionError):
        vectors.elementwise("square", v, v)


def test_length_mismatch_raises():
    with pytest.raises(DimensionError):
        vectors.dot([1.0], [1.0, 2.0])
    with pytest.raises(DimensionError):
        vectors.axpy(1.0, np.zeros(2), np.zeros(3))


def test_nonfinite_raises_eagerly():
    big = np.array([1e308, 1e308])
    with pytest.raises(NonFiniteError):
        vectors.dot(big, big)          # overflow to inf in the reduction
    with pytest.raises(NonFiniteError):
        vectors.scale(1e10, big)       # overflow in the output entries
    with pytest.raises(NonFiniteError):
        vectors.as_vector([1.0, float("nan")])


def test_momentum_update_fused():
    m, theta = vectors.momentum_update(0.9, 0.0, 0.1, np.zeros(1), np.array([1.0]), np.array([1.0]))
    assert m.tolist() == [1.0]
    assert theta.tolist() == [0.9]
    m, theta = vectors.momentum_update(0.9, 0.0, 0.1, m, theta, np.array([1.0]))
    assert m.tolist() == [1.9]
