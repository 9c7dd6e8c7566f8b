import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spectre_da.numerics import (
    ContractError,
    InputError,
    Spectrum,
    delta2,
    frobenius_distance,
    log_mean_exp,
    symmetric_eigenvalues,
)


def test_identity_eigenvalues():
    np.testing.assert_array_equal(symmetric_eigenvalues(np.eye(2)), [1.0, 1.0])


def test_swap_matrix_eigenvalues():
    np.testing.assert_allclose(symmetric_eigenvalues([[0, 1], [1, 0]]), [1.0, -1.0], atol=1e-15)


def test_tridiagonal_eigenvalues_match_characteristic_roots():
    # det(A - t I) = (2 - t)((2 - t)^2 - 2)
    A = [[2, 1, 0], [1, 2, 1], [0, 1, 2]]
    s2 = math.sqrt(2.0)
    np.testing.assert_allclose(symmetric_eigenvalues(A), [2 + s2, 2, 2 - s2], atol=1e-14)


def test_eigenvalues_sorted_descending():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((30, 30))
    vals = symmetric_eigenvalues(a + a.T)
    assert isinstance(vals, Spectrum)
    assert np.all(np.diff(vals) <= 0)


def test_eigen_rejects_bad_input():
    with pytest.raises(ContractError):
        symmetric_eigenvalues(np.ones((2, 3)))
    with pytest.raises(InputError):
        symmetric_eigenvalues([[1.0, np.nan], [np.nan, 1.0]])
    with pytest.raises(ContractError):
        symmetric_eigenvalues([[0.0, 1.0], [0.0, 0.0]])


def test_tiny_asymmetry_is_symmetrised():
    A = np.array([[1.0, 0.5], [0.5 + 1e-13, 1.0]])
    np.testing.assert_allclose(symmetric_eigenvalues(A), [1.5, 0.5], atol=1e-12)


def test_spectrum_rejects_non_finite():
    with pytest.raises(InputError):
        Spectrum([1.0, np.inf])


def test_delta2_examples():
    assert delta2([1, 0.5], [1, 0.5]) == 0.0
    assert delta2([0.5, 1], [1, 0.5]) == 0.0
    assert delta2([1], [1, 0.2]) == pytest.approx(0.2, abs=1e-15)
    assert delta2([1, 0.5], [1, 0.25]) == pytest.approx(0.25, abs=1e-15)


def test_delta2_pads_negative_values_against_zeros():
    # the zero padding sits between the positive and negative entries
    assert delta2([1.0, -0.5], [1.0]) == pytest.approx(0.5)
    assert delta2([-0.3], [0.4]) == pytest.approx(0.5)


def test_frobenius_examples():
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert frobenius_distance(swap, swap) == 0.0
    assert frobenius_distance(np.zeros((2, 2)), swap) == pytest.approx(math.sqrt(2))
    assert frobenius_distance(np.eye(2), np.zeros((2, 2))) == pytest.approx(math.sqrt(2))
    with pytest.raises(InputError):
        frobenius_distance(np.eye(2), np.eye(3))


def test_log_mean_exp():
    a = np.array([[0.0, -np.inf], [np.log(3.0), -np.inf]])
    out = log_mean_exp(a, axis=0)
    assert out[0] == pytest.approx(np.log(2.0))
    assert out[1] == -np.inf
    big = np.array([1000.0, 1000.0])
    assert log_mean_exp(big) == pytest.approx(1000.0)


# -- properties --------------------------------------------------------------

_finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
_seq = arrays(np.float64, st.integers(0, 12), elements=_finite)


@st.composite
def symmetric_pair(draw, n=20):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    b = a + draw(st.floats(0.01, 3.0)) * rng.standard_normal((n, n))
    return (a + a.T) / 2, (b + b.T) / 2


@settings(max_examples=100, deadline=None)
@given(symmetric_pair())
def test_hoffman_wielandt(pair):
    A, B = pair
    assert delta2(symmetric_eigenvalues(A), symmetric_eigenvalues(B)) <= frobenius_distance(A, B) + 1e-10


@settings(max_examples=200, deadline=None)
@given(_seq, _seq, _seq)
def test_delta2_metric_axioms(a, b, c):
    assert delta2(a, b) == delta2(b, a)
    assert delta2(a, a) == 0.0
    assert delta2(a, c) <= delta2(a, b) + delta2(b, c) + 1e-12


@settings(max_examples=100, deadline=None)
@given(_seq, st.randoms(use_true_random=False))
def test_delta2_permutation_invariant(a, rnd):
    perm = list(a)
    rnd.shuffle(perm)
    b = np.asarray(perm)
    assert delta2(a, b) == 0.0
    assert delta2(a, [0.5]) == delta2(b, [0.5])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 15))
def test_orthogonal_invariance(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    A = a + a.T
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    np.testing.assert_allclose(symmetric_eigenvalues(Q.T @ A @ Q), symmetric_eigenvalues(A), atol=1e-8)
