from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subfactorlab.tl_diagram import (
    TLContext,
    TLElement,
    TLError,
    catalan,
    embed_right,
    enumerate_basis,
    gram_matrix,
    identity,
    jones_generator,
    markov_trace,
    right_expectation,
    shift_insert,
    strip_left,
    verify_tl_algebra,
)

DS = st.sampled_from([2.0, 2.3, math.sqrt(7), 3.1])


def rand_el(n: int, d: float, seed: int) -> TLElement:
    rng = np.random.default_rng(seed)
    size = catalan(n)
    return TLElement(n, d, rng.normal(size=size) + 1j * rng.normal(size=size))


def test_catalan_numbers():
    assert [catalan(n) for n in range(8)] == [1, 1, 2, 5, 14, 42, 132, 429]


@pytest.mark.parametrize("n", range(6))
def test_basis_size(n):
    assert len(enumerate_basis(n)) == catalan(n)


@pytest.mark.parametrize("d", [2.3, math.sqrt(7)])
@pytest.mark.parametrize("n", range(5))
def test_tl_relations(n, d):
    rep = verify_tl_algebra(n, d)
    assert rep.passed, rep.summary()


@given(n=st.integers(1, 5), d=DS, seed=st.integers(0, 10**6))
def test_trace_is_tracial_and_normalised(n, d, seed):
    x, y = rand_el(n, d, seed), rand_el(n, d, seed + 1)
    assert abs(markov_trace(x * y) - markov_trace(y * x)) < 1e-9 * (1 + abs(markov_trace(x * y)))
    assert abs(markov_trace(identity(n, d)) - 1) < 1e-12


@given(n=st.integers(2, 5), d=DS)
def test_jones_generator_trace(n, d):
    ctx = TLContext(n, d)
    for i in range(1, n):
        assert abs(markov_trace(jones_generator(ctx, i)) - d**-2) < 1e-12


@given(n=st.integers(1, 5), d=DS, seed=st.integers(0, 10**6))
def test_involution_is_antimultiplicative(n, d, seed):
    x, y = rand_el(n, d, seed), rand_el(n, d, seed + 7)
    assert (x * y).adjoint.allclose(y.adjoint * x.adjoint, 1e-9)
    assert x.adjoint.adjoint.allclose(x, 1e-12)


@given(n=st.integers(1, 4), d=DS, seed=st.integers(0, 10**6))
def test_right_expectation_preserves_trace(n, d, seed):
    x = rand_el(n + 1, d, seed)
    assert abs(markov_trace(right_expectation(x)) - markov_trace(x)) < 1e-9


@given(n=st.integers(1, 4), d=DS, seed=st.integers(0, 10**6))
def test_embed_then_expect_is_identity(n, d, seed):
    x = rand_el(n, d, seed)
    assert right_expectation(embed_right(x, 1)).allclose(x, 1e-9)


@given(n=st.integers(1, 4), d=DS, seed=st.integers(0, 10**6))
def test_shift_is_multiplicative_and_strippable(n, d, seed):
    x, y = rand_el(n, d, seed), rand_el(n, d, seed + 3)
    assert shift_insert(x * y, 2).allclose(shift_insert(x, 2) * shift_insert(y, 2), 1e-9)
    assert strip_left(shift_insert(x, 2), 2).allclose(x, 1e-12)


@pytest.mark.parametrize("d", [2.0, 2.3, 3.0])
def test_gram_positive_definite(d):
    assert np.linalg.eigvalsh(gram_matrix(4, d)).min() > 1e-6


def test_mismatched_elements_raise():
    with pytest.raises(TLError):
        identity(2, 2.3) + identity(3, 2.3)
