from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subfactorlab.bighilb import (
    ShapeError,
    alternating_power,
    check_duality,
    check_weighting_properties,
    compare_multisets,
    duality_from_weighting,
    gauge_duality,
    graph_weight_multisets,
    identity,
    random_unitary,
    space_from_graph,
    standard_duality,
    tensor_ops,
    unitarity_defect,
    weighting_from_duality,
)
from subfactorlab.weighted_graph import a5_example, dynkin_a


@given(k=st.integers(2, 6))
def test_weighted_duality_zigzags_and_fairness(k):
    g = dynkin_a(k)
    d = 2 * math.cos(math.pi / (k + 1))
    rep = check_duality(duality_from_weighting(g), d)
    assert rep.passed, rep.summary()


@given(k=st.integers(2, 6))
def test_weighting_round_trip(k):
    g = dynkin_a(k)
    dd = duality_from_weighting(g)
    assert compare_multisets(weighting_from_duality(dd), graph_weight_multisets(g)) < 1e-10
    assert check_weighting_properties(dd, 2 * math.cos(math.pi / (k + 1))).passed


@given(seed=st.integers(0, 10**6))
def test_gauge_preserves_weighting(seed):
    g = a5_example()
    dd = duality_from_weighting(g)
    u = random_unitary(dd.K, np.random.default_rng(seed))
    assert unitarity_defect(u) < 1e-12
    gd = gauge_duality(dd, u)
    assert check_duality(gd, math.sqrt(3)).passed
    assert compare_multisets(weighting_from_duality(gd), weighting_from_duality(dd)) < 1e-9


def test_standard_duality_zigzag():
    k = space_from_graph(dynkin_a(3))
    assert check_duality(standard_duality(k)).passed


def test_tensor_identity_is_identity():
    dd = duality_from_weighting(dynkin_a(3))
    ident = tensor_ops(identity(dd.K), identity(dd.Kbar))
    assert ident.allclose(identity(ident.source))


def test_alternating_power_counts_paths():
    dd = duality_from_weighting(dynkin_a(4))
    for n in range(1, 5):
        sp = alternating_power(dd, n)
        a = dynkin_a(4).adjacency()
        # total number of paths of length n starting in v0
        verts = dynkin_a(4).vertices
        starts = np.array([1.0 if v in dynkin_a(4).v0 else 0.0 for v in verts])
        assert sum(sp.dim(k) for k in sp.blocks) == int(starts @ np.linalg.matrix_power(a, n) @ np.ones(len(verts)))


def test_multiset_mismatch_is_infinite():
    assert compare_multisets({("a", "b"): [1.0]}, {("a", "c"): [1.0]}) == float("inf")


def test_bad_composition_raises():
    dd = duality_from_weighting(dynkin_a(3))
    with pytest.raises(ShapeError):
        identity(dd.K) @ dd.coev_K
