from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subfactorlab.markov_tower import (
    TowerError,
    build_path_tower,
    decompose_tower,
    e_lambda,
    example_traceless_tower,
    expectation_lambda,
    path_counts,
    principal_graph,
    recover_edge_weighting,
    relative_commutant_dim,
    tl_representation,
    traceless_lambda,
    two_step_commutant_dim,
    verify_markov_axioms,
    verify_standard_module,
    weights_by_depth,
)
from subfactorlab.tl_diagram import TLContext, jones_generator
from subfactorlab.weighted_graph import GraphError, a5_example, dynkin_a


@given(k=st.integers(3, 6), n=st.integers(0, 5))
def test_path_tower_dims_are_sums_of_squares(k, n):
    g = dynkin_a(k)
    t = build_path_tower(g, "p1", n)
    assert t.dims()[n] == sum(c * c for c in path_counts(g, "p1", n).values())


@pytest.mark.parametrize("k", [3, 4, 5])
def test_path_tower_axioms(k):
    rep = verify_markov_axioms(build_path_tower(dynkin_a(k), "p1", 5))
    assert rep.passed, rep.summary()


def test_traceless_example():
    d = math.sqrt(5)
    lam = traceless_lambda(d)
    assert abs(lam * (1 - lam) - 0.2) < 1e-14
    e = e_lambda(lam)
    assert np.allclose(e @ e, e) and np.allclose(e, e.conj().T)
    assert np.allclose(expectation_lambda(e, lam), 0.2 * np.eye(2), atol=1e-12)
    rep = verify_markov_axioms(example_traceless_tower(d, 5), tol=1e-10)
    assert rep.passed, rep.summary()


def test_traceless_needs_large_modulus():
    with pytest.raises(TowerError):
        traceless_lambda(1.9)


def test_principal_graph_of_a4():
    t = build_path_tower(dynkin_a(4), "p1", 5)
    pg = principal_graph(decompose_tower(t).bratteli)
    assert len(pg.vertices) == 4
    assert len(pg.edges) == 6


def test_relative_commutant_matches_two_step_paths():
    g = dynkin_a(4)
    t = build_path_tower(g, "p1", 4)
    for n in (1, 2, 3):
        assert relative_commutant_dim(t, n) == two_step_commutant_dim(g, "p1", n)


@pytest.mark.parametrize("k", [3, 4])
def test_recover_weights(k):
    g = dynkin_a(k)
    rec = recover_edge_weighting(build_path_tower(g, "p1", k + 1))
    assert rec.report.passed, rec.report.summary()
    got, want = weights_by_depth(rec.graph, "L0.0"), weights_by_depth(g, "p1")
    assert set(got) == set(want)
    for key in got:
        assert np.allclose(sorted(got[key]), sorted(want[key]), atol=1e-8)


def test_tl_representation_gives_jones_projection():
    t = build_path_tower(dynkin_a(5), "p1", 4)
    e2 = tl_representation(t, jones_generator(TLContext(4, t.d), 2))
    assert np.allclose(e2, t.e(2, 4), atol=1e-12)


def test_standard_module():
    t = build_path_tower(dynkin_a(5), "p1", 4)
    assert verify_standard_module(t).passed


def test_negative_control_wrong_jones_projection():
    t = build_path_tower(dynkin_a(5), "p1", 4)
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.normal(size=(t.algebras[3].dim,) * 2))
    bad = t.with_jones(2, q @ t.jones[2] @ q.T)
    rep = verify_markov_axioms(bad)
    assert not rep.passed
    assert any("TLJ" in c.name or "M2" in c.name for c in rep.failures())


def test_caps_and_base():
    with pytest.raises(TowerError):
        build_path_tower(dynkin_a(3), "p1", 99)
    with pytest.raises(GraphError):
        build_path_tower(a5_example(), "p4", 2)
