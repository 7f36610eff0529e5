from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subfactorlab.biunitary import (
    apply_gauge,
    build_markov_lattice,
    check_biunitary,
    check_rotations,
    compare_invariants,
    connection_from_json,
    connection_from_lattice,
    connection_to_dot,
    connection_to_json,
    product_connection,
    random_gauge,
    rotate,
    singular_value_invariants,
    square_a3_connection,
    trivial_connection,
    verify_lattice_axioms,
)
from subfactorlab.weighted_graph import dynkin_a


@given(theta=st.floats(-3.0, 3.0))
def test_trivial_connection_is_biunitary(theta):
    c = trivial_connection(theta)
    assert check_biunitary(c).passed
    assert check_rotations(c).passed


def test_hadamard_connection():
    c = square_a3_connection()
    assert check_biunitary(c).passed
    rep = check_rotations(c)
    assert rep.passed, rep.summary()


def test_bad_signs_break_horizontal_unitarity():
    rep = check_biunitary(square_a3_connection((1.0, 1.0, 1.0, 1.0)))
    assert not rep.passed
    failed = [c.name for c in rep.failures()]
    assert any(n.startswith("horizontal") for n in failed)
    assert not any(n.startswith("vertical") for n in failed)


def test_rotation_has_order_four():
    c = square_a3_connection()
    r4 = rotate(c, 4)
    assert max(float(np.max(np.abs(r4.phi.block(k) - c.phi.block(k)))) for k in c.phi.keys()) < 1e-12


@given(seed=st.integers(0, 10**6))
def test_gauge_invariants(seed):
    c = square_a3_connection()
    g = apply_gauge(c, *random_gauge(c, np.random.default_rng(seed)))
    assert check_biunitary(g).passed
    assert compare_invariants(c, g) < 1e-9


def test_json_round_trip():
    c = square_a3_connection()
    back = connection_from_json(json.loads(json.dumps(connection_to_json(c))))
    assert compare_invariants(c, back) < 1e-12
    assert "digraph" in connection_to_dot(c) or "graph" in connection_to_dot(c)


def test_invariants_distinguish_hadamard_from_trivial():
    assert singular_value_invariants(square_a3_connection())
    assert compare_invariants(square_a3_connection(), trivial_connection()) > 1e-3


def test_product_lattice_and_extraction():
    a = dynkin_a(3)
    c = product_connection(a, a)
    m = build_markov_lattice(c, i_max=3, j_max=3)
    rep = verify_lattice_axioms(m)
    assert rep.passed, rep.summary()
    back = connection_from_lattice(m)
    assert check_biunitary(back).passed
    assert compare_invariants(back, c) < 1e-8


@pytest.mark.parametrize("make", [trivial_connection, square_a3_connection])
def test_lattice_round_trip(make):
    c = make()
    m = build_markov_lattice(c, i_max=3, j_max=3)
    assert verify_lattice_axioms(m).passed
    assert compare_invariants(connection_from_lattice(m), c) < 1e-8


def test_bad_connection_lattice_fails(fixtures):
    c = connection_from_json(json.loads((fixtures / "bad_connection.json").read_text()))
    assert not verify_lattice_axioms(build_markov_lattice(c, i_max=2, j_max=2)).passed
