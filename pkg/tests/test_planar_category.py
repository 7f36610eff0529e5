from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subfactorlab.markov_tower import build_path_tower
from subfactorlab.planar_category import (
    MINUS,
    PLUS,
    ZERO,
    CompositionError,
    ObjectLabel,
    ShadingError,
    TripleMorphism,
    coev,
    compose,
    distance,
    ev,
    glue_compose,
    identity_morphism,
    juxtapose,
    pivotal_traces,
    random_morphism,
    tensor,
    verify_category_laws,
    verify_module_laws,
    zigzag_defects,
)
from subfactorlab.tl_diagram import TLContext, jones_generator, markov_trace
from subfactorlab.weighted_graph import dynkin_a

D = 2.3
signs = st.sampled_from([PLUS, MINUS])


def objs(parity: int):
    return st.builds(lambda k, s: ObjectLabel(2 * k + parity, s), st.integers(0, 2), signs)


@given(a=st.integers(0, 3), b=st.integers(0, 1), c=st.integers(0, 1), s=signs, seed=st.integers(0, 10**6))
def test_composition_matches_gluing_oracle(a, b, c, s, seed):
    rng = np.random.default_rng(seed)
    x, y, z = ObjectLabel(a, s), ObjectLabel(a + 2 * b, s), ObjectLabel(abs(a - 2 * c), s)
    f = random_morphism(x, y, D, rng)
    g = random_morphism(y, z, D, rng)
    assert distance(compose(g, f), glue_compose(g, f)) < 1e-9


@given(n=st.integers(0, 3), m=st.integers(0, 1), s=signs, seed=st.integers(0, 10**6))
def test_units(n, m, s, seed):
    rng = np.random.default_rng(seed)
    x, y = ObjectLabel(n, s), ObjectLabel(n + 2 * m, s)
    f = random_morphism(x, y, D, rng)
    assert distance(compose(identity_morphism(y, D), f), f) < 1e-10
    assert distance(compose(f, identity_morphism(x, D)), f) < 1e-10


@given(n=st.integers(0, 2), m=st.integers(0, 2), s=signs, seed=st.integers(0, 10**6))
def test_tensor_matches_juxtaposition(n, m, s, seed):
    rng = np.random.default_rng(seed)
    x = random_morphism(ObjectLabel(n, s), ObjectLabel(n, s), D, rng)
    t = ObjectLabel(m, x.target.right_sign)
    y = random_morphism(t, t, D, rng)
    assert distance(tensor(x, y), juxtapose(x, y)) < 1e-9


def test_incompatible_shading_gives_zero():
    x = identity_morphism(ObjectLabel(1, PLUS), D)
    y = identity_morphism(ObjectLabel(1, PLUS), D)
    assert tensor(x, y) is ZERO
    with pytest.raises(ShadingError):
        tensor(x, y, strict=True)


def test_composition_needs_matching_objects():
    f = identity_morphism(ObjectLabel(2, PLUS), D)
    g = identity_morphism(ObjectLabel(1, PLUS), D)
    with pytest.raises(CompositionError):
        compose(g, f)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("s", [PLUS, MINUS])
def test_zigzag(n, s):
    assert max(zigzag_defects(ObjectLabel(n, s), D)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("s", [PLUS, MINUS])
def test_closed_loops(n, s):
    x = ObjectLabel(n, s)
    assert abs(compose(ev(x, D), ev(x, D).dagger).endo.coeffs[0] - D**n) < 1e-10
    assert abs(compose(coev(x, D).dagger, coev(x, D)).endo.coeffs[0] - D**n) < 1e-10


@pytest.mark.parametrize("n", [2, 3])
def test_traces_on_jones_projection(n):
    e1 = jones_generator(TLContext(n, D), 1)
    f = TripleMorphism(e1, ObjectLabel(n, PLUS), ObjectLabel(n, PLUS))
    tl, tr = pivotal_traces(f)
    assert abs(tl - D**-2) < 1e-12
    assert abs(tr - markov_trace(e1)) < 1e-12


def test_category_laws_small_run():
    rep = verify_category_laws(D, instances=20, seed=3)
    assert rep.passed, rep.summary()


def test_category_laws_seed_reproducible():
    a = verify_category_laws(math.sqrt(7), instances=10, seed=5)
    b = verify_category_laws(math.sqrt(7), instances=10, seed=5)
    assert [c.deviation for c in a.checks] == [c.deviation for c in b.checks]


def test_module_laws_on_a3_tower():
    t = build_path_tower(dynkin_a(3), "p1", 6)
    rep = verify_module_laws(t, instances=10, seed=1)
    assert rep.passed, rep.summary()
