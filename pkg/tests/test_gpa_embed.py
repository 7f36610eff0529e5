from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subfactorlab.gpa_embed import (
    box_space,
    embed_tl,
    gpa_trace,
    jones_wenzl,
    kernel_basis,
    kernel_dimension,
    quantum_integer,
    verify_embedding,
)
from subfactorlab.tl_diagram import TLContext, TLError, catalan, jones_generator, markov_trace
from subfactorlab.weighted_graph import GraphError, a5_example, dynkin_a, perron_data


@pytest.mark.parametrize("k,n", [(3, 2), (4, 3), (5, 3)])
def test_embedding_report(k, n):
    emb, rep = verify_embedding(dynkin_a(k), None, n)
    assert rep.passed, rep.summary()
    assert emb.image_rank + emb.kernel_dim == catalan(n)


@given(n=st.integers(1, 5), d=st.sampled_from([2.3, 3.0, 1.9]))
def test_jones_wenzl_is_killed_by_caps(n, d):
    jw = jones_wenzl(n, d)
    assert (jw * jw - jw).norm() < 1e-9
    ctx = TLContext(n, d)
    for i in range(1, n):
        assert (jones_generator(ctx, i) * jw).norm() < 1e-9


def test_quantum_integers_vanish_at_root_of_unity():
    d = 2 * np.cos(np.pi / 6)
    assert abs(quantum_integer(6, d)) < 1e-12
    assert quantum_integer(5, d) > 0


@pytest.mark.parametrize("k,n,expected", [(5, 4, 0), (3, 3, 1), (4, 3, 0), (4, 4, 1)])
def test_kernel_dimensions(k, n, expected):
    assert kernel_dimension(dynkin_a(k), None, n) == expected


def test_a3_kernel_is_jones_wenzl():
    g = dynkin_a(3)
    box = box_space(g, None, 3)
    jw = jones_wenzl(3, box.d)
    assert np.max(np.abs(embed_tl(jw, g, box=box))) < 1e-8
    (kb,) = kernel_basis(g, None, 3)
    # the kernel vector is a multiple of JW_3
    c = np.vdot(jw.coeffs, kb.coeffs) / np.vdot(jw.coeffs, jw.coeffs)
    assert np.max(np.abs(kb.coeffs - c * jw.coeffs)) < 1e-8


def test_trace_of_identity_and_generator():
    g = a5_example()
    nu, _ = perron_data(g)
    box = box_space(g, nu, 3)
    e = jones_generator(TLContext(3, box.d), 2)
    assert abs(gpa_trace(box, np.eye(len(box.paths))) - 1) < 1e-12
    assert abs(gpa_trace(box, embed_tl(e, g, box=box)) - markov_trace(e)) < 1e-12


def test_box_dimension_counts_path_pairs():
    box = box_space(dynkin_a(4), None, 2)
    assert box.dim == int(np.sum(box.block_mask()))


def test_bad_inputs():
    with pytest.raises(GraphError):
        box_space(dynkin_a(3), {"p1": 1.0, "p2": 1.0, "p3": 1.0}, 2)
    with pytest.raises(TLError):
        box_space(dynkin_a(3), None, 7)
    with pytest.raises(GraphError):
        embed_tl(jones_generator(TLContext(2, 2.3), 1), dynkin_a(3))
