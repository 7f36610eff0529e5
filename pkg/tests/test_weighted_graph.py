from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, strategies as st

from subfactorlab.biunitary import square_a3_graph
from subfactorlab.weighted_graph import (
    GraphError,
    a5_example,
    check_associative,
    check_fair,
    check_square_fair,
    dynkin_a,
    edge_weights_from_vertex_weighting,
    fp_defect,
    graph_from_json,
    graph_to_dot,
    graph_to_json,
    graph_from_undirected,
    nu_from_json,
    perron_data,
)


@given(k=st.integers(2, 9))
def test_dynkin_a_perron(k):
    g = dynkin_a(k)
    nu, d = perron_data(g)
    assert abs(d - 2 * math.cos(math.pi / (k + 1))) < 1e-12
    # nu is proportional to sin(j pi / (k+1))
    ref = [math.sin(j * math.pi / (k + 1)) for j in range(1, k + 1)]
    scale = max(ref)
    for j in range(1, k + 1):
        assert abs(nu[f"p{j}"] - ref[j - 1] / scale) < 1e-12
    assert max(abs(v) for v in fp_defect(g, nu, d).values()) < 1e-12


@given(k=st.integers(2, 9))
def test_perron_weighting_is_fair_and_balanced(k):
    assert check_fair(dynkin_a(k)).passed


def test_a5_weights_match_sines():
    g = a5_example()
    s = [math.sin(j * math.pi / 6) for j in range(1, 6)]
    order = ["p1", "p4", "p2", "p5", "p3"]
    for e in g.edges:
        a, b = order.index(e.src), order.index(e.dst)
        assert abs(g.weight[e.id] - s[b] / s[a]) < 1e-12


def test_fp_violation_raises():
    g = dynkin_a(3)
    with pytest.raises(GraphError):
        edge_weights_from_vertex_weighting(g, {"p1": 1.0, "p2": 1.0, "p3": 1.0}, math.sqrt(2))


def test_disconnected_graph_rejected():
    g = graph_from_undirected(["a", "c"], ["b", "d"], [("a", "b"), ("c", "d")])
    with pytest.raises(GraphError):
        perron_data(g)


def test_same_part_edge_rejected():
    with pytest.raises(GraphError):
        graph_from_undirected(["a", "b"], ["c"], [("a", "b")])


@given(k=st.integers(2, 7))
def test_json_round_trip(k):
    g = dynkin_a(k)
    back = graph_from_json(json.loads(json.dumps(graph_to_json(g))))
    assert set(back.weight) == set(g.weight)
    assert max(abs(back.weight[e] - g.weight[e]) for e in g.weight) < 1e-15


def test_fixture_nu(fixtures):
    data = json.loads((fixtures / "a5_nu.json").read_text())
    nu = nu_from_json(data)
    g = graph_from_json(data, apply_nu=False)
    _, d = perron_data(g)
    assert max(abs(v) for v in fp_defect(g, nu, d).values()) < 1e-12


def test_perturbed_fixture_is_unfair(fixtures):
    g = graph_from_json(json.loads((fixtures / "a3_perturbed.json").read_text()))
    rep = check_fair(g, math.sqrt(2))
    assert not rep.passed
    assert any("fair" in c.name for c in rep.failures())


def test_square_a3_is_associative_and_fair():
    sq = square_a3_graph()
    assert check_associative(sq).passed
    assert check_square_fair(sq).passed


def test_dot_output():
    dot = graph_to_dot(dynkin_a(3))
    assert dot.startswith("graph") or dot.startswith("digraph")
    assert "p2" in dot
