"""Edge-weighted bipartite and square-partite graphs.

A bipartite graph carries directed edges in both directions, paired by the
involution ``bar``.  Fairness asks every vertex to emit total weight ``d``,
balance asks ``w(e) w(bar e) = 1``.  Vertex weightings satisfying the
Frobenius-Perron condition induce fair balanced edge weightings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .report import Report

FP_TOL = 1e-8


class GraphError(ValueError):
    """Malformed graph data or an unsatisfied precondition."""


@dataclass(frozen=True)
class Edge:
    id: str
    src: str
    dst: str


@dataclass
class WeightedBipartiteGraph:
    v0: list[str]
    v1: list[str]
    edges: list[Edge]
    weight: dict[str, float]
    bar: dict[str, str]

    def __post_init__(self) -> None:
        self._emap = {e.id: e for e in self.edges}
        self.validate()

    # -- structure -------------------------------------------------------
    def validate(self) -> None:
        part = {v: 0 for v in self.v0}
        for v in self.v1:
            if v in part:
                raise GraphError(f"vertex {v!r} lies in both parts")
            part[v] = 1
        ids = set()
        for e in self.edges:
            if e.id in ids:
                raise GraphError(f"duplicate edge id {e.id!r}")
            ids.add(e.id)
            if e.src not in part or e.dst not in part:
                raise GraphError(f"edge {e.id!r} has an unknown endpoint")
            if part[e.src] == part[e.dst]:
                raise GraphError(f"edge {e.id!r} joins two vertices of the same part")
        for e in self.edges:
            if e.id not in self.bar:
                raise GraphError(f"edge {e.id!r} has no bar partner")
            b = self.bar[e.id]
            if b not in ids or self.bar.get(b) != e.id:
                raise GraphError(f"bar is not an involution at edge {e.id!r}")
            eb = self.edge(b)
            if (eb.src, eb.dst) != (e.dst, e.src):
                raise GraphError(f"bar of {e.id!r} does not reverse its endpoints")
        for e in self.edges:
            if e.id in self.weight and not self.weight[e.id] > 0:
                raise GraphError(f"weight of edge {e.id!r} is not positive")

    @property
    def vertices(self) -> list[str]:
        return list(self.v0) + list(self.v1)

    def edge(self, eid: str) -> Edge:
        return self._emap[eid]

    def out_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.src == v]

    def edges_between(self, u: str, v: str) -> list[Edge]:
        return [e for e in self.edges if e.src == u and e.dst == v]

    def part_of(self, v: str) -> int:
        if v in self.v0:
            return 0
        if v in self.v1:
            return 1
        raise GraphError(f"unknown vertex {v!r}")

    def adjacency(self) -> np.ndarray:
        """Edge-count matrix over ``vertices`` (symmetric, undirected)."""
        verts = self.vertices
        pos = {v: k for k, v in enumerate(verts)}
        a = np.zeros((len(verts), len(verts)))
        for e in self.edges:
            a[pos[e.src], pos[e.dst]] += 1
        return a

    def with_weights(self, weight: dict[str, float]) -> "WeightedBipartiteGraph":
        return WeightedBipartiteGraph(list(self.v0), list(self.v1), list(self.edges), dict(weight), dict(self.bar))

    def reversed_parts(self) -> "WeightedBipartiteGraph":
        return WeightedBipartiteGraph(list(self.v1), list(self.v0), list(self.edges), dict(self.weight), dict(self.bar))

    def degree(self, v: str) -> int:
        return len(self.out_edges(v))


def graph_from_undirected(
    v0: list[str], v1: list[str], pairs: list[tuple[str, str]], weight: dict[tuple[str, str], float] | None = None
) -> WeightedBipartiteGraph:
    """Build a graph with edges ``u->v`` and ``v->u`` for each listed pair ``(u, v)``, ``u`` in ``v0``.

    Repeated pairs give multiple edges.  Edge ids are ``"u>v#k"``.
    """
    edges: list[Edge] = []
    bar: dict[str, str] = {}
    w: dict[str, float] = {}
    seen: dict[tuple[str, str], int] = {}
    for u, v in pairs:
        k = seen.get((u, v), 0)
        seen[(u, v)] = k + 1
        a, b = f"{u}>{v}#{k}", f"{v}>{u}#{k}"
        edges += [Edge(a, u, v), Edge(b, v, u)]
        bar[a], bar[b] = b, a
        if weight is not None:
            w[a] = weight.get((u, v), 1.0)
            w[b] = weight.get((v, u), 1.0 / w[a])
    return WeightedBipartiteGraph(v0, v1, edges, w, bar)


def dynkin_a(k: int, names: list[str] | None = None) -> WeightedBipartiteGraph:
    """The path ``A_k`` along ``names`` (default ``p1 - ... - pk``), Perron-weighted.

    Vertices at even positions along the path form ``v0``.
    """
    if k < 2:
        raise GraphError("A_k needs k >= 2")
    names = list(names) if names is not None else [f"p{t}" for t in range(1, k + 1)]
    if len(names) != k:
        raise GraphError(f"A_{k} needs {k} vertex names")
    v0 = names[0::2]
    v1 = names[1::2]
    pairs = []
    for t in range(k - 1):
        a, b = names[t], names[t + 1]
        pairs.append((a, b) if a in v0 else (b, a))
    g = graph_from_undirected(v0, v1, pairs)
    nu, _ = perron_data(g)
    return g.with_weights(edge_weights_from_vertex_weighting(g, nu))


def a5_example() -> WeightedBipartiteGraph:
    """``A_5`` labelled ``p1 - p4 - p2 - p5 - p3``: ``v0 = {p1, p2, p3}``, ``v1 = {p4, p5}``."""
    return dynkin_a(5, ["p1", "p4", "p2", "p5", "p3"])


# ------------------------------------------------------------------ Perron data


def perron_data(g: WeightedBipartiteGraph) -> tuple[dict[str, float], float]:
    """Perron eigenvector (max entry 1) and spectral radius of the adjacency matrix."""
    verts = g.vertices
    if len(verts) == 0 or not g.edges:
        raise GraphError("Perron data needs a graph with at least one edge")
    a = g.adjacency()
    ncomp, _ = connected_components(a, directed=False)
    if ncomp != 1:
        raise GraphError(f"graph is disconnected ({ncomp} components)")
    vals, vecs = np.linalg.eigh(a)
    d = float(vals[-1])
    v = np.abs(vecs[:, -1])
    v = v / v.max()
    resid = float(np.max(np.abs(a @ v - d * v)))
    if resid > 1e-12 * max(1.0, d):
        raise GraphError(f"Perron eigenvector residual {resid:.2e}")
    return {name: float(x) for name, x in zip(verts, v)}, d


def fp_defect(g: WeightedBipartiteGraph, nu: dict[str, float], d: float) -> dict[str, float]:
    """``sum_{e: P -> Q} nu(Q) - d nu(P)`` per vertex ``P``."""
    return {p: sum(nu[e.dst] for e in g.out_edges(p)) - d * nu[p] for p in g.vertices}


def edge_weights_from_vertex_weighting(
    g: WeightedBipartiteGraph, nu: dict[str, float], d: float | None = None, tol: float = FP_TOL
) -> dict[str, float]:
    """``w(e) = nu(t(e)) / nu(s(e))``, after checking the Frobenius-Perron condition."""
    for v in g.vertices:
        if v not in nu or not nu[v] > 0:
            raise GraphError(f"vertex weighting is missing or non-positive at {v!r}")
    if d is None:
        d = infer_fp_modulus(g, nu)
    worst = max(fp_defect(g, nu, d).items(), key=lambda kv: abs(kv[1]))
    if abs(worst[1]) > tol * max(1.0, d * nu[worst[0]]):
        raise GraphError(f"Frobenius-Perron condition fails at {worst[0]!r} (defect {worst[1]:.3e})")
    return {e.id: nu[e.dst] / nu[e.src] for e in g.edges}


def infer_fp_modulus(g: WeightedBipartiteGraph, nu: dict[str, float]) -> float:
    p = g.vertices[0]
    return sum(nu[e.dst] for e in g.out_edges(p)) / nu[p]


def infer_modulus(g: WeightedBipartiteGraph) -> float:
    """Common outgoing weight sum, taken at the first vertex with edges."""
    for v in g.vertices:
        out = g.out_edges(v)
        if out:
            return float(sum(g.weight[e.id] for e in out))
    raise GraphError("graph has no edges")


# ------------------------------------------------------------------ checks


def check_balanced(g: WeightedBipartiteGraph, tol: float = 1e-10) -> Report:
    rep = Report("balance")
    worst, where = 0.0, ""
    for e in g.edges:
        dev = abs(g.weight[e.id] * g.weight[g.bar[e.id]] - 1.0)
        if dev > worst:
            worst, where = dev, e.id
    rep.add("balanced: w(e) w(bar e) = 1", worst, tol, f"worst edge {where}" if where else "")
    return rep


def check_fair(g: WeightedBipartiteGraph, d: float | None = None, tol: float = 1e-9) -> Report:
    """Fairness at every vertex, balance, and the local finiteness bound ``deg <= d^2``."""
    if d is None:
        d = infer_modulus(g)
    rep = Report(f"fair graph at d={d:.12g}")
    missing = [e.id for e in g.edges if e.id not in g.weight]
    if missing:
        raise GraphError(f"edges without weights: {missing[:3]}")
    worst, where = 0.0, ""
    for v in g.vertices:
        s = sum(g.weight[e.id] for e in g.out_edges(v))
        if abs(s - d) > worst:
            worst, where = abs(s - d), v
    rep.add("fair: outgoing weights sum to d", worst, tol, f"worst vertex {where}" if where else "")
    rep.extend(check_balanced(g, tol))
    over = max((g.degree(v) - d * d for v in g.vertices), default=0.0)
    rep.add("local finiteness: degree <= d^2", max(0.0, over), tol)
    return rep


# ------------------------------------------------------------------ square-partite graphs


CORNERS = ("v00", "v01", "v10", "v11")


@dataclass
class SquarePartiteGraph:
    """``K0 = lambda0: V00 -> V10``, ``K1 = lambda1: V01 -> V11``,
    ``L0 = omega0: V00 -> V01``, ``L1 = omega1: V10 -> V11``."""

    lambda0: WeightedBipartiteGraph
    lambda1: WeightedBipartiteGraph
    omega0: WeightedBipartiteGraph
    omega1: WeightedBipartiteGraph
    names: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        pairs = {
            "lambda0/omega0 share V00": (self.lambda0.v0, self.omega0.v0),
            "lambda0/omega1 share V10": (self.lambda0.v1, self.omega1.v0),
            "lambda1/omega0 share V01": (self.lambda1.v0, self.omega0.v1),
            "lambda1/omega1 share V11": (self.lambda1.v1, self.omega1.v1),
        }
        for label, (a, b) in pairs.items():
            if list(a) != list(b):
                raise GraphError(f"corner mismatch: {label}")

    @property
    def v00(self) -> list[str]:
        return self.lambda0.v0

    @property
    def v10(self) -> list[str]:
        return self.lambda0.v1

    @property
    def v01(self) -> list[str]:
        return self.lambda1.v0

    @property
    def v11(self) -> list[str]:
        return self.lambda1.v1

    def graphs(self) -> dict[str, WeightedBipartiteGraph]:
        return {"lambda0": self.lambda0, "lambda1": self.lambda1, "omega0": self.omega0, "omega1": self.omega1}


def _count(g: WeightedBipartiteGraph, u: str, v: str) -> int:
    return len(g.edges_between(u, v))


def check_associative(sq: SquarePartiteGraph) -> Report:
    """Length-2 path counts agree both ways around the square for opposite corners."""
    rep = Report("square-partite associativity")
    bad = []
    for p in sq.v00:
        for r in sq.v11:
            via_k = sum(_count(sq.lambda0, p, s) * _count(sq.omega1, s, r) for s in sq.v10)
            via_l = sum(_count(sq.omega0, p, q) * _count(sq.lambda1, q, r) for q in sq.v01)
            if via_k != via_l:
                bad.append(f"({p},{r})")
    for q in sq.v01:
        for s in sq.v10:
            via_p = sum(_count(sq.omega0, q, p) * _count(sq.lambda0, p, s) for p in sq.v00)
            via_r = sum(_count(sq.lambda1, q, r) * _count(sq.omega1, r, s) for r in sq.v11)
            if via_p != via_r:
                bad.append(f"({q},{s})")
    rep.add("associative: equal 2-path counts around the square", float(len(bad)), 0.5, " ".join(bad[:5]))
    return rep


def check_square_fair(sq: SquarePartiteGraph, d0: float | None = None, d1: float | None = None, tol: float = 1e-9) -> Report:
    """Balanced ``(d0, d1)``-fairness: the K graphs at ``d0``, the L graphs at ``d1``."""
    d0 = infer_modulus(sq.lambda0) if d0 is None else d0
    d1 = infer_modulus(sq.omega0) if d1 is None else d1
    rep = Report(f"square-partite fairness (d0={d0:.6g}, d1={d1:.6g})")
    for name, g, d in (("lambda0", sq.lambda0, d0), ("lambda1", sq.lambda1, d0),
                       ("omega0", sq.omega0, d1), ("omega1", sq.omega1, d1)):
        rep.extend(check_fair(g, d, tol), prefix=f"{name}: ")
    return rep


# ------------------------------------------------------------------ serialization


def graph_to_json(g: WeightedBipartiteGraph) -> dict:
    return {
        "v0": list(g.v0),
        "v1": list(g.v1),
        "edges": [{"id": e.id, "src": e.src, "dst": e.dst, "w": repr(float(g.weight[e.id]))} for e in g.edges],
        "bar": dict(g.bar),
    }


def _parse_weight(raw, where: str) -> float:
    try:
        w = float(raw)
    except (TypeError, ValueError) as exc:
        raise GraphError(f"{where}: weight {raw!r} is not a number") from exc
    return w


def graph_from_json(data: dict, where: str = "graph", apply_nu: bool = True) -> WeightedBipartiteGraph:
    """Parse the graph schema; ``nu`` at top level replaces per-edge ``w``.

    With ``apply_nu=False`` the weighting is left to the caller (see :func:`nu_from_json`).
    """
    if not isinstance(data, dict):
        raise GraphError(f"{where}: expected an object")
    for key in ("v0", "v1", "edges", "bar"):
        if key not in data:
            raise GraphError(f"{where}: missing key {key!r}")
    edges = []
    weight: dict[str, float] = {}
    for k, raw in enumerate(data["edges"]):
        loc = f"{where}.edges[{k}]"
        if not isinstance(raw, dict):
            raise GraphError(f"{loc}: expected an object")
        for key in ("id", "src", "dst"):
            if key not in raw:
                raise GraphError(f"{loc}: missing key {key!r}")
        e = Edge(str(raw["id"]), str(raw["src"]), str(raw["dst"]))
        edges.append(e)
        if "w" in raw:
            weight[e.id] = _parse_weight(raw["w"], loc)
    bar = {str(k): str(v) for k, v in data["bar"].items()}
    g = WeightedBipartiteGraph([str(v) for v in data["v0"]], [str(v) for v in data["v1"]], edges, weight, bar)
    if "nu" in data:
        if apply_nu:
            g = g.with_weights(edge_weights_from_vertex_weighting(g, nu_from_json(data, where)))
    elif len(weight) != len(edges):
        raise GraphError(f"{where}: every edge needs a weight 'w' unless 'nu' is given")
    return g


def nu_from_json(data: dict, where: str = "graph") -> dict[str, float] | None:
    if not isinstance(data, dict) or "nu" not in data:
        return None
    if not isinstance(data["nu"], dict):
        raise GraphError(f"{where}.nu: expected an object")
    return {str(k): _parse_weight(v, f"{where}.nu[{k}]") for k, v in data["nu"].items()}


def square_from_json(data: dict) -> SquarePartiteGraph:
    if not isinstance(data, dict):
        raise GraphError("square-partite graph: expected an object")
    parts = {}
    for key in ("lambda0", "lambda1", "omega0", "omega1"):
        if key not in data:
            raise GraphError(f"square-partite graph: missing key {key!r}")
        parts[key] = graph_from_json(data[key], key)
    return SquarePartiteGraph(**parts)


def square_to_json(sq: SquarePartiteGraph) -> dict:
    return {k: graph_to_json(g) for k, g in sq.graphs().items()}


def graph_to_dot(g: WeightedBipartiteGraph, name: str = "G") -> str:
    lines = [f"graph {name} {{"]
    for v in g.v0:
        lines.append(f'  "{v}" [shape=circle];')
    for v in g.v1:
        lines.append(f'  "{v}" [shape=box];')
    done = set()
    for e in g.edges:
        if e.id in done or e.src not in g.v0:
            continue
        b = g.bar[e.id]
        done.update({e.id, b})
        w = g.weight.get(e.id)
        label = f' [label="{w:.4g}/{g.weight[b]:.4g}"]' if w is not None else ""
        lines.append(f'  "{e.src}" -- "{e.dst}"{label};')
    lines.append("}")
    return "\n".join(lines)


def square_to_dot(sq: SquarePartiteGraph, name: str = "Gamma") -> str:
    lines = [f"graph {name} {{"]
    for corner, verts in (("00", sq.v00), ("01", sq.v01), ("10", sq.v10), ("11", sq.v11)):
        lines.append(f"  subgraph cluster_{corner} {{ label=\"V{corner}\";")
        for v in verts:
            lines.append(f'    "V{corner}:{v}";')
        lines.append("  }")
    for gname, g, (a, b), color in (
        ("lambda0", sq.lambda0, ("00", "10"), "black"),
        ("lambda1", sq.lambda1, ("01", "11"), "black"),
        ("omega0", sq.omega0, ("00", "01"), "red"),
        ("omega1", sq.omega1, ("10", "11"), "red"),
    ):
        done = set()
        for e in g.edges:
            if e.id in done or e.src not in g.v0:
                continue
            done.update({e.id, g.bar[e.id]})
            lines.append(f'  "V{a}:{e.src}" -- "V{b}:{e.dst}" [color={color}, label="{gname}"];')
    lines.append("}")
    return "\n".join(lines)
