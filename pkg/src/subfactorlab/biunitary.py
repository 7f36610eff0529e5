"""Biunitary connections on square-partite graphs and the Markov lattices they define.

A connection is a bigraded operator ``phi: K0 (x) L1 -> L0 (x) K1`` where
``K0 = lambda0: V00 -> V10``, ``K1 = lambda1: V01 -> V11``,
``L0 = omega0: V00 -> V01`` and ``L1 = omega1: V10 -> V11``.  Blocks are
indexed by ``(p, r)`` with ``p`` in ``V00`` and ``r`` in ``V11``; columns are
``K0 L1`` routes and rows are ``L0 K1`` routes.

The Markov lattice of a connection is the path model
``M_{i,j} = End(C^{P0} (x) K^{alt i} (x) L^{alt j})``.  Horizontal inclusions
append an ``L`` strand.  Vertical inclusions append a ``K`` strand after moving
it to the right through the ``L`` strands, using the crossing determined by the
corner on its left: ``phi`` at ``V00``, ``(phi^r)^+`` at ``V10``, ``phi^{r^2}``
at ``V11`` and ``(phi^{r^3})^+`` at ``V01``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bighilb import (
    BigradedOp,
    BigradedSpace,
    DualityData,
    ShapeError,
    _blockwise_distance,
    bar_label,
    dual,
    duality_from_weighting,
    identity,
    random_unitary,
    tensor_op_many,
    tensor_ops,
    tensor_spaces,
    unitarity_defect,
)
from .markov_tower import (
    MarkovTower,
    MatrixAlgebra,
    TowerDecomposition,
    TowerError,
    bratteli_from_chain,
    path_matrix_units,
    verify_markov_axioms,
    verify_standard_module,
)
from .report import Report
from .weighted_graph import (
    Edge,
    GraphError,
    SquarePartiteGraph,
    WeightedBipartiteGraph,
    check_associative,
    edge_weights_from_vertex_weighting,
    graph_from_undirected,
    infer_modulus,
    square_from_json,
    square_to_dot,
    square_to_json,
)

GRID_CAP = 4
DIM_CAP = 64


# ------------------------------------------------------------------ connections


@dataclass
class ConnectionData:
    sq: SquarePartiteGraph
    phi: BigradedOp
    duality: dict[str, DualityData] = field(default_factory=dict)
    base: str | None = None

    def __post_init__(self) -> None:
        if not self.duality:
            self.duality = {k: duality_from_weighting(g) for k, g in self.sq.graphs().items()}
        if not self.phi.source.same_shape(self.source) or not self.phi.target.same_shape(self.target):
            raise ShapeError("phi must map K0 (x) L1 to L0 (x) K1")

    @property
    def K0(self) -> BigradedSpace:
        return self.duality["lambda0"].K

    @property
    def K1(self) -> BigradedSpace:
        return self.duality["lambda1"].K

    @property
    def L0(self) -> BigradedSpace:
        return self.duality["omega0"].K

    @property
    def L1(self) -> BigradedSpace:
        return self.duality["omega1"].K

    @property
    def source(self) -> BigradedSpace:
        return tensor_spaces(self.K0, self.L1)

    @property
    def target(self) -> BigradedSpace:
        return tensor_spaces(self.L0, self.K1)

    @property
    def d0(self) -> float:
        return infer_modulus(self.sq.lambda0)

    @property
    def d1(self) -> float:
        return infer_modulus(self.sq.omega0)

    @cached_property
    def edges(self) -> dict[str, Edge]:
        out: dict[str, Edge] = {}
        for name, g in self.sq.graphs().items():
            for e in g.edges:
                if e.id in out and out[e.id] != e:
                    raise GraphError(f"edge id {e.id!r} is reused with different endpoints ({name})")
                out[e.id] = e
        return out

    @cached_property
    def weight(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for g in self.sq.graphs().values():
            out.update(g.weight)
        return out

    @cached_property
    def bar(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for g in self.sq.graphs().values():
            out.update(g.bar)
        return out

    def label_weight(self, label: tuple) -> float:
        w = 1.0
        for a in label:
            w *= self.weight[a]
        return w


def _spaces(sq: SquarePartiteGraph) -> tuple[dict[str, DualityData], BigradedSpace, BigradedSpace]:
    dd = {k: duality_from_weighting(g) for k, g in sq.graphs().items()}
    src = tensor_spaces(dd["lambda0"].K, dd["omega1"].K)
    tgt = tensor_spaces(dd["omega0"].K, dd["lambda1"].K)
    return dd, src, tgt


def connection_from_blocks(sq: SquarePartiteGraph, blocks: dict[tuple[str, str], np.ndarray], base: str | None = None) -> ConnectionData:
    dd, src, tgt = _spaces(sq)
    return ConnectionData(sq, BigradedOp(src, tgt, dict(blocks)), dd, base)


def _entries(f: BigradedOp):
    """Yield ``(key, row label, col label, value)`` over nonzero entries."""
    for key, m in f.blocks.items():
        rows, cols = f.target.labels(key), f.source.labels(key)
        for a, b in zip(*np.nonzero(np.abs(m) > 0)):
            yield key, rows[a], cols[b], m[a, b]


def _assemble(source: BigradedSpace, target: BigradedSpace, entries: dict) -> BigradedOp:
    blocks: dict = {}
    for (key, row, col), val in entries.items():
        if key not in blocks:
            blocks[key] = np.zeros((target.dim(key), source.dim(key)), dtype=complex)
        blocks[key][target.index(key)[row], source.index(key)[col]] += val
    return BigradedOp(source, target, blocks)


def mate(c: ConnectionData, f: BigradedOp) -> BigradedOp:
    """The dual morphism ``f-bar: bar(target) -> bar(source)`` built from the weighted ev/coev:
    ``f-bar[bar a, bar b] = w(a)^{1/2} w(bar b)^{1/2} f[b, a]``."""
    src, tgt = dual(f.target), dual(f.source)
    entries = {}
    for (u, v), row, col, val in _entries(f):
        rb, cb = bar_label(row, c.bar), bar_label(col, c.bar)
        scale = np.sqrt(c.label_weight(col) * c.label_weight(rb))
        entries[((v, u), cb, rb)] = scale * val
    return _assemble(src, tgt, entries)


def rotated_square(sq: SquarePartiteGraph) -> SquarePartiteGraph:
    """``K0' = L1``, ``K1' = L0``, ``L0' = bar K0``, ``L1' = bar K1``."""
    return SquarePartiteGraph(
        lambda0=sq.omega1,
        lambda1=sq.omega0,
        omega0=sq.lambda0.reversed_parts(),
        omega1=sq.lambda1.reversed_parts(),
    )


def rotate_90(c: ConnectionData) -> ConnectionData:
    """``phi^r: L1 (x) bar K1 -> bar K0 (x) L0`` with
    ``phi^r[(bar k0, l), (l1, bar k)] = w(bar k0)^{1/2} w(k)^{1/2} phi[(l, k), (k0, l1)]``."""
    sq = rotated_square(c.sq)
    dd = {
        "lambda0": c.duality["omega1"],
        "lambda1": c.duality["omega0"],
        "omega0": duality_from_weighting(sq.omega0),
        "omega1": duality_from_weighting(sq.omega1),
    }
    src = tensor_spaces(dd["lambda0"].K, dd["omega1"].K)
    tgt = tensor_spaces(dd["omega0"].K, dd["lambda1"].K)
    entries = {}
    for _, (l, k), (k0, l1), val in _entries(c.phi):
        kb0, kb = c.bar[k0], c.bar[k]
        key = (c.edges[k0].dst, c.edges[k].src)
        scale = np.sqrt(c.weight[kb0] * c.weight[k])
        entries[(key, (kb0, l), (l1, kb))] = scale * val
    return ConnectionData(sq, _assemble(src, tgt, entries), dd)


def rotate(c: ConnectionData, times: int) -> ConnectionData:
    for _ in range(times % 4):
        c = rotate_90(c)
    return c


def _op_distance(a: BigradedOp, b: BigradedOp) -> float:
    if not (a.source.same_shape(b.source) and a.target.same_shape(b.target)):
        return float("inf")
    return _blockwise_distance(a, b)


def check_biunitary(c: ConnectionData, tol: float = 1e-9) -> Report:
    """Vertical unitarity, both horizontal cap/cup identities, and unitarity of ``phi^r``."""
    rep = Report("biunitary connection")
    rep.extend(check_associative(c.sq))
    if not rep.passed:
        return rep
    phi = c.phi
    dd = c.duality
    rep.add("vertical: phi^+ phi = 1 and phi phi^+ = 1", unitarity_defect(phi), tol)
    pbar_dag = mate(c, phi).dagger
    K0, L0, K1, L1 = c.K0, c.L0, c.K1, c.L1
    lhs = (
        tensor_op_many([identity(L0), dd["lambda1"].ev_Kbar, identity(dual(L0))])
        @ tensor_ops(phi, pbar_dag)
        @ tensor_op_many([identity(K0), dd["omega1"].coev_K, identity(dual(K0))])
    )
    rhs = dd["omega0"].coev_K @ dd["lambda0"].ev_Kbar
    rep.add("horizontal: (1 ev 1)(phi (x) phibar^+)(1 coev 1) = coev_L0 ev_Kbar0", _op_distance(lhs, rhs), tol)
    lhs2 = (
        tensor_op_many([identity(dual(K1)), dd["omega0"].ev_K, identity(K1)])
        @ tensor_ops(pbar_dag, phi)
        @ tensor_op_many([identity(dual(L1)), dd["lambda0"].coev_Kbar, identity(L1)])
    )
    rhs2 = dd["lambda1"].coev_Kbar @ dd["omega1"].ev_K
    rep.add("horizontal: (1 ev 1)(phibar^+ (x) phi)(1 coev 1) = coev_Kbar1 ev_L1", _op_distance(lhs2, rhs2), tol)
    rep.add("rotation phi^r is unitary", unitarity_defect(rotate_90(c).phi), tol)
    return rep


def check_rotations(c: ConnectionData, tol: float = 1e-9) -> Report:
    """``r^4 = id``, ``r^2 = phi-bar`` and unitarity of the four rotations."""
    rep = Report("rotation")
    rots = [c]
    for _ in range(4):
        rots.append(rotate_90(rots[-1]))
    rep.add("r^4 = id", _op_distance(rots[4].phi, c.phi), tol)
    rep.add("r^2 = phi-bar", _op_distance(rots[2].phi, mate(c, c.phi)), tol)
    worst = max(max(unitarity_defect(r.phi), unitarity_defect(r.phi.dagger)) for r in rots[:4])
    rep.add("all rotations are unitary", worst, tol)
    return rep


def apply_gauge(c: ConnectionData, u1: BigradedOp, u2: BigradedOp, u3: BigradedOp, u4: BigradedOp, tol: float = 1e-9) -> ConnectionData:
    """``(u2 (x) u3) phi (u1 (x) u4)`` with ``u1`` on K0, ``u2`` on L0, ``u3`` on K1, ``u4`` on L1.

    The gauges must commute with the edge weights so the duality data is unchanged; this holds
    whenever parallel edges carry equal weights, for instance under a vertex weighting.
    """
    for name, u, space in (("u1", u1, c.K0), ("u2", u2, c.L0), ("u3", u3, c.K1), ("u4", u4, c.L1)):
        if not (u.source.same_shape(space) and u.target.same_shape(space)):
            raise ShapeError(f"gauge {name} does not act on its generator")
        if unitarity_defect(u) > tol:
            raise ValueError(f"gauge {name} is not unitary")
    phi = tensor_ops(u2, u3) @ c.phi @ tensor_ops(u1, u4)
    return ConnectionData(c.sq, phi, c.duality, c.base)


def random_gauge(c: ConnectionData, rng: np.random.Generator) -> tuple[BigradedOp, BigradedOp, BigradedOp, BigradedOp]:
    u1, u2, u3, u4 = (random_unitary(s, rng) for s in (c.K0, c.L0, c.K1, c.L1))
    return u1, u2, u3, u4


def singular_value_invariants(c: ConnectionData, digits: int = 8) -> list[tuple[float, ...]]:
    """Sorted multiset of per-block singular value tuples: a gauge invariant."""
    out = []
    for m in c.phi.blocks.values():
        s = np.linalg.svd(m, compute_uv=False)
        out.append(tuple(sorted(round(float(x), digits) for x in s)))
    return sorted(out)


def compare_invariants(a: ConnectionData, b: ConnectionData) -> float:
    """Largest gap between matched singular values; inf if the block structure differs."""
    sa = sorted(tuple(sorted(np.linalg.svd(m, compute_uv=False))) for m in a.phi.blocks.values())
    sb = sorted(tuple(sorted(np.linalg.svd(m, compute_uv=False))) for m in b.phi.blocks.values())
    if [len(x) for x in sa] != [len(x) for x in sb]:
        return float("inf")
    return max((abs(x - y) for u, v in zip(sa, sb) for x, y in zip(u, v)), default=0.0)


# ------------------------------------------------------------------ examples


def trivial_connection(theta: float = 0.0) -> ConnectionData:
    """All corners singletons, single edges of weight 1, ``phi = exp(i theta)``."""
    sq = SquarePartiteGraph(
        lambda0=graph_from_undirected(["a"], ["b"], [("a", "b")], {("a", "b"): 1.0}),
        lambda1=graph_from_undirected(["c"], ["e"], [("c", "e")], {("c", "e"): 1.0}),
        omega0=graph_from_undirected(["a"], ["c"], [("a", "c")], {("a", "c"): 1.0}),
        omega1=graph_from_undirected(["b"], ["e"], [("b", "e")], {("b", "e"): 1.0}),
    )
    return connection_from_blocks(sq, {("a", "e"): np.array([[np.exp(1j * theta)]])}, base="a")


def _product_graph(g: WeightedBipartiteGraph, fixed: list[str], along_first: bool, v0: list[str], v1: list[str]) -> WeightedBipartiteGraph:
    edges, weight, bar = [], {}, {}
    for e in g.edges:
        for y in fixed:
            if along_first:
                eid, src, dst, b = f"{e.id}@{y}", f"{e.src}|{y}", f"{e.dst}|{y}", f"{g.bar[e.id]}@{y}"
            else:
                eid, src, dst, b = f"{y}@{e.id}", f"{y}|{e.src}", f"{y}|{e.dst}", f"{y}@{g.bar[e.id]}"
            edges.append(Edge(eid, src, dst))
            weight[eid] = g.weight[e.id]
            bar[eid] = b
    return WeightedBipartiteGraph(v0, v1, edges, weight, bar)


def product_connection(g: WeightedBipartiteGraph, h: WeightedBipartiteGraph, base: str | None = None) -> ConnectionData:
    """The flip connection of the tensor product lattice ``M_{i,j} = M_i (x) M_j``."""
    def prod(a, b):
        return [f"{x}|{y}" for x in a for y in b]

    v00, v10, v01, v11 = prod(g.v0, h.v0), prod(g.v1, h.v0), prod(g.v0, h.v1), prod(g.v1, h.v1)
    sq = SquarePartiteGraph(
        lambda0=_product_graph(g, h.v0, True, v00, v10),
        lambda1=_product_graph(g, h.v1, True, v01, v11),
        omega0=_product_graph(h, g.v0, False, v00, v01),
        omega1=_product_graph(h, g.v1, False, v10, v11),
    )
    entries = {}
    for a in g.edges:
        if a.src not in g.v0:
            continue
        for b in h.edges:
            if b.src not in h.v0:
                continue
            p, r = f"{a.src}|{b.src}", f"{a.dst}|{b.dst}"
            col = (f"{a.id}@{b.src}", f"{a.dst}@{b.id}")
            row = (f"{a.src}@{b.id}", f"{a.id}@{b.dst}")
            entries[((p, r), row, col)] = 1.0
    dd, src, tgt = _spaces(sq)
    return ConnectionData(sq, _assemble(src, tgt, entries), dd, base or f"{g.v0[0]}|{h.v0[0]}")


def square_a3_graph() -> SquarePartiteGraph:
    """``V00 = {p1, p2}``, ``V10 = {p3}``, ``V01 = {p6}``, ``V11 = {p4, p5}``; every generator is ``A_3``."""
    nu = {"p1": 1.0, "p2": 1.0, "p3": np.sqrt(2.0), "p6": np.sqrt(2.0), "p4": 1.0, "p5": 1.0}

    def part(v0, v1, pairs):
        g = graph_from_undirected(v0, v1, pairs)
        return g.with_weights(edge_weights_from_vertex_weighting(g, nu))

    return SquarePartiteGraph(
        lambda0=part(["p1", "p2"], ["p3"], [("p1", "p3"), ("p2", "p3")]),
        lambda1=part(["p6"], ["p4", "p5"], [("p6", "p4"), ("p6", "p5")]),
        omega0=part(["p1", "p2"], ["p6"], [("p1", "p6"), ("p2", "p6")]),
        omega1=part(["p3"], ["p4", "p5"], [("p3", "p4"), ("p3", "p5")]),
    )


def square_a3_connection(signs: tuple[float, float, float, float] = (1.0, 1.0, 1.0, -1.0)) -> ConnectionData:
    """A connection on :func:`square_a3_graph` with ``1 x 1`` blocks
    ``(p1,p4), (p1,p5), (p2,p4), (p2,p5)``; the default signs give the Hadamard connection."""
    keys = [("p1", "p4"), ("p1", "p5"), ("p2", "p4"), ("p2", "p5")]
    return connection_from_blocks(square_a3_graph(), {k: np.array([[s]], dtype=complex) for k, s in zip(keys, signs)}, base="p1")


# ------------------------------------------------------------------ JSON / DOT


def connection_to_json(c: ConnectionData) -> dict:
    data = square_to_json(c.sq)
    blocks = []
    for (p, r), m in sorted(c.phi.blocks.items()):
        blocks.append({
            "p": p,
            "r": r,
            "rows": [list(x) for x in c.phi.target.labels((p, r))],
            "cols": [list(x) for x in c.phi.source.labels((p, r))],
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
        })
    data["phi"] = blocks
    if c.base is not None:
        data["base"] = c.base
    return data


def connection_from_json(data: dict) -> ConnectionData:
    sq = square_from_json(data)
    if "phi" not in data or not isinstance(data["phi"], list):
        raise GraphError("connection: missing list 'phi'")
    dd, src, tgt = _spaces(sq)
    blocks = {}
    for n, blk in enumerate(data["phi"]):
        loc = f"phi[{n}]"
        if not isinstance(blk, dict):
            raise GraphError(f"{loc}: expected an object")
        for key in ("p", "r", "rows", "cols", "entries"):
            if key not in blk:
                raise GraphError(f"{loc}: missing key {key!r}")
        key = (str(blk["p"]), str(blk["r"]))
        rows = [tuple(map(str, x)) for x in blk["rows"]]
        cols = [tuple(map(str, x)) for x in blk["cols"]]
        if sorted(rows) != sorted(tgt.labels(key)) or sorted(cols) != sorted(src.labels(key)):
            raise ShapeError(f"{loc}: rows/cols do not match the L0 K1 and K0 L1 routes from {key[0]} to {key[1]}")
        try:
            raw = np.array(blk["entries"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise GraphError(f"{loc}: entries must be [re, im] pairs") from exc
        if raw.shape != (len(rows), len(cols), 2):
            raise ShapeError(f"{loc}: entries have shape {raw.shape}, expected {(len(rows), len(cols), 2)}")
        m = np.zeros((len(rows), len(cols)), dtype=complex)
        ri, ci = tgt.index(key), src.index(key)
        for a, rl in enumerate(rows):
            for b, cl in enumerate(cols):
                m[ri[rl], ci[cl]] = raw[a, b, 0] + 1j * raw[a, b, 1]
        blocks[key] = m
    base = data.get("base")
    return ConnectionData(sq, BigradedOp(src, tgt, blocks), dd, None if base is None else str(base))


def connection_to_dot(c: ConnectionData, name: str = "Gamma") -> str:
    return square_to_dot(c.sq, name)


# ------------------------------------------------------------------ Markov lattice


@dataclass
class _PathSpace:
    paths: list[tuple]
    index: dict[tuple, int]
    ends: list[str]

    @property
    def dim(self) -> int:
        return len(self.paths)

    def blocks(self) -> list[np.ndarray]:
        groups: dict[str, list[int]] = {}
        for k, v in enumerate(self.ends):
            groups.setdefault(v, []).append(k)
        return [np.array(groups[v]) for v in sorted(groups)]


class _PathModel:
    """Paths from the base following a ``K``/``L`` pattern, and the crossings between patterns."""

    def __init__(self, c: ConnectionData, base: str) -> None:
        sq = c.sq
        if base not in sq.v00:
            raise GraphError(f"base {base!r} is not a V00 vertex")
        self.c, self.base = c, base
        self.corner = {}
        for name, verts in (("00", sq.v00), ("10", sq.v10), ("01", sq.v01), ("11", sq.v11)):
            for v in verts:
                self.corner[v] = name
        self.k_out: dict[str, list[Edge]] = {}
        self.l_out: dict[str, list[Edge]] = {}
        for v, corner in self.corner.items():
            kg = sq.lambda0 if corner in ("00", "10") else sq.lambda1
            lg = sq.omega0 if corner in ("00", "01") else sq.omega1
            self.k_out[v] = kg.out_edges(v)
            self.l_out[v] = lg.out_edges(v)
        r1 = rotate_90(c)
        r2 = rotate_90(r1)
        r3 = rotate_90(r2)
        self.cross = {"00": c.phi, "10": r1.phi.dagger, "11": r2.phi, "01": r3.phi.dagger}
        self._spaces: dict[str, _PathSpace] = {}
        self._crossings: dict[tuple[str, int], np.ndarray] = {}

    def space(self, pattern: str) -> _PathSpace:
        if pattern not in self._spaces:
            cur = [((), self.base)]
            for s in pattern:
                nxt = []
                for path, v in cur:
                    for e in (self.k_out if s == "K" else self.l_out)[v]:
                        nxt.append((path + (e.id,), e.dst))
                cur = nxt
            paths = [p for p, _ in cur]
            if len(paths) > DIM_CAP:
                raise TowerError(f"path space {pattern} has dimension {len(paths)} > {DIM_CAP}")
            self._spaces[pattern] = _PathSpace(paths, {p: k for k, p in enumerate(paths)}, [v for _, v in cur])
        return self._spaces[pattern]

    def start(self, path: tuple, t: int) -> str:
        return self.base if t == 0 else self.c.edges[path[t - 1]].dst

    def crossing(self, pattern: str, t: int) -> np.ndarray:
        """``KL -> LK`` at steps ``t, t+1``."""
        key = (pattern, t)
        if key not in self._crossings:
            if pattern[t:t + 2] != "KL":
                raise ValueError("crossing needs a K step followed by an L step")
            new = pattern[:t] + "LK" + pattern[t + 2:]
            hs, ht = self.space(pattern), self.space(new)
            out = np.zeros((ht.dim, hs.dim), dtype=complex)
            for col, path in enumerate(hs.paths):
                v = self.start(path, t)
                op = self.cross[self.corner[v]]
                blk = (v, self.c.edges[path[t + 1]].dst)
                if blk not in op.blocks:
                    continue
                j = op.source.index(blk)[path[t:t + 2]]
                m = op.blocks[blk]
                for i, lbl in enumerate(op.target.labels(blk)):
                    if abs(m[i, j]) > 0:
                        out[ht.index[path[:t] + lbl + path[t + 2:]], col] += m[i, j]
            self._crossings[key] = out
        return self._crossings[key]

    def mover(self, i: int, j: int) -> np.ndarray:
        """``W: K^{i+1} L^j -> K^i L^j K`` moving the last K strand to the right."""
        pattern = "K" * (i + 1) + "L" * j
        w = np.eye(self.space(pattern).dim, dtype=complex)
        for t in range(i, i + j):
            w = self.crossing(pattern, t) @ w
            pattern = pattern[:t] + "LK" + pattern[t + 2:]
        return w

    def append_maps(self, pattern: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Parent matrix ``P[child, parent]``, same-last-step mask and last-step weights for ``pattern``."""
        child, parent = self.space(pattern), self.space(pattern[:-1])
        p = np.zeros((child.dim, parent.dim))
        for k, path in enumerate(child.paths):
            p[k, parent.index[path[:-1]]] = 1.0
        last = np.array([path[-1] for path in child.paths])
        mask = last[:, None] == last[None, :]
        w = np.array([self.c.weight[a] for a in last])
        return p, mask, w

    def cup_cap(self, pattern: str, t: int, d: float) -> np.ndarray:
        h = self.space(pattern)
        groups: dict[tuple, list[tuple[int, float]]] = {}
        for k, path in enumerate(h.paths):
            a, b = path[t], path[t + 1]
            if self.c.bar[a] != b:
                continue
            groups.setdefault((path[:t], path[t + 2:]), []).append((k, np.sqrt(self.c.weight[a])))
        out = np.zeros((h.dim, h.dim), dtype=complex)
        for entries in groups.values():
            idx = np.array([k for k, _ in entries])
            amp = np.array([x for _, x in entries])
            out[np.ix_(idx, idx)] += np.outer(amp, amp) / d
        return out


def _pattern(i: int, j: int) -> str:
    return "K" * i + "L" * j


@dataclass
class MarkovLattice:
    """Grid ``M_{i,j}``, ``0 <= i <= i_max``, ``0 <= j <= j_max``, in the path model of a connection."""

    connection: ConnectionData
    base: str
    i_max: int
    j_max: int
    model: _PathModel
    f_override: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def d0(self) -> float:
        return self.connection.d0

    @property
    def d1(self) -> float:
        return self.connection.d1

    def space(self, i: int, j: int) -> _PathSpace:
        return self.model.space(_pattern(i, j))

    def algebra(self, i: int, j: int) -> MatrixAlgebra:
        h = self.space(i, j)
        return MatrixAlgebra(h.dim, blocks=h.blocks())

    def block_sizes(self) -> dict[tuple[int, int], list[int]]:
        return {(i, j): sorted(len(b) for b in self.space(i, j).blocks()) for i in range(self.i_max + 1) for j in range(self.j_max + 1)}

    def include_h(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        p, mask, _ = self.model.append_maps(_pattern(i, j + 1))
        return (p @ x @ p.T) * mask

    def include_v(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        p, mask, _ = self.model.append_maps(_pattern(i, j) + "K")
        w = self.model.mover(i, j)
        return w.conj().T @ ((p @ x @ p.T) * mask) @ w

    def expect_r(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        """``E^r: M_{i,j} -> M_{i,j-1}``, capping the last L strand."""
        p, mask, w = self.model.append_maps(_pattern(i, j))
        return p.T @ (x * mask * w[None, :]) @ p / self.d1

    def expect_l(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        """``E^l: M_{i,j} -> M_{i-1,j}``, moving the last K strand right and capping it."""
        mv = self.model.mover(i - 1, j)
        y = mv @ x @ mv.conj().T
        p, mask, w = self.model.append_maps(_pattern(i - 1, j) + "K")
        return p.T @ (y * mask * w[None, :]) @ p / self.d0

    def e(self, i: int, j: int) -> np.ndarray:
        """Vertical Jones projection ``e_i`` in ``M_{i+1,j}``."""
        return self.model.cup_cap(_pattern(i + 1, j), i - 1, self.d0)

    def f(self, j: int, i: int) -> np.ndarray:
        """Horizontal Jones projection ``f_j`` in ``M_{i,j+1}``."""
        if (j, i) in self.f_override:
            return self.f_override[(j, i)]
        return self.model.cup_cap(_pattern(i, j + 1), i + j - 1, self.d1)

    def with_f(self, j: int, i: int, value: np.ndarray) -> "MarkovLattice":
        out = copy.copy(self)
        out.f_override = {**self.f_override, (j, i): value}
        return out

    def include_route(self, x: np.ndarray, start: tuple[int, int], route: list[tuple[int, int]]) -> np.ndarray:
        i, j = start
        for a, b in route:
            if (a, b) == (i + 1, j):
                x = self.include_v(i, j, x)
            elif (a, b) == (i, j + 1):
                x = self.include_h(i, j, x)
            else:
                raise ValueError(f"route step {(i, j)} -> {(a, b)} is not an inclusion")
            i, j = a, b
        return x

    def trace(self, i: int, j: int, x: np.ndarray) -> complex:
        """The lattice trace: compose expectations down to ``M_{0,0} = C``."""
        for jj in range(j, 0, -1):
            x = self.expect_r(i, jj, x)
        for ii in range(i, 0, -1):
            x = self.expect_l(ii, 0, x)
        return complex(x[0, 0])

    def column_tower(self, j: int) -> MarkovTower:
        return MarkovTower(
            self.d0,
            [self.algebra(i, j) for i in range(self.i_max + 1)],
            lambda n, x: self.include_v(n, j, x),
            lambda n, x: self.expect_l(n, j, x),
            {n: self.e(n, j) for n in range(1, self.i_max)},
            name=f"column {j}",
        )

    def row_tower(self, i: int) -> MarkovTower:
        return MarkovTower(
            self.d1,
            [self.algebra(i, j) for j in range(self.j_max + 1)],
            lambda n, x: self.include_h(i, n, x),
            lambda n, x: self.expect_r(i, n, x),
            {n: self.f(n, i) for n in range(1, self.j_max)},
            name=f"row {i}",
        )


def build_markov_lattice(c: ConnectionData, base: str | None = None, i_max: int = 3, j_max: int = 3) -> MarkovLattice:
    if not (0 <= i_max <= GRID_CAP and 0 <= j_max <= GRID_CAP):
        raise TowerError(f"grid is capped at {GRID_CAP} x {GRID_CAP}")
    if not check_associative(c.sq).passed:
        raise GraphError("square-partite graph is not associative")
    base = base or c.base or c.sq.v00[0]
    lat = MarkovLattice(c, base, i_max, j_max, _PathModel(c, base))
    for i in range(i_max + 1):
        for j in range(j_max + 1):
            lat.space(i, j)
    return lat


def _dev(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def verify_lattice_axioms(m: MarkovLattice, tol: float = 1e-9, seed: int = 0, samples: int = 3, standard: bool = True) -> Report:
    """Row and column Markov towers, commuting squares, ``[e_i, f_j] = 0``, traciality and standardness."""
    rng = np.random.default_rng(seed)
    rep = Report(f"Markov lattice {m.i_max} x {m.j_max} at base {m.base}")
    for j in range(m.j_max + 1):
        rep.extend(verify_markov_axioms(m.column_tower(j), tol, seed, samples), prefix=f"column {j}: ")
    for i in range(m.i_max + 1):
        rep.extend(verify_markov_axioms(m.row_tower(i), tol, seed, samples), prefix=f"row {i}: ")
    sq_exp = sq_incl = sq_lh = sq_rv = 0.0
    for i in range(m.i_max):
        for j in range(m.j_max):
            for _ in range(samples):
                x = m.algebra(i + 1, j + 1).random(rng)
                sq_exp = max(sq_exp, _dev(m.expect_l(i + 1, j, m.expect_r(i + 1, j + 1, x)), m.expect_r(i, j + 1, m.expect_l(i + 1, j + 1, x))))
                y = m.algebra(i, j).random(rng)
                sq_incl = max(sq_incl, _dev(m.include_v(i, j + 1, m.include_h(i, j, y)), m.include_h(i + 1, j, m.include_v(i, j, y))))
                a = m.algebra(i + 1, j).random(rng)
                sq_lh = max(sq_lh, _dev(m.expect_l(i + 1, j + 1, m.include_h(i + 1, j, a)), m.include_h(i, j, m.expect_l(i + 1, j, a))))
                b = m.algebra(i, j + 1).random(rng)
                sq_rv = max(sq_rv, _dev(m.expect_r(i + 1, j + 1, m.include_v(i, j + 1, b)), m.include_v(i, j, m.expect_r(i, j + 1, b))))
    rep.add("commuting square: E^l E^r = E^r E^l", sq_exp, tol)
    rep.add("commuting square: vertical and horizontal inclusions commute", sq_incl, tol)
    rep.add("commuting square: E^l restricts along horizontal inclusions", sq_lh, tol)
    rep.add("commuting square: E^r restricts along vertical inclusions", sq_rv, tol)
    e_comp = f_comp = ef = 0.0
    for i in range(1, m.i_max):
        for j in range(m.j_max):
            e_comp = max(e_comp, _dev(m.include_h(i + 1, j, m.e(i, j)), m.e(i, j + 1)))
    for j in range(1, m.j_max):
        for i in range(m.i_max):
            f_comp = max(f_comp, _dev(m.include_v(i, j + 1, m.f(j, i)), m.f(j, i + 1)))
    for i in range(1, m.i_max):
        for j in range(1, m.j_max):
            e = m.include_h(i + 1, j, m.e(i, j))
            f = m.include_v(i, j + 1, m.f(j, i))
            ef = max(ef, _dev(e @ f, f @ e))
    rep.add("e_i is compatible with horizontal inclusions", e_comp, tol)
    rep.add("f_j is compatible with vertical inclusions", f_comp, tol)
    rep.add("[e_i, f_j] = 0", ef, tol)
    tr_l = tr_r = 0.0
    for i in range(m.i_max + 1):
        for j in range(m.j_max + 1):
            x = m.algebra(i, j).random(rng)
            t = m.trace(i, j, x)
            if i >= 1:
                tr_l = max(tr_l, abs(m.trace(i - 1, j, m.expect_l(i, j, x)) - t))
            if j >= 1:
                tr_r = max(tr_r, abs(m.trace(i, j - 1, m.expect_r(i, j, x)) - t))
    rep.add("tracial: tr E^l = tr", tr_l, tol)
    rep.add("tracial: tr E^r = tr", tr_r, tol)
    if standard:
        for j in range(m.j_max + 1):
            rep.extend(verify_standard_module(m.column_tower(j), tol=tol, seed=seed), prefix=f"standard column {j}: ")
        for i in range(m.i_max + 1):
            rep.extend(verify_standard_module(m.row_tower(i), tol=tol, seed=seed), prefix=f"standard row {i}: ")
    return rep


# ------------------------------------------------------------------ extraction


def _chain_units(m: MarkovLattice, route: list[tuple[int, int]], seed: int):
    chain = []
    for k, (i, j) in enumerate(route):
        chain.append([m.include_route(b, (i, j), route[k + 1:]) for b in m.algebra(i, j).basis()])
    bd, blocks = bratteli_from_chain(chain, np.random.default_rng(seed))
    dec = TowerDecomposition(bd, blocks, chain, {}, len(route) - 1)
    return dec, path_matrix_units(dec, np.random.default_rng(seed + 1))


def _vertex_weights(m: MarkovLattice, blocks, level: tuple[int, int], top: tuple[int, int]) -> list[float]:
    i, j = level
    scale = m.d0**i * m.d1**j
    return [float(np.real(m.trace(*top, z))) / k * scale for z, k in zip(blocks.z, blocks.k)]


def _graph(v0, v1, counts: np.ndarray, tag: str, nu: dict[str, float]) -> WeightedBipartiteGraph:
    edges, weight, bar = [], {}, {}
    for a, u in enumerate(v0):
        for b, v in enumerate(v1):
            for k in range(int(counts[a, b])):
                fwd, back = f"{tag}:{u}>{v}#{k}", f"{tag}:{v}>{u}#{k}"
                edges += [Edge(fwd, u, v), Edge(back, v, u)]
                weight[fwd], weight[back] = nu[v] / nu[u], nu[u] / nu[v]
                bar[fwd], bar[back] = back, fwd
    return WeightedBipartiteGraph(list(v0), list(v1), edges, weight, bar)


def connection_from_lattice(m: MarkovLattice, window: tuple[int, int] = (1, 1), seed: int = 0, tol: float = 1e-8) -> ConnectionData:
    """Read off the square-partite graph and ``phi`` at the grid window
    ``M_{2a,2b} -> M_{2a+1,2b+1}``.

    Two chains of path matrix units share the prefix ending at ``M_{2a,2b}`` and split as
    ``K then L`` versus ``L then K``; each block ``phi_{pr}`` is the overlap of their
    top-level path vectors.  Vertex weights come from the lattice trace.
    """
    a, b = window
    i0, j0 = 2 * a, 2 * b
    if m.i_max < i0 + 1 or m.j_max < j0 + 1:
        raise TowerError(f"window {window} needs a grid of at least {i0 + 1} x {j0 + 1}")
    prefix = [(i, 0) for i in range(i0 + 1)] + [(i0, j) for j in range(1, j0 + 1)]
    top = (i0 + 1, j0 + 1)
    dec_a, pu_a = _chain_units(m, prefix + [(i0 + 1, j0), top], seed)
    dec_b, pu_b = _chain_units(m, prefix + [(i0, j0 + 1), top], seed)
    P = len(prefix) - 1
    for lvl in range(P + 1):
        za, zb = dec_a.blocks[lvl].z, dec_b.blocks[lvl].z
        if len(za) != len(zb) or any(_dev(x, y) > tol for x, y in zip(za, zb)):
            raise TowerError("the two chains disagree on the common prefix")
    top_a, top_b = dec_a.blocks[P + 2].z, dec_b.blocks[P + 2].z
    match = {}
    for rb, zb in enumerate(top_b):
        hits = [ra for ra, za in enumerate(top_a) if _dev(za, zb) < tol]
        if len(hits) != 1:
            raise TowerError("top-level blocks of the two chains do not match")
        match[rb] = hits[0]
    names00 = [f"a{x}" for x in range(len(dec_a.blocks[P].z))]
    names10 = [f"b{x}" for x in range(len(dec_a.blocks[P + 1].z))]
    names01 = [f"c{x}" for x in range(len(dec_b.blocks[P + 1].z))]
    names11 = [f"d{x}" for x in range(len(top_a))]
    nu: dict[str, float] = {}
    for names, blocks, level in (
        (names00, dec_a.blocks[P], (i0, j0)),
        (names10, dec_a.blocks[P + 1], (i0 + 1, j0)),
        (names01, dec_b.blocks[P + 1], (i0, j0 + 1)),
        (names11, dec_a.blocks[P + 2], top),
    ):
        nu.update(zip(names, _vertex_weights(m, blocks, level, top)))
    mult_b_top = np.zeros((len(names01), len(names11)), dtype=int)
    for q in range(len(names01)):
        for rb in range(len(top_b)):
            mult_b_top[q, match[rb]] = dec_b.bratteli.mult[P + 1][q, rb]
    sq = SquarePartiteGraph(
        lambda0=_graph(names00, names10, dec_a.bratteli.mult[P], "K0", nu),
        lambda1=_graph(names01, names11, mult_b_top, "K1", nu),
        omega0=_graph(names00, names01, dec_b.bratteli.mult[P], "L0", nu),
        omega1=_graph(names10, names11, dec_a.bratteli.mult[P + 1], "L1", nu),
    )
    dd, src, tgt = _spaces(sq)
    blocks: dict[tuple[str, str], np.ndarray] = {}
    for p, pname in enumerate(names00):
        ua, ub = pu_a.refs[P][p], pu_b.refs[P][p]
        if ua != ub:
            raise TowerError("reference paths differ on the common prefix")
        cols: dict[tuple, np.ndarray] = {}
        for w in pu_a.paths[P + 2]:
            if w[:P] != ua:
                continue
            (s, k1), (r, k2) = w[P:]
            vec = pu_a.vectors(w)
            if vec.shape[1] != 1:
                raise TowerError("top-level blocks have multiplicity; intertwiners are not one-dimensional")
            cols[(names11[r], (f"K0:{pname}>{names10[s]}#{k1}", f"L1:{names10[s]}>{names11[r]}#{k2}"))] = vec[:, 0]
        rows: dict[tuple, np.ndarray] = {}
        for w in pu_b.paths[P + 2]:
            if w[:P] != ub:
                continue
            (q, k1), (rb, k2) = w[P:]
            vec = pu_b.vectors(w)
            if vec.shape[1] != 1:
                raise TowerError("top-level blocks have multiplicity; intertwiners are not one-dimensional")
            r = match[rb]
            rows[(names11[r], (f"L0:{pname}>{names01[q]}#{k1}", f"K1:{names01[q]}>{names11[r]}#{k2}"))] = vec[:, 0]
        for rname in names11:
            key = (pname, rname)
            if not src.dim(key) and not tgt.dim(key):
                continue
            mat = np.zeros((tgt.dim(key), src.dim(key)), dtype=complex)
            ti, si = tgt.index(key), src.index(key)
            for (r1, rl), rv in rows.items():
                if r1 != rname:
                    continue
                for (r2, cl), cv in cols.items():
                    if r2 == rname:
                        mat[ti[rl], si[cl]] = np.vdot(rv, cv)
            blocks[key] = mat
    _normalize_phases(blocks, names00, names11)
    base = _lattice_base(m, dec_a, P, names00, i0, j0, tol)
    return ConnectionData(sq, BigradedOp(src, tgt, blocks), dd, base)


def _normalize_phases(blocks: dict, names00: list[str], names11: list[str]) -> None:
    """One phase per ``r``: the first nonzero entry over ``p`` in order becomes positive real.

    A common phase on all blocks ending at ``r`` is a gauge on the K1 edges into ``r``.
    """
    for r in names11:
        for p in names00:
            m = blocks.get((p, r))
            if m is None:
                continue
            nz = np.flatnonzero(np.abs(m) > 1e-9)
            if nz.size:
                z = m.flat[nz[0]]
                phase = np.conj(z) / abs(z)
                for q in names00:
                    if (q, r) in blocks:
                        blocks[(q, r)] = blocks[(q, r)] * phase
                break


def _lattice_base(m: MarkovLattice, dec: TowerDecomposition, P: int, names00: list[str], i0: int, j0: int, tol: float) -> str | None:
    """The ``V00`` block supporting ``e_1 f_1``: the base point seen at ``M_{2a,2b}``."""
    if i0 < 2 or j0 < 2:
        return None
    e1 = m.include_route(m.e(1, 0), (2, 0), [(i, 0) for i in range(3, i0 + 1)] + [(i0, j) for j in range(1, j0 + 1)])
    f1 = m.include_route(m.f(1, 0), (0, 2), [(i, 2) for i in range(1, i0 + 1)] + [(i0, j) for j in range(3, j0 + 1)])
    ef = m.include_route(e1 @ f1, (i0, j0), [(i0 + 1, j0), (i0 + 1, j0 + 1)])
    hits = [names00[k] for k, z in enumerate(dec.blocks[P].z) if np.linalg.norm(z @ ef) > tol]
    return hits[0] if len(hits) == 1 else None
