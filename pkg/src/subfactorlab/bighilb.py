"""BigHilb at desk scale: bigraded Hilbert spaces and bigraded operators.

A bigraded space is stored as a map ``(u, v) -> labels`` where each label is a
tuple of atoms (edge ids).  Every block has the orthonormal basis given by its
labels.  Tensor products concatenate labels over the shared middle index and
duals reverse and bar them, so tensor products are strictly associative.
Operators are maps ``(u, v) -> matrix`` of shape ``target x source``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .report import Report
from .weighted_graph import GraphError, WeightedBipartiteGraph, check_balanced

Label = tuple
Key = tuple[str, str]


class ShapeError(ValueError):
    """Incompatible bigraded shapes."""


def _label_key(label: Label) -> tuple[str, ...]:
    return tuple(map(repr, label))


@dataclass
class BigradedSpace:
    blocks: dict[Key, tuple[Label, ...]]
    bar: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.blocks = {k: tuple(sorted(v, key=_label_key)) for k, v in self.blocks.items() if len(v)}
        self._index: dict[Key, dict[Label, int]] = {}

    def dim(self, key: Key) -> int:
        return len(self.blocks.get(key, ()))

    @property
    def dims(self) -> dict[Key, int]:
        return {k: len(v) for k, v in self.blocks.items()}

    def labels(self, key: Key) -> tuple[Label, ...]:
        return self.blocks.get(key, ())

    def index(self, key: Key) -> dict[Label, int]:
        if key not in self._index:
            self._index[key] = {lbl: k for k, lbl in enumerate(self.labels(key))}
        return self._index[key]

    def row(self, u) -> dict:
        return {v: len(lbls) for (a, v), lbls in self.blocks.items() if a == u}

    @property
    def total_dim(self) -> int:
        return sum(len(v) for v in self.blocks.values())

    def same_shape(self, other: "BigradedSpace") -> bool:
        return self.blocks == other.blocks

    def __repr__(self) -> str:
        return f"BigradedSpace({self.dims})"


def unit_space(vertices, bar: dict | None = None) -> BigradedSpace:
    """The identity 1-morphism on ``vertices``: one basis vector per diagonal block."""
    return BigradedSpace({(v, v): ((),) for v in vertices}, dict(bar or {}))


def space_from_graph(g: WeightedBipartiteGraph) -> BigradedSpace:
    """The generator ``K: V0 -> V1`` with one basis vector per edge ``u -> v``, ``u`` in ``V0``."""
    blocks: dict[Key, list[Label]] = {}
    v0 = set(g.v0)
    for e in g.edges:
        if e.src in v0:
            blocks.setdefault((e.src, e.dst), []).append((e.id,))
    return BigradedSpace({k: tuple(v) for k, v in blocks.items()}, dict(g.bar))


def tensor_spaces(h: BigradedSpace, g: BigradedSpace) -> BigradedSpace:
    blocks: dict[Key, list[Label]] = {}
    by_left: dict = {}
    for (v, w), lbls in g.blocks.items():
        by_left.setdefault(v, []).append((w, lbls))
    for (u, v), a_lbls in h.blocks.items():
        for w, b_lbls in by_left.get(v, ()):
            out = blocks.setdefault((u, w), [])
            out.extend(a + b for a in a_lbls for b in b_lbls)
    return BigradedSpace({k: tuple(v) for k, v in blocks.items()}, {**h.bar, **g.bar})


def tensor_many(spaces: list[BigradedSpace]) -> BigradedSpace:
    out = spaces[0]
    for s in spaces[1:]:
        out = tensor_spaces(out, s)
    return out


def bar_label(label: Label, bar: dict) -> Label:
    return tuple(bar[a] for a in reversed(label))


def dual(h: BigradedSpace) -> BigradedSpace:
    return BigradedSpace(
        {(v, u): tuple(bar_label(lbl, h.bar) for lbl in lbls) for (u, v), lbls in h.blocks.items()}, dict(h.bar)
    )


# ------------------------------------------------------------------ operators


@dataclass
class BigradedOp:
    source: BigradedSpace
    target: BigradedSpace
    blocks: dict[Key, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, mat in list(self.blocks.items()):
            shape = (self.target.dim(key), self.source.dim(key))
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != shape:
                raise ShapeError(f"block {key} has shape {mat.shape}, expected {shape}")
            self.blocks[key] = mat

    def keys(self) -> set[Key]:
        return set(self.source.blocks) | set(self.target.blocks)

    def block(self, key: Key) -> np.ndarray:
        if key in self.blocks:
            return self.blocks[key]
        return np.zeros((self.target.dim(key), self.source.dim(key)), dtype=complex)

    def _like(self, blocks: dict[Key, np.ndarray]) -> "BigradedOp":
        return BigradedOp(self.source, self.target, blocks)

    def __add__(self, other: "BigradedOp") -> "BigradedOp":
        _same_type(self, other)
        return self._like({k: self.block(k) + other.block(k) for k in self.keys()})

    def __sub__(self, other: "BigradedOp") -> "BigradedOp":
        _same_type(self, other)
        return self._like({k: self.block(k) - other.block(k) for k in self.keys()})

    def __mul__(self, c) -> "BigradedOp":
        return self._like({k: c * m for k, m in self.blocks.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "BigradedOp") -> "BigradedOp":
        return compose(self, other)

    @property
    def dagger(self) -> "BigradedOp":
        return BigradedOp(self.target, self.source, {k: m.conj().T for k, m in self.blocks.items()})

    def norm(self) -> float:
        return max((float(np.max(np.abs(m))) for m in self.blocks.values() if m.size), default=0.0)

    def distance(self, other: "BigradedOp") -> float:
        return (self - other).norm()

    def allclose(self, other: "BigradedOp", tol: float = 1e-9) -> bool:
        return self.distance(other) < tol

    def trace_blocks(self) -> dict[Key, complex]:
        return {k: complex(np.trace(m)) for k, m in self.blocks.items()}


def _same_type(f: BigradedOp, g: BigradedOp) -> None:
    if not (f.source.same_shape(g.source) and f.target.same_shape(g.target)):
        raise ShapeError("operators have different source or target")


def identity(h: BigradedSpace) -> BigradedOp:
    return BigradedOp(h, h, {k: np.eye(len(v), dtype=complex) for k, v in h.blocks.items()})


def zero_op(source: BigradedSpace, target: BigradedSpace) -> BigradedOp:
    return BigradedOp(source, target, {})


def compose(f: BigradedOp, g: BigradedOp) -> BigradedOp:
    """``f o g``."""
    if not f.source.same_shape(g.target):
        raise ShapeError(f"cannot compose: {f.source} vs {g.target}")
    keys = set(f.blocks) & set(g.blocks)
    return BigradedOp(g.source, f.target, {k: f.blocks[k] @ g.blocks[k] for k in keys})


def tensor_ops(f: BigradedOp, g: BigradedOp) -> BigradedOp:
    src = tensor_spaces(f.source, g.source)
    tgt = tensor_spaces(f.target, g.target)
    out: dict[Key, np.ndarray] = {}
    g_by_left: dict = {}
    for (v, w), m in g.blocks.items():
        g_by_left.setdefault(v, []).append((w, m))
    for (u, v), fm in f.blocks.items():
        for w, gm in g_by_left.get(v, ()):
            key = (u, w)
            if key not in out:
                out[key] = np.zeros((tgt.dim(key), src.dim(key)), dtype=complex)
            ti, si = tgt.index(key), src.index(key)
            rows = [ti[a + b] for a in f.target.labels((u, v)) for b in g.target.labels((v, w))]
            cols = [si[a + b] for a in f.source.labels((u, v)) for b in g.source.labels((v, w))]
            out[key][np.ix_(rows, cols)] += np.kron(fm, gm)
    return BigradedOp(src, tgt, out)


def tensor_op_many(ops: list[BigradedOp]) -> BigradedOp:
    out = ops[0]
    for f in ops[1:]:
        out = tensor_ops(out, f)
    return out


def bar_op(f: BigradedOp) -> BigradedOp:
    """The conjugate operator ``f-bar: H-bar -> G-bar`` with entries ``conj(f)`` on barred labels."""
    src, tgt = dual(f.source), dual(f.target)
    out = {}
    for (u, v), m in f.blocks.items():
        key = (v, u)
        ti, si = tgt.index(key), src.index(key)
        rows = [ti[bar_label(a, f.target.bar)] for a in f.target.labels((u, v))]
        cols = [si[bar_label(a, f.source.bar)] for a in f.source.labels((u, v))]
        blk = np.zeros((tgt.dim(key), src.dim(key)), dtype=complex)
        blk[np.ix_(rows, cols)] = m.conj()
        out[key] = blk
    return BigradedOp(src, tgt, out)


def relabel(f: BigradedOp, source: BigradedSpace, target: BigradedSpace) -> BigradedOp:
    """Reinterpret ``f`` between spaces of identical shape."""
    if not (f.source.dims == source.dims and f.target.dims == target.dims):
        raise ShapeError("relabel needs matching block dimensions")
    return BigradedOp(source, target, dict(f.blocks))


def random_op(source: BigradedSpace, target: BigradedSpace, rng: np.random.Generator) -> BigradedOp:
    out = {}
    for k in set(source.blocks) & set(target.blocks):
        shape = (target.dim(k), source.dim(k))
        out[k] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return BigradedOp(source, target, out)


def random_unitary(h: BigradedSpace, rng: np.random.Generator) -> BigradedOp:
    out = {}
    for k, lbls in h.blocks.items():
        n = len(lbls)
        z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        q, r = np.linalg.qr(z)
        out[k] = q * (np.diag(r) / np.abs(np.diag(r)))
    return BigradedOp(h, h, out)


def unitarity_defect(f: BigradedOp) -> float:
    """``max(|f^+ f - 1|, |f f^+ - 1|)``."""
    a = (f.dagger @ f - identity(f.source)).norm()
    b = (f @ f.dagger - identity(f.target)).norm()
    return max(a, b)


# ------------------------------------------------------------------ duality


@dataclass
class DualityData:
    """Evaluation and coevaluation for a generator ``K: V0 -> V1`` and its dual.

    ``coev_K: 1_{V0} -> K (x) Kbar`` and ``ev_K: Kbar (x) K -> 1_{V1}``; the dual pair
    is ``ev_Kbar = coev_K^+`` and ``coev_Kbar = ev_K^+``.
    """

    K: BigradedSpace
    Kbar: BigradedSpace
    left: BigradedSpace
    right: BigradedSpace
    coev_K: BigradedOp
    ev_K: BigradedOp

    @property
    def ev_Kbar(self) -> BigradedOp:
        return self.coev_K.dagger

    @property
    def coev_Kbar(self) -> BigradedOp:
        return self.ev_K.dagger


def _endpoints(h: BigradedSpace) -> tuple[list, list]:
    us = sorted({u for u, _ in h.blocks}, key=repr)
    vs = sorted({v for _, v in h.blocks}, key=repr)
    return us, vs


def _duality(K: BigradedSpace, weight_of, left_vertices=None, right_vertices=None) -> DualityData:
    Kbar = dual(K)
    us, vs = _endpoints(K)
    left = unit_space(left_vertices if left_vertices is not None else us, K.bar)
    right = unit_space(right_vertices if right_vertices is not None else vs, K.bar)
    kk = tensor_spaces(K, Kbar)
    kbk = tensor_spaces(Kbar, K)
    coev: dict[Key, np.ndarray] = {}
    ev: dict[Key, np.ndarray] = {}
    for (u, v), lbls in K.blocks.items():
        ku, kv = (u, u), (v, v)
        coev.setdefault(ku, np.zeros((kk.dim(ku), 1), dtype=complex))
        ev.setdefault(kv, np.zeros((1, kbk.dim(kv)), dtype=complex))
        ci, ei = kk.index(ku), kbk.index(kv)
        for lbl in lbls:
            b = bar_label(lbl, K.bar)
            coev[ku][ci[lbl + b], 0] = np.sqrt(weight_of(lbl))
            ev[kv][0, ei[b + lbl]] = np.sqrt(weight_of(b))
    return DualityData(K, Kbar, left, right, BigradedOp(left, kk, coev), BigradedOp(kbk, right, ev))


def duality_from_weighting(g: WeightedBipartiteGraph) -> DualityData:
    """``coev_K = sum_e w(e)^{1/2} |e> (x) |bar e>`` and ``ev_K(|a> (x) |b>) = [b = bar a] w(a)^{1/2}``."""
    if not check_balanced(g).passed:
        raise GraphError("duality data needs a balanced graph")

    def weight_of(lbl: Label) -> float:
        w = 1.0
        for a in lbl:
            w *= g.weight[a]
        return w

    return _duality(space_from_graph(g), weight_of, g.v0, g.v1)


def standard_duality(k: BigradedSpace) -> DualityData:
    """Kronecker pairing of the label basis with its dual basis."""
    return _duality(k, lambda lbl: 1.0)


def gauge_duality(dd: DualityData, u: BigradedOp) -> DualityData:
    """Transport along a unitary ``u`` on ``K``: ``coev -> (u (x) u-bar) coev``, ``ev -> ev (u-bar^+ (x) u^+)``."""
    ub = bar_op(u)
    coev = tensor_ops(u, ub) @ dd.coev_K
    ev = dd.ev_K @ tensor_ops(ub.dagger, u.dagger)
    return DualityData(dd.K, dd.Kbar, dd.left, dd.right, coev, ev)


def _lift_unit(f: BigradedOp, left: bool, unit: BigradedSpace) -> BigradedOp:
    return tensor_ops(identity(unit), f) if left else tensor_ops(f, identity(unit))


def check_duality(dd: DualityData, d: float | None = None, tol: float = 1e-10) -> Report:
    """Both zigzag identities for ``K`` and ``Kbar`` and, if ``d`` is given, ``d``-fairness."""
    rep = Report("duality data")
    K, Kb = dd.K, dd.Kbar
    idK, idKb = identity(K), identity(Kb)
    z1 = tensor_ops(idK, dd.ev_K) @ tensor_ops(dd.coev_K, idK)
    z2 = tensor_ops(dd.ev_K, idKb) @ tensor_ops(idKb, dd.coev_K)
    z3 = tensor_ops(idKb, dd.ev_Kbar) @ tensor_ops(dd.coev_Kbar, idKb)
    z4 = tensor_ops(dd.ev_Kbar, idK) @ tensor_ops(idK, dd.coev_Kbar)
    for name, z, ident in (
        ("zigzag (1 (x) ev_K)(coev_K (x) 1) = 1_K", z1, idK),
        ("zigzag (ev_K (x) 1)(1 (x) coev_K) = 1_Kbar", z2, idKb),
        ("zigzag (1 (x) ev_Kbar)(coev_Kbar (x) 1) = 1_Kbar", z3, idKb),
        ("zigzag (ev_Kbar (x) 1)(1 (x) coev_Kbar) = 1_K", z4, idK),
    ):
        rep.add(name, _blockwise_distance(z, ident), tol)
    if d is not None:
        left = dd.ev_Kbar @ dd.coev_K
        right = dd.ev_K @ dd.coev_Kbar
        rep.add("fair: ev_Kbar coev_K = d", _scalar_defect(left, d), tol, _worst_vertex(left, d))
        rep.add("fair: ev_K coev_Kbar = d", _scalar_defect(right, d), tol, _worst_vertex(right, d))
    return rep


def _blockwise_distance(a: BigradedOp, b: BigradedOp) -> float:
    if a.source.dims != b.source.dims or a.target.dims != b.target.dims:
        raise ShapeError("operators have different block shapes")
    keys = a.keys() | b.keys()
    return max((float(np.max(np.abs(a.block(k) - b.block(k)), initial=0.0)) for k in keys), default=0.0)


def _scalar_defect(f: BigradedOp, d: float) -> float:
    return max((abs(complex(m[0, 0]) - d) for m in f.blocks.values()), default=float(d))


def _worst_vertex(f: BigradedOp, d: float) -> str:
    if not f.blocks:
        return ""
    key = max(f.blocks, key=lambda k: abs(complex(f.blocks[k][0, 0]) - d))
    return f"worst vertex {key[0]}"


def duality_matrices(dd: DualityData) -> tuple[dict[Key, np.ndarray], dict[Key, np.ndarray]]:
    """Per-block matrices ``phi_uv`` (rows ``K_uv``, cols ``Kbar_vu``) from coev_K and
    ``psi_vu`` (rows ``Kbar_vu``, cols ``K_uv``) from ev_K."""
    kk = dd.coev_K.target
    kbk = dd.ev_K.source
    phi, psi = {}, {}
    for (u, v), lbls in dd.K.blocks.items():
        blbls = dd.Kbar.labels((v, u))
        ci = kk.index((u, u))
        ei = kbk.index((v, v))
        cvec = dd.coev_K.block((u, u))[:, 0]
        evec = dd.ev_K.block((v, v))[0, :]
        phi[(u, v)] = np.array([[cvec[ci[a + b]] for b in blbls] for a in lbls])
        psi[(v, u)] = np.array([[evec[ei[b + a]] for a in lbls] for b in blbls])
    return phi, psi


def weighting_from_duality(dd: DualityData, tol: float = 1e-10) -> dict[Key, list[float]]:
    """Sorted eigenvalues of ``phi phi^+`` per vertex pair, in both directions."""
    phi, psi = duality_matrices(dd)
    out: dict[Key, list[float]] = {}
    for key, m in list(phi.items()) + list(psi.items()):
        vals = np.linalg.eigvalsh(m @ m.conj().T)
        out[key] = sorted(float(x) for x in vals)
    return out


def check_weighting_properties(dd: DualityData, d: float, tol: float = 1e-9) -> Report:
    """``phi_K psi_K = 1`` blockwise and ``sum_Q Tr(phi^+ phi) = d`` at every vertex."""
    rep = Report("edge weighting from duality")
    phi, psi = duality_matrices(dd)
    inv = 0.0
    sums: dict = {}
    for (u, v), m in phi.items():
        inv = max(inv, float(np.max(np.abs(m @ psi[(v, u)] - np.eye(m.shape[0])))))
        sums[u] = sums.get(u, 0.0) + float(np.real(np.trace(m.conj().T @ m)))
    for (v, u), m in psi.items():
        sums[v] = sums.get(v, 0.0) + float(np.real(np.trace(m.conj().T @ m)))
    rep.add("phi_K psi_K = 1", inv, tol)
    rep.add("sum_Q Tr(phi^+ phi) = d", max((abs(s - d) for s in sums.values()), default=0.0), tol)
    return rep


def compare_multisets(a: dict[Key, list[float]], b: dict[Key, list[float]]) -> float:
    """Largest pairwise gap between sorted multisets; inf on key or size mismatch."""
    if set(a) != set(b):
        return float("inf")
    worst = 0.0
    for k in a:
        if len(a[k]) != len(b[k]):
            return float("inf")
        worst = max(worst, max((abs(x - y) for x, y in zip(sorted(a[k]), sorted(b[k]))), default=0.0))
    return worst


def graph_weight_multisets(g: WeightedBipartiteGraph) -> dict[Key, list[float]]:
    out: dict[Key, list[float]] = {}
    for e in g.edges:
        out.setdefault((e.src, e.dst), []).append(g.weight[e.id])
    return {k: sorted(v) for k, v in out.items()}


def alternating_power(dd: DualityData, n: int, start_bar: bool = False) -> BigradedSpace:
    """``K (x) Kbar (x) K ...`` with ``n`` factors (or starting with ``Kbar``)."""
    if n == 0:
        return dd.right if start_bar else dd.left
    facs = [(dd.Kbar if (t % 2 == 0) == start_bar else dd.K) for t in range(n)]
    return tensor_many(facs)
