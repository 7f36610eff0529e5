"""Temperley-Lieb diagrams inside the graph planar algebra of a vertex-weighted
bipartite graph.

Box space ``n`` is ``End(K (x) Kbar (x) ...)`` over all starting vertices in
``V0``.  A cup-cap on strands ``i, i+1`` acts on steps ``i, i+1`` of a path
through the weighted coevaluation, and diagrams are products of these along a
reduced word.  The Markov trace corresponds to the ``nu``-weighted pivotal
trace normalised so that ``tr(1) = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bighilb import alternating_power, duality_from_weighting
from .report import Report
from .tl_diagram import TLContext, TLElement, TLError, basis_element, catalan, embed_right, identity, jones_generator, markov_trace, reduced_words
from .weighted_graph import GraphError, WeightedBipartiteGraph, edge_weights_from_vertex_weighting, fp_defect, perron_data

N_CAP = 6


@dataclass
class GPABoxSpace:
    graph: WeightedBipartiteGraph
    nu: dict[str, float]
    n: int
    d: float
    paths: list[tuple]
    starts: list[str]
    ends: list[str]

    @property
    def dim(self) -> int:
        """``sum_{u,v} (#paths u -> v)^2``."""
        counts: dict[tuple[str, str], int] = {}
        for s, e in zip(self.starts, self.ends):
            counts[(s, e)] = counts.get((s, e), 0) + 1
        return sum(c * c for c in counts.values())

    def block_mask(self) -> np.ndarray:
        s = np.array(self.starts)
        e = np.array(self.ends)
        return (s[:, None] == s[None, :]) & (e[:, None] == e[None, :])


@dataclass
class EmbeddingReport:
    n: int
    image_rank: int
    kernel_dim: int
    hom_residual: float
    trace_residual: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def box_space(graph: WeightedBipartiteGraph, nu: dict[str, float] | None, n: int, d: float | None = None) -> GPABoxSpace:
    if n > N_CAP:
        raise TLError(f"box spaces are capped at n={N_CAP}")
    if nu is None:
        nu, _ = perron_data(graph)
    if d is None:
        p = graph.v0[0]
        d = sum(nu[e.dst] for e in graph.out_edges(p)) / nu[p]
    worst = max(abs(v) for v in fp_defect(graph, nu, d).values())
    if worst > 1e-8 * max(1.0, d):
        raise GraphError(f"vertex weighting violates the Frobenius-Perron condition (defect {worst:.2e})")
    g = graph.with_weights(edge_weights_from_vertex_weighting(graph, nu, d))
    if n == 0:
        verts = list(g.v0)
        return GPABoxSpace(g, nu, 0, d, [() for _ in verts], verts, verts)
    space = alternating_power(duality_from_weighting(g), n)
    paths, starts, ends = [], [], []
    for key in sorted(space.blocks, key=repr):
        for lbl in space.labels(key):
            paths.append(lbl)
            starts.append(key[0])
            ends.append(key[1])
    return GPABoxSpace(g, nu, n, d, paths, starts, ends)


def cup_cap_operator(box: GPABoxSpace, i: int) -> np.ndarray:
    """Image of the cup-cap diagram ``U_i``: ``D D^+`` on steps ``i, i+1`` with ``D(a,b) = w(a)^{1/2} [b = bar a]``."""
    if not 1 <= i < box.n:
        raise TLError(f"cup-cap index {i} out of range at n={box.n}")
    g = box.graph
    groups: dict[tuple, list[tuple[int, float]]] = {}
    for k, p in enumerate(box.paths):
        a, b = p[i - 1], p[i]
        if g.bar[a] != b:
            continue
        key = (box.starts[k], p[: i - 1], p[i + 1:])
        groups.setdefault(key, []).append((k, np.sqrt(g.weight[a])))
    m = len(box.paths)
    out = np.zeros((m, m), dtype=complex)
    for entries in groups.values():
        idx = np.array([k for k, _ in entries])
        amp = np.array([c for _, c in entries])
        out[np.ix_(idx, idx)] = np.outer(amp, amp)
    return out


def embed_tl(x: TLElement, graph: WeightedBipartiteGraph, nu: dict[str, float] | None = None, box: GPABoxSpace | None = None, tol: float = 1e-8) -> np.ndarray:
    """The image of ``x`` as a matrix on paths of length ``x.n`` from ``V0``."""
    if box is None:
        box = box_space(graph, nu, x.n)
    if abs(box.d - x.d) > tol * max(1.0, x.d):
        raise GraphError(f"modulus mismatch: element has d={x.d}, graph has d={box.d}")
    words = reduced_words(x.n)
    cups = {i: cup_cap_operator(box, i) for i in range(1, x.n)}
    m = len(box.paths)
    out = np.zeros((m, m), dtype=complex)
    for k, c in enumerate(x.coeffs):
        if abs(c) < 1e-14:
            continue
        mat = np.eye(m, dtype=complex)
        for i in words[k]:
            mat = mat @ cups[i]
        out += c * mat
    return out


def gpa_trace(box: GPABoxSpace, mat: np.ndarray) -> complex:
    """``sum_g nu(s(g)) nu(t(g)) mat[g,g] / (d^n sum_{u in V0} nu(u)^2)``."""
    w = np.array([box.nu[s] * box.nu[e] for s, e in zip(box.starts, box.ends)])
    norm = box.d**box.n * sum(box.nu[u] ** 2 for u in box.graph.v0)
    return complex(np.sum(w * np.diag(mat)) / norm)


def embedding_matrix(box: GPABoxSpace, d: float) -> np.ndarray:
    """Columns are the flattened images of the diagram basis."""
    n = box.n
    return np.array([embed_tl(basis_element(n, d, k), box.graph, box=box).ravel() for k in range(catalan(n))]).T


def kernel_dimension(graph: WeightedBipartiteGraph, nu: dict[str, float] | None, n: int, rank_tol: float = 1e-8) -> int:
    box = box_space(graph, nu, n)
    mat = embedding_matrix(box, box.d)
    s = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(s > rank_tol * s[0])) if s.size else 0
    return catalan(n) - rank


def kernel_basis(graph: WeightedBipartiteGraph, nu: dict[str, float] | None, n: int, rank_tol: float = 1e-8) -> list[TLElement]:
    box = box_space(graph, nu, n)
    mat = embedding_matrix(box, box.d)
    _, s, vh = np.linalg.svd(mat)
    rank = int(np.sum(s > rank_tol * s[0]))
    return [TLElement(n, box.d, vh[k].conj()) for k in range(rank, vh.shape[0])]


def quantum_integer(k: int, d: float) -> float:
    """``[k]`` with ``[0] = 0``, ``[1] = 1``, ``[k+1] = d [k] - [k-1]``."""
    a, b = 0.0, 1.0
    for _ in range(k):
        a, b = b, d * b - a
    return a


def jones_wenzl(n: int, d: float) -> TLElement:
    """``JW_{k+1} = JW_k (x) 1 - ([k]/[k+1]) JW_k U_k JW_k`` with ``U_k = d e_k``."""
    if n < 1:
        raise TLError("Jones-Wenzl projections start at n=1")
    jw = identity(1, d)
    for k in range(1, n):
        qk1 = quantum_integer(k + 1, d)
        if abs(qk1) < 1e-12:
            raise TLError(f"quantum integer [{k + 1}] vanishes at d={d}")
        big = embed_right(jw, 1)
        u = jones_generator(TLContext(k + 1, d), k) * d
        jw = big - big * u * big * (quantum_integer(k, d) / qk1)
    return jw


def verify_embedding(graph: WeightedBipartiteGraph, nu: dict[str, float] | None, n: int, seed: int = 0, samples: int = 5, tol: float = 1e-9) -> tuple[EmbeddingReport, Report]:
    """Homomorphism, *-compatibility, unitality, trace and kernel data at box space ``n``."""
    rng = np.random.default_rng(seed)
    box = box_space(graph, nu, n)
    d = box.d
    rep = Report(f"TL embedding at n={n}, d={d:.6g}")
    size = catalan(n)

    def rand() -> TLElement:
        return TLElement(n, d, rng.normal(size=size) + 1j * rng.normal(size=size))

    hom = star = tr = 0.0
    for _ in range(samples):
        x, y = rand(), rand()
        ex, ey = embed_tl(x, graph, box=box), embed_tl(y, graph, box=box)
        hom = max(hom, float(np.max(np.abs(embed_tl(x * y, graph, box=box) - ex @ ey))))
        star = max(star, float(np.max(np.abs(embed_tl(x.adjoint, graph, box=box) - ex.conj().T))))
        tr = max(tr, abs(gpa_trace(box, ex) - markov_trace(x)))
    unit = float(np.max(np.abs(embed_tl(identity(n, d), graph, box=box) - np.eye(len(box.paths)))))
    mask = box.block_mask()
    blocks = max(float(np.max(np.abs(embed_tl(basis_element(n, d, k), graph, box=box)[~mask]), initial=0.0)) for k in range(size))
    rep.add("multiplicative", hom, tol)
    rep.add("*-preserving", star, tol)
    rep.add("unital", unit, tol)
    rep.add("lands in the box space", blocks, tol)
    rep.add("trace: GPA trace = Markov trace", tr, tol)
    if n >= 2:
        e1 = embed_tl(jones_generator(TLContext(n, d), 1), graph, box=box)
        rep.add("image of e_1 is a projection", float(np.max(np.abs(e1 @ e1 - e1))), tol)
        rep.add("trace of e_1 is d^-2", abs(gpa_trace(box, e1) - d**-2), tol)
    kd = kernel_dimension(graph, nu, n)
    return EmbeddingReport(n, size - kd, kd, hom, tr), rep
