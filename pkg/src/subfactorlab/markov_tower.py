"""Markov towers: path towers built from weighted graphs, the traceless
two-by-two example, axiom verification, and the inverse direction (Bratteli
diagram, principal graph and edge weighting recovered from a tower).

Every level ``M_n`` is a *-subalgebra of ``Mat(D_n)``.  A level is described by
its block structure (index sets of full matrix blocks) or by an explicit
spanning set.  Inclusions, expectations and Jones projections are supplied as
matrices or callables, so graph-built and abstract towers share one interface.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Callable

import numpy as np

from .bighilb import alternating_power, duality_from_weighting
from .report import Report
from .tl_diagram import TLElement, basis_element, catalan, embed_right, reduced_words, right_expectation, shift_insert
from .tl_diagram import identity as tl_identity
from .weighted_graph import GraphError, WeightedBipartiteGraph, check_fair, edge_weights_from_vertex_weighting, graph_from_undirected

N_MAX_CAP = 8
BLOCK_CAP = 64
GAP = 1e-7


class TowerError(ValueError):
    """Inconsistent tower data or a failed numerical decomposition."""


# ------------------------------------------------------------------ algebras


@dataclass
class MatrixAlgebra:
    """A *-subalgebra of ``Mat(dim)``: direct sum of full blocks, or an explicit spanning set."""

    dim: int
    blocks: list[np.ndarray] | None = None
    spanning: list[np.ndarray] | None = None

    def basis(self) -> list[np.ndarray]:
        if self.spanning is not None:
            return list(self.spanning)
        blocks = self.blocks if self.blocks is not None else [np.arange(self.dim)]
        out = []
        for idx in blocks:
            for a in idx:
                for b in idx:
                    m = np.zeros((self.dim, self.dim), dtype=complex)
                    m[a, b] = 1.0
                    out.append(m)
        return out

    @property
    def algebra_dim(self) -> int:
        if self.spanning is not None:
            return len(self.spanning)
        blocks = self.blocks if self.blocks is not None else [np.arange(self.dim)]
        return sum(len(b) ** 2 for b in blocks)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        if self.spanning is not None:
            c = rng.normal(size=len(self.spanning)) + 1j * rng.normal(size=len(self.spanning))
            return np.tensordot(c, np.array(self.spanning), axes=1)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        blocks = self.blocks if self.blocks is not None else [np.arange(self.dim)]
        for idx in blocks:
            k = len(idx)
            out[np.ix_(idx, idx)] = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        return out

    def membership_residual(self, x: np.ndarray) -> float:
        """Distance from ``x`` to the algebra (Frobenius, relative to ``|x|``)."""
        if self.spanning is not None:
            mat = np.array([b.ravel() for b in self.spanning]).T
            sol, *_ = np.linalg.lstsq(mat, x.ravel(), rcond=None)
            return float(np.linalg.norm(mat @ sol - x.ravel()))
        mask = np.zeros((self.dim, self.dim), dtype=bool)
        blocks = self.blocks if self.blocks is not None else [np.arange(self.dim)]
        for idx in blocks:
            mask[np.ix_(idx, idx)] = True
        return float(np.linalg.norm(x[~mask]))


# ------------------------------------------------------------------ towers


@dataclass
class MarkovTower:
    """Levels ``0..n_max``; ``jones[n]`` is ``e_n`` in ``M_{n+1}`` for ``1 <= n < n_max``.

    ``include(n, x)`` maps ``M_n -> M_{n+1}`` and ``expect(n, x)`` is ``E_n: M_n -> M_{n-1}``.
    """

    d: float
    algebras: list[MatrixAlgebra]
    include: Callable[[int, np.ndarray], np.ndarray]
    expect: Callable[[int, np.ndarray], np.ndarray]
    jones: dict[int, np.ndarray]
    name: str = "tower"
    meta: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return len(self.algebras) - 1

    def dims(self) -> list[int]:
        return [a.algebra_dim for a in self.algebras]

    def one(self, n: int) -> np.ndarray:
        return np.eye(self.algebras[n].dim, dtype=complex)

    def include_to(self, x: np.ndarray, n: int, m: int) -> np.ndarray:
        for k in range(n, m):
            x = self.include(k, x)
        return x

    def e(self, k: int, level: int) -> np.ndarray:
        """``e_k`` viewed in ``M_level``."""
        if k not in self.jones or level < k + 1:
            raise TowerError(f"e_{k} is not available at level {level}")
        return self.include_to(self.jones[k], k + 1, level)

    def random(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.algebras[n].random(rng)

    def with_jones(self, k: int, value: np.ndarray) -> "MarkovTower":
        out = copy.copy(self)
        out.jones = dict(self.jones)
        out.jones[k] = value
        return out

    def with_expectation(self, expect: Callable[[int, np.ndarray], np.ndarray]) -> "MarkovTower":
        out = copy.copy(self)
        out.expect = expect
        return out


class AbstractTower(MarkovTower):
    """A tower given by explicit matrices rather than a graph."""


# ------------------------------------------------------------------ path towers


@dataclass
class PathLevel:
    paths: list[tuple]
    ends: list[str]
    parent: np.ndarray
    last: list[str]


def _path_levels(g: WeightedBipartiteGraph, base: str, n_max: int) -> list[PathLevel]:
    dd = duality_from_weighting(g)
    levels = []
    prev_index: dict[tuple, int] = {(): 0}
    for n in range(n_max + 1):
        space = alternating_power(dd, n)
        keys = sorted((k for k in space.blocks if k[0] == base), key=lambda k: repr(k[1]))
        paths, ends = [], []
        for k in keys:
            for lbl in space.labels(k):
                paths.append(lbl)
                ends.append(k[1])
        if n == 0:
            paths, ends = [()], [base]
        parent = np.array([prev_index[p[:-1]] if n else 0 for p in paths], dtype=int)
        last = [p[-1] if n else "" for p in paths]
        levels.append(PathLevel(paths, ends, parent, last))
        prev_index = {p: i for i, p in enumerate(paths)}
    return levels


def build_path_tower(
    g: WeightedBipartiteGraph, base: str, n_max: int, nu: dict[str, float] | None = None, d: float | None = None
) -> MarkovTower:
    """``M_n = End(paths of length n from base)`` with weighted caps and cups."""
    if n_max > N_MAX_CAP:
        raise TowerError(f"n_max is capped at {N_MAX_CAP}")
    if base not in g.v0:
        raise GraphError(f"base vertex {base!r} must lie in v0")
    if nu is not None:
        g = g.with_weights(edge_weights_from_vertex_weighting(g, nu))
    rep = check_fair(g, d, tol=1e-8)
    if not rep.passed:
        raise GraphError("graph is not fair and balanced: " + "; ".join(c.name + " " + c.note for c in rep.failures()))
    if d is None:
        d = float(sum(g.weight[e.id] for e in g.out_edges(base)))
    levels = _path_levels(g, base, n_max)
    w = g.weight
    algebras = []
    for lev in levels:
        groups: dict[str, list[int]] = {}
        for i, v in enumerate(lev.ends):
            groups.setdefault(v, []).append(i)
        if max(len(v) for v in groups.values()) > BLOCK_CAP:
            raise TowerError(f"block dimension exceeds {BLOCK_CAP}")
        algebras.append(MatrixAlgebra(len(lev.paths), [np.array(v) for v in groups.values()]))

    def include(n: int, x: np.ndarray) -> np.ndarray:
        nxt = levels[n + 1]
        same = np.array(nxt.last)[:, None] == np.array(nxt.last)[None, :]
        return x[np.ix_(nxt.parent, nxt.parent)] * same

    def expect(n: int, x: np.ndarray) -> np.ndarray:
        lev = levels[n]
        out = np.zeros((len(levels[n - 1].paths),) * 2, dtype=complex)
        wt = np.array([w[a] for a in lev.last])
        same = np.array(lev.last)[:, None] == np.array(lev.last)[None, :]
        contrib = x * same * wt[:, None]
        np.add.at(out, (lev.parent[:, None], lev.parent[None, :]), contrib)
        return out / d

    jones = {}
    for n in range(1, n_max):
        top, mid = levels[n + 1], levels[n]
        m = len(top.paths)
        e = np.zeros((m, m), dtype=complex)
        vec: dict[int, list[tuple[int, float]]] = {}
        for k, p in enumerate(top.paths):
            a, b = p[-2], p[-1]
            if g.bar[a] != b:
                continue
            gi = mid.parent[top.parent[k]]
            vec.setdefault(gi, []).append((k, np.sqrt(w[a])))
        for entries in vec.values():
            idx = np.array([k for k, _ in entries])
            amp = np.array([c for _, c in entries])
            e[np.ix_(idx, idx)] = np.outer(amp, amp) / d
        jones[n] = e
    meta = {"graph": g, "base": base, "levels": levels}
    return MarkovTower(d, algebras, include, expect, jones, name=f"path tower at {base}", meta=meta)


def path_counts(g: WeightedBipartiteGraph, base: str, n: int) -> dict[str, int]:
    """Number of length-``n`` walks from ``base`` ending at each vertex."""
    a = g.adjacency()
    verts = g.vertices
    v = np.zeros(len(verts))
    v[verts.index(base)] = 1
    for _ in range(n):
        v = a.T @ v
    return {name: int(round(c)) for name, c in zip(verts, v) if round(c)}


# ------------------------------------------------------------------ the two-by-two example


def traceless_lambda(d: float) -> float:
    """The root ``lambda`` in ``(0, 1/2)`` of ``lambda (1 - lambda) = d^-2``."""
    if d * d <= 4:
        raise TowerError("the traceless example needs d^2 > 4")
    return 0.5 * (1.0 - np.sqrt(1.0 - 4.0 / (d * d)))


def e_lambda(lam: float) -> np.ndarray:
    """``(1-l) e11(x)e11 + l e22(x)e22 + sqrt(l(1-l)) (e12(x)e12 + e21(x)e21)``."""
    v = np.zeros(4)
    v[0], v[3] = np.sqrt(1 - lam), np.sqrt(lam)
    return np.outer(v, v).astype(complex)


def expectation_lambda(x: np.ndarray, lam: float) -> np.ndarray:
    """``id (x) E_lambda`` on the last tensor factor, ``E_lambda(e11) = lambda``."""
    n = x.shape[0] // 2
    t = x.reshape(n, 2, n, 2)
    return lam * t[:, 0, :, 0] + (1 - lam) * t[:, 1, :, 1]


def example_traceless_tower(d: float, n_max: int) -> AbstractTower:
    """``M_n = M_2^{(x)n}`` with alternating ``E_lambda``, ``E_{1-lambda}`` and ``e_{1-lambda}``, ``e_lambda``."""
    if n_max > N_MAX_CAP:
        raise TowerError(f"n_max is capped at {N_MAX_CAP}")
    lam = traceless_lambda(d)
    algebras = [MatrixAlgebra(2**n) for n in range(n_max + 1)]

    def include(n: int, x: np.ndarray) -> np.ndarray:
        return np.kron(x, np.eye(2))

    def expect(n: int, x: np.ndarray) -> np.ndarray:
        return expectation_lambda(x, lam if n % 2 == 1 else 1 - lam)

    jones = {}
    for n in range(1, n_max):
        proj = e_lambda(1 - lam) if n % 2 == 1 else e_lambda(lam)
        jones[n] = np.kron(np.eye(2 ** (n - 1)), proj)
    return AbstractTower(d, algebras, include, expect, jones, name=f"traceless example d={d:.6g}", meta={"lambda": lam})


# ------------------------------------------------------------------ axioms


def _dev(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b), initial=0.0))


def _samples(t: MarkovTower, n: int, rng: np.random.Generator, count: int) -> list[np.ndarray]:
    alg = t.algebras[n]
    if alg.algebra_dim <= count:
        return alg.basis()
    return [alg.random(rng) for _ in range(count)]


def verify_markov_axioms(t: MarkovTower, tol: float = 1e-10, seed: int = 0, samples: int = 6, structural_cap: int = 300) -> Report:
    """(TLJ1-3), (M2) ``e x e = E(x) e``, (M3) ``E(e_n) = d^-2``, (M4) pull-down, and
    properties (1), (2), (5), (6); inclusions and expectations are checked too."""
    rng = np.random.default_rng(seed)
    rep = Report(f"Markov tower axioms: {t.name}")
    d = t.d
    N = t.n_max
    dev: dict[str, float] = {}

    def bump(key: str, value: float) -> None:
        dev[key] = max(dev.get(key, 0.0), value)

    for key in ("incl", "cexp", "tlj1", "tlj2", "tlj3", "m2", "m3", "m4", "p1", "p2", "p5", "p6"):
        dev[key] = 0.0
    for n in range(N):
        x, y = t.random(n, rng), t.random(n, rng)
        ix, iy = t.include(n, x), t.include(n, y)
        bump("incl", _dev(t.include(n, t.one(n)), t.one(n + 1)))
        bump("incl", _dev(t.include(n, x @ y), ix @ iy))
        bump("incl", _dev(t.include(n, x.conj().T), ix.conj().T))
        bump("incl", t.algebras[n + 1].membership_residual(ix))
    for n in range(1, N + 1):
        a, b, x = t.random(n - 1, rng), t.random(n - 1, rng), t.random(n, rng)
        ia, ib = t.include(n - 1, a), t.include(n - 1, b)
        bump("cexp", _dev(t.expect(n, ia @ x @ ib), a @ t.expect(n, x) @ b))
        bump("cexp", _dev(t.expect(n, ia), a))
        bump("cexp", _dev(t.expect(n, x.conj().T), t.expect(n, x).conj().T))
    for k, e in t.jones.items():
        bump("tlj1", _dev(e @ e, e))
        bump("tlj1", _dev(e, e.conj().T))
        bump("tlj1", t.algebras[k + 1].membership_residual(e))
    for i in t.jones:
        for j in t.jones:
            lvl = max(i, j) + 1
            ei, ej = t.e(i, lvl), t.e(j, lvl)
            if abs(i - j) > 1:
                bump("tlj2", _dev(ei @ ej, ej @ ei))
            elif abs(i - j) == 1:
                bump("tlj3", _dev(ei @ ej @ ei, ei / d**2))
    for n, e in t.jones.items():
        for x in _samples(t, n, rng, samples):
            xx = t.include(n, x)
            bump("m2", _dev(e @ xx @ e, t.include_to(t.expect(n, x), n - 1, n + 1) @ e))
        if n + 1 <= N:
            bump("m3", _dev(t.expect(n + 1, e), t.one(n) / d**2))
            for x in _samples(t, n + 1, rng, samples):
                y = d**2 * t.expect(n + 1, x @ e)
                bump("m4", _dev(t.include(n, y) @ e, x @ e))
        for m in range(0, n):
            for x in _samples(t, m, rng, 2):
                xx = t.include_to(x, m, n + 1)
                bump("p1", _dev(xx @ e, e @ xx))
        alg_n = t.algebras[n]
        if alg_n.algebra_dim <= structural_cap:
            basis = alg_n.basis()
            right = np.array([(t.include(n, b) @ e).ravel() for b in basis]).T
            bump("p2", float(len(basis) - np.linalg.matrix_rank(right, tol=1e-8)))
            comm = np.array([(t.include(n, b) @ e - e @ t.include(n, b)).ravel() for b in basis]).T
            kernel = len(basis) - np.linalg.matrix_rank(comm, tol=1e-8)
            bump("p5", float(abs(kernel - t.algebras[n - 1].algebra_dim)))
            if n + 1 <= N and t.algebras[n + 1].algebra_dim <= structural_cap:
                sand = np.array([(e @ b @ e).ravel() for b in t.algebras[n + 1].basis()]).T
                low = np.array([(t.include_to(b, n - 1, n + 1) @ e).ravel() for b in t.algebras[n - 1].basis()]).T
                r_s = np.linalg.matrix_rank(sand, tol=1e-8)
                r_l = np.linalg.matrix_rank(low, tol=1e-8)
                r_j = np.linalg.matrix_rank(np.hstack([sand, low]), tol=1e-8)
                bump("p6", float(abs(r_s - r_l) + abs(r_j - r_l)))
    labels = {
        "incl": ("inclusion is a unital *-homomorphism", tol),
        "cexp": ("E_n is a conditional expectation", tol),
        "tlj1": ("(M1) TLJ1 e_n^2 = e_n = e_n^*", tol),
        "tlj2": ("(M1) TLJ2 [e_i, e_j] = 0 for |i-j| > 1", tol),
        "tlj3": ("(M1) TLJ3 e_n e_{n+-1} e_n = d^-2 e_n", tol),
        "m2": ("(M2) e_n x e_n = E_n(x) e_n", tol),
        "m3": ("(M3) E_{n+1}(e_n) = d^-2", tol),
        "m4": ("(M4) pull-down x e_n = d^2 E_{n+1}(x e_n) e_n", tol),
        "p1": ("(1) [x, e_k] = 0 for x in M_n, k > n", tol),
        "p2": ("(2) x -> x e_n injective", 0.5),
        "p5": ("(5) M_n cap {e_n}' = M_{n-1}", 0.5),
        "p6": ("(6) e_n M_{n+1} e_n = M_{n-1} e_n", 0.5),
    }
    for key, (label, tl) in labels.items():
        rep.add(label, dev[key], tl)
    return rep


# ------------------------------------------------------------------ decomposition


def _kernel(mat: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    g = mat.conj().T @ mat
    vals, vecs = np.linalg.eigh(g)
    scale = max(1.0, float(vals[-1])) if vals.size else 1.0
    return vecs[:, vals < tol * scale]


def _cluster(vals: np.ndarray, gap: float = GAP) -> list[np.ndarray]:
    order = np.argsort(vals)
    scale = max(1.0, float(np.max(np.abs(vals)))) if vals.size else 1.0
    groups, cur = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if vals[b] - vals[a] > gap * scale:
            groups.append(np.array(cur))
            cur = []
        cur.append(b)
    groups.append(np.array(cur))
    return groups


def _entrywise_order(a: np.ndarray, b: np.ndarray, tol: float = 1e-6) -> int:
    """Descending lexicographic order on diagonals, then real and imaginary entries."""
    for x, y in ((np.diag(a).real, np.diag(b).real), (a.real.ravel(), b.real.ravel()), (a.imag.ravel(), b.imag.ravel())):
        diff = np.flatnonzero(np.abs(x - y) > tol)
        if diff.size:
            return -1 if x[diff[0]] > y[diff[0]] else 1
    return 0


def _range_basis(p: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((p + p.conj().T) / 2)
    return vecs[:, vals > 0.5]


@dataclass
class LevelBlocks:
    """Minimal central projections with block sizes ``k`` and representation multiplicities ``mu``."""

    z: list[np.ndarray]
    k: list[int]
    mu: list[int]


def center_basis(basis: list[np.ndarray], rng: np.random.Generator, probes: int = 2) -> list[np.ndarray]:
    """Basis of the center, as the kernel of commutators with random elements."""
    arr = np.array(basis)
    cols = []
    for _ in range(probes):
        c = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        r = np.tensordot(c, arr, axes=1)
        cols.append(np.array([(b @ r - r @ b).ravel() for b in basis]).T)
    ker = _kernel(np.vstack(cols))
    return [np.tensordot(ker[:, k], arr, axes=1) for k in range(ker.shape[1])]


def minimal_central_projections(basis: list[np.ndarray], rng: np.random.Generator) -> LevelBlocks:
    dim = basis[0].shape[0]
    cen = center_basis(basis, rng)
    c = rng.normal(size=len(cen)) + 1j * rng.normal(size=len(cen))
    z = np.tensordot(c, np.array(cen), axes=1)
    z = z + z.conj().T
    vals, vecs = np.linalg.eigh(z)
    groups = _cluster(vals)
    if len(groups) != len(cen):
        raise TowerError(f"center has dimension {len(cen)} but {len(groups)} spectral clusters were found")
    projs = [vecs[:, g] @ vecs[:, g].conj().T for g in groups]
    # canonical order, so chains through different routes list blocks alike
    projs.sort(key=cmp_to_key(_entrywise_order))
    arr = np.array(basis)
    c2 = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    h = np.tensordot(c2, arr, axes=1)
    h = h + h.conj().T
    ks, mus = [], []
    for p in projs:
        w = _range_basis(p)
        inner = np.linalg.eigvalsh(w.conj().T @ h @ w)
        parts = _cluster(inner)
        sizes = {len(q) for q in parts}
        if len(sizes) != 1:
            raise TowerError("unequal eigenvalue multiplicities inside a central block")
        mu = sizes.pop()
        ks.append(len(parts))
        mus.append(mu)
    del dim
    return LevelBlocks(projs, ks, mus)


@dataclass
class BratteliDiagram:
    """Vertices per level (block sizes), inclusion multiplicities and new/old bookkeeping."""

    sizes: list[list[int]]
    mult: list[np.ndarray]
    new: list[list[bool]] = field(default_factory=list)
    reflect: list[dict[int, int]] = field(default_factory=list)
    origin: list[list[tuple[int, int]]] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.sizes) - 1

    def principal_vertices(self) -> list[tuple[int, int]]:
        return [(n, i) for n, flags in enumerate(self.new) for i, f in enumerate(flags) if f]

    def principal_edges(self) -> list[tuple[tuple[int, int], tuple[int, int], int]]:
        out = []
        for n in range(self.depth):
            for p, fp in enumerate(self.new[n]):
                for q, fq in enumerate(self.new[n + 1]):
                    if fp and fq and self.mult[n][p, q]:
                        out.append(((n, p), (n + 1, q), int(self.mult[n][p, q])))
        return out

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "mult": [m.astype(int).tolist() for m in self.mult],
            "new": self.new,
            "reflect": [{str(k): v for k, v in r.items()} for r in self.reflect],
        }


def _chain(t: MarkovTower, top: int) -> list[list[np.ndarray]]:
    return [[t.include_to(b, n, top) for b in t.algebras[n].basis()] for n in range(top + 1)]


def bratteli_from_chain(chain: list[list[np.ndarray]], rng: np.random.Generator) -> tuple[BratteliDiagram, list[LevelBlocks]]:
    """Bratteli data for a chain of subalgebras of a common ``Mat(D)``."""
    blocks = [minimal_central_projections(b, rng) for b in chain]
    mult = []
    for n in range(len(chain) - 1):
        lo, hi = blocks[n], blocks[n + 1]
        m = np.zeros((len(lo.z), len(hi.z)), dtype=int)
        for p, zp in enumerate(lo.z):
            for q, zq in enumerate(hi.z):
                rank = float(np.real(np.trace(zp @ zq)))
                val = rank / (lo.k[p] * hi.mu[q])
                if abs(val - round(val)) > 1e-6:
                    raise TowerError(f"non-integral inclusion multiplicity {val:.6f}")
                m[p, q] = int(round(val))
        mult.append(m)
    return BratteliDiagram([list(b.k) for b in blocks], mult), blocks


def _classify(bd: BratteliDiagram, blocks: list[LevelBlocks], jones: dict[int, np.ndarray], tol: float = 1e-8) -> None:
    """Old vertices at level ``n+1`` are those in the central support of ``e_n``."""
    depth = bd.depth
    bd.new = [[True] * len(bd.sizes[0])]
    bd.reflect = [{}]
    bd.origin = [[(0, i) for i in range(len(bd.sizes[0]))]]
    for m in range(1, depth + 1):
        n = m - 1
        flags, refl, orig = [], {}, []
        for q, zq in enumerate(blocks[m].z):
            if n >= 1 and np.linalg.norm(zq @ jones[n]) > tol:
                hits = [p for p, zp in enumerate(blocks[n - 1].z) if np.linalg.norm(zq @ zp @ jones[n]) > tol]
                if len(hits) != 1:
                    raise TowerError(f"old vertex {q} at level {m} reflects {len(hits)} vertices")
                flags.append(False)
                refl[q] = hits[0]
                orig.append(bd.origin[n - 1][hits[0]])
            else:
                flags.append(True)
                orig.append((m, q))
        bd.new.append(flags)
        bd.reflect.append(refl)
        bd.origin.append(orig)


@dataclass
class TowerDecomposition:
    bratteli: BratteliDiagram
    blocks: list[LevelBlocks]
    chain: list[list[np.ndarray]]
    jones: dict[int, np.ndarray]
    top: int


def decompose_tower(t: MarkovTower, top: int | None = None, seed: int = 0) -> TowerDecomposition:
    """Bratteli diagram of ``M_0 ⊂ ... ⊂ M_top`` computed inside ``Mat(D_top)``."""
    top = t.n_max if top is None else top
    rng = np.random.default_rng(seed)
    chain = _chain(t, top)
    bd, blocks = bratteli_from_chain(chain, rng)
    jones = {k: t.e(k, top) for k in t.jones if k + 1 <= top}
    _classify(bd, blocks, jones)
    return TowerDecomposition(bd, blocks, chain, jones, top)


def bratteli_and_principal_graph(t: MarkovTower, top: int | None = None, seed: int = 0) -> tuple[BratteliDiagram, WeightedBipartiteGraph]:
    """Bratteli diagram and the principal graph (new vertices and the edges between them)."""
    dec = decompose_tower(t, top, seed)
    return dec.bratteli, principal_graph(dec.bratteli)


def vertex_name(v: tuple[int, int]) -> str:
    return f"L{v[0]}.{v[1]}"


def principal_graph(bd: BratteliDiagram) -> WeightedBipartiteGraph:
    verts = bd.principal_vertices()
    v0 = [vertex_name(v) for v in verts if v[0] % 2 == 0]
    v1 = [vertex_name(v) for v in verts if v[0] % 2 == 1]
    pairs = []
    for a, b, m in bd.principal_edges():
        lo, hi = (a, b) if a[0] % 2 == 0 else (b, a)
        pairs += [(vertex_name(lo), vertex_name(hi))] * m
    return graph_from_undirected(v0, v1, pairs)


def bratteli_to_dot(bd: BratteliDiagram, name: str = "Bratteli") -> str:
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for n, sizes in enumerate(bd.sizes):
        for i, k in enumerate(sizes):
            new = bd.new[n][i] if bd.new else True
            style = ', style=filled, fillcolor="lightblue"' if new else ""
            lines.append(f'  "{n}.{i}" [label="{k}"{style}];')
    for n, m in enumerate(bd.mult):
        for p in range(m.shape[0]):
            for q in range(m.shape[1]):
                for _ in range(int(m[p, q])):
                    lines.append(f'  "{n}.{p}" -> "{n + 1}.{q}" [arrowhead=none];')
    lines.append("}")
    return "\n".join(lines)


def principal_graph_to_dot(g: WeightedBipartiteGraph, name: str = "Principal") -> str:
    lines = [f"graph {name} {{"]
    for v in g.v0:
        lines.append(f'  "{v}" [shape=circle, style=filled, fillcolor="lightblue"];')
    for v in g.v1:
        lines.append(f'  "{v}" [shape=circle];')
    for e in g.edges:
        if e.src in g.v0:
            w = g.weight.get(e.id)
            lab = f' [label="{w:.4g}"]' if w is not None else ""
            lines.append(f'  "{e.src}" -- "{e.dst}"{lab};')
    lines.append("}")
    return "\n".join(lines)


# ------------------------------------------------------------------ path matrix units


Path = tuple  # ((vertex, copy), ...) from level 1 on


@dataclass
class PathUnits:
    """Partial isometries ``v_w`` with ``v_w v_w^+ = P_w`` and ``v_w^+ v_w = P_ref(end(w))``;
    ``frames[q]`` is an orthonormal basis of the reference projection at the top level."""

    paths: list[list[Path]]
    ends: list[dict[Path, int]]
    v: dict[Path, np.ndarray]
    frames: dict[int, np.ndarray]
    top: int
    refs: list[dict[int, Path]] = field(default_factory=list)

    def vectors(self, w: Path) -> np.ndarray:
        return self.v[w] @ self.frames[self.ends[self.top][w]]

    def transport(self, x: np.ndarray, level: int | None = None) -> tuple[list[Path], np.ndarray]:
        """``psi(x)[w, w'] = tr(V_w^+ x V_w') / mu`` over top-level paths, zero across blocks."""
        paths = self.paths[self.top]
        vec = {w: self.vectors(w) for w in paths}
        n = len(paths)
        out = np.zeros((n, n), dtype=complex)
        for a, w in enumerate(paths):
            for b, w2 in enumerate(paths):
                if self.ends[self.top][w] != self.ends[self.top][w2]:
                    continue
                mu = vec[w].shape[1]
                out[a, b] = np.trace(vec[w].conj().T @ x @ vec[w2]) / mu
        return paths, out


def path_matrix_units(dec: TowerDecomposition, rng: np.random.Generator) -> PathUnits:
    """Matrix units indexed by Bratteli paths, compatible along the whole chain."""
    bd, blocks, chain = dec.bratteli, dec.blocks, dec.chain
    dim = chain[0][0].shape[0]
    eye = np.eye(dim, dtype=complex)
    paths: list[list[Path]] = [[()]]
    ends: list[dict[Path, int]] = [{(): 0}]
    v: dict[Path, np.ndarray] = {(): eye}
    proj: dict[Path, np.ndarray] = {(): eye}
    ref_path: list[dict[int, Path]] = [{0: ()}]
    for m in range(bd.depth):
        arr = np.array(chain[m + 1])
        c = rng.normal(size=len(arr)) + 1j * rng.normal(size=len(arr))
        h = np.tensordot(c, arr, axes=1)
        h = h + h.conj().T
        c2 = rng.normal(size=len(arr)) + 1j * rng.normal(size=len(arr))
        h2 = np.tensordot(c2, arr, axes=1)
        refs = ref_path[m]
        split: dict[tuple[int, int, int], np.ndarray] = {}
        for p, u0 in refs.items():
            for q, zq in enumerate(blocks[m + 1].z):
                mult = int(bd.mult[m][p, q])
                if not mult:
                    continue
                w = _range_basis(zq @ proj[u0] @ zq)
                vals, vecs = np.linalg.eigh(w.conj().T @ h @ w)
                groups = _cluster(vals)
                if len(groups) != mult:
                    raise TowerError(f"expected {mult} minimal projections, found {len(groups)}")
                for k, g in enumerate(groups):
                    f = w @ vecs[:, g]
                    split[(p, q, k)] = f @ f.conj().T
        new_paths: list[Path] = []
        new_ends: dict[Path, int] = {}
        q_ref: dict[int, np.ndarray] = {}
        iso: dict[tuple[int, int, int], np.ndarray] = {}
        level_refs: dict[int, Path] = {}
        for (p, q, k), qp in sorted(split.items()):
            if q not in q_ref:
                q_ref[q] = qp
                iso[(p, q, k)] = qp
                level_refs[q] = refs[p] + ((q, k),)
                continue
            x = qp @ h2 @ q_ref[q]
            c_val = float(np.real(np.trace(x.conj().T @ x))) / float(np.real(np.trace(q_ref[q])))
            if c_val < 1e-12:
                raise TowerError("failed to connect minimal projections in one block")
            iso[(p, q, k)] = x / np.sqrt(c_val)
        for u in paths[m]:
            p = ends[m][u]
            for (pp, q, k), s in sorted(iso.items()):
                if pp != p:
                    continue
                w = u + ((q, k),)
                new_paths.append(w)
                new_ends[w] = q
                v[w] = v[u] @ s
                proj[w] = v[w] @ v[w].conj().T
        paths.append(new_paths)
        ends.append(new_ends)
        ref_path.append(level_refs)
    frames = {}
    top = bd.depth
    for q, w in ref_path[top].items():
        frames[q] = _range_basis(proj[w])
    return PathUnits(paths, ends, v, frames, top, ref_path)


# ------------------------------------------------------------------ old/new


def old_new_decomposition(t: MarkovTower, n: int, seed: int = 0, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray, Report]:
    """Central support ``X`` of ``e_n`` in ``M_{n+1}`` (the ideal ``M_n e_n M_n``) and ``Y = 1 - X``."""
    if n < 1 or n + 1 > t.n_max:
        raise TowerError("old/new decomposition needs 1 <= n < n_max")
    rng = np.random.default_rng(seed)
    top = n + 1
    blocks = minimal_central_projections([b for b in t.algebras[top].basis()], rng)
    e = t.jones[n]
    x_proj = sum((z for z in blocks.z if np.linalg.norm(z @ e) > 1e-8), np.zeros_like(e))
    y_proj = t.one(top) - x_proj
    rep = Report(f"old/new decomposition at level {top}")
    ideal = []
    for _ in range(4):
        a, b = t.include(n, t.random(n, rng)), t.include(n, t.random(n, rng))
        ideal.append(a @ e @ b)
    rep.add("X contains M_n e_n M_n", max(_dev(x_proj @ z, z) for z in ideal), tol)
    if n >= 2:
        e_prev = t.include(n, t.jones[n - 1])
        rep.add("Y X_n = 0", _dev(y_proj @ e_prev, 0 * e_prev), tol)
        lower = minimal_central_projections(t.algebras[n].basis(), rng)
        x_low = sum((z for z in lower.z if np.linalg.norm(z @ t.jones[n - 1]) > 1e-8), np.zeros_like(t.jones[n - 1]))
        worst = 0.0
        for _ in range(3):
            y = y_proj @ t.random(top, rng) @ y_proj
            worst = max(worst, _dev(x_low @ t.expect(top, y), 0 * x_low))
        rep.add("E(Y_{n+1}) in Y_n", worst, tol)
    return x_proj, y_proj, rep


# ------------------------------------------------------------------ weighting recovery


@dataclass
class RecoveredWeighting:
    graph: WeightedBipartiteGraph
    multisets: dict[tuple[str, str], list[float]]
    report: Report


def _two_step_block(psi_e: np.ndarray, paths: list[Path], prefix: Path) -> tuple[list[tuple], np.ndarray]:
    """Restrict ``psi(e_n)`` to paths ``prefix + (f, g) + tail`` with one fixed tail per endpoint."""
    n = len(prefix)
    pos = {w: i for i, w in enumerate(paths)}
    chosen: dict[int, Path] = {}
    rows = []
    for w in paths:
        if w[:n] != prefix:
            continue
        tail = w[n + 2:]
        r = w[n + 1][0]
        if r not in chosen:
            chosen[r] = tail
        if chosen[r] != tail:
            continue
        rows.append(w)
    idx = [pos[w] for w in rows]
    return rows, psi_e[np.ix_(idx, idx)]


def recover_edge_weighting(t: MarkovTower, top: int | None = None, seed: int = 0, tol: float = 1e-8) -> RecoveredWeighting:
    """Transport each ``e_n`` into the path model, split it as ``r^+ r`` on two-step paths
    and read ``w`` off the eigenvalues of ``phi phi^+`` with ``phi = d^{1/2} r``."""
    top = t.n_max if top is None else top
    dec = decompose_tower(t, top, seed)
    bd = dec.bratteli
    rng = np.random.default_rng(seed + 1)
    units = path_matrix_units(dec, rng)
    d = t.d
    rep = Report(f"edge weighting recovered from {t.name}")
    multisets: dict[tuple[tuple[int, int], tuple[int, int]], list[float]] = {}
    sums: dict[tuple[int, int], float] = {}
    rank_bad = 0
    drift = 0.0
    for n in sorted(dec.jones):
        paths, psi_e = units.transport(dec.jones[n])
        refs: dict[int, Path] = {}
        for u in units.paths[n - 1]:
            refs.setdefault(units.ends[n - 1][u], u)
        for p, u in refs.items():
            src = bd.origin[n - 1][p]
            rows, block = _two_step_block(psi_e, paths, u)
            vals, vecs = np.linalg.eigh((block + block.conj().T) / 2)
            if np.sum(vals > 0.5) != 1:
                rank_bad += 1
                continue
            r = vecs[:, -1] * np.sqrt(vals[-1])
            phi_entries: dict[int, dict] = {}
            for w, amp in zip(rows, r):
                f, g = w[len(u)], w[len(u) + 1]
                phi_entries.setdefault(f[0], {})[(f[1], g)] = amp
            total = 0.0
            for q, entries in phi_entries.items():
                mult = int(bd.mult[n - 1][p, q])
                gs = sorted({g for (_, g) in entries})
                mat = np.zeros((mult, len(gs)), dtype=complex)
                for (fk, g), amp in entries.items():
                    mat[fk, gs.index(g)] = amp
                phi = np.sqrt(d) * mat
                ws = sorted(float(x) for x in np.linalg.eigvalsh(phi @ phi.conj().T))
                total += float(np.real(np.trace(phi.conj().T @ phi)))
                key = (src, bd.origin[n][q])
                if key in multisets:
                    drift = max(drift, max((abs(a - b) for a, b in zip(multisets[key], ws)), default=0.0))
                else:
                    multisets[key] = ws
            sums[src] = total
    rep.add("Jones projection splits with rank one per block", float(rank_bad), 0.5)
    rep.add("sum_Q Tr(phi^+ phi) = d", max((abs(s - d) for s in sums.values()), default=0.0), tol)
    rep.add("weights agree across levels", drift, tol)
    g = principal_graph(bd)
    weight = {}
    by_pair: dict[tuple[str, str], list[str]] = {}
    for e in g.edges:
        by_pair.setdefault((e.src, e.dst), []).append(e.id)
    out_sets: dict[tuple[str, str], list[float]] = {}
    missing = 0
    for (a, b), ids in by_pair.items():
        key = None
        for (s, t_), ws in multisets.items():
            if vertex_name(s) == a and vertex_name(t_) == b:
                key = (s, t_)
        if key is None:
            missing += 1
            continue
        ws = multisets[key]
        out_sets[(a, b)] = ws
    for (a, b), ids in by_pair.items():
        if (a, b) not in out_sets:
            continue
        ws = out_sets[(a, b)]
        rev = out_sets.get((b, a))
        if a in g.v0 or rev is None:
            ordered = sorted(ws)
        else:
            ordered = sorted(ws, reverse=True)
        for eid, w in zip(sorted(ids), ordered):
            weight[eid] = w
    balance = 0.0
    for (a, b), ws in out_sets.items():
        rev = out_sets.get((b, a))
        if rev is not None:
            balance = max(balance, max(abs(x * y - 1.0) for x, y in zip(sorted(ws), sorted(rev, reverse=True))))
    rep.add("recovered weights are balanced", balance, tol)
    rep.add("every principal edge received a weight", float(missing), 0.5)
    graph = g.with_weights(weight) if len(weight) == len(g.edges) else g
    return RecoveredWeighting(graph, out_sets, rep)


def depth_map(g: WeightedBipartiteGraph, base: str) -> dict[str, int]:
    depth = {base: 0}
    frontier = [base]
    while frontier:
        nxt = []
        for v in frontier:
            for e in g.out_edges(v):
                if e.dst not in depth:
                    depth[e.dst] = depth[v] + 1
                    nxt.append(e.dst)
        frontier = nxt
    return depth


def weights_by_depth(g: WeightedBipartiteGraph, base: str) -> dict[tuple[int, int], list[float]]:
    """Edge weights grouped by the depths of their endpoints (a labelling-free fingerprint)."""
    depth = depth_map(g, base)
    out: dict[tuple[int, int], list[float]] = {}
    for e in g.edges:
        if e.id in g.weight and e.src in depth and e.dst in depth:
            out.setdefault((depth[e.src], depth[e.dst]), []).append(g.weight[e.id])
    return {k: sorted(v) for k, v in out.items()}


def principal_base(bd: BratteliDiagram) -> str:
    return vertex_name((0, 0))


# ------------------------------------------------------------------ standard module


def tl_representation(t: MarkovTower, x: TLElement) -> np.ndarray:
    """``rho(D) = d^{|w|} e_{w_1} ... e_{w_r}`` for a reduced word ``w`` of each diagram ``D``."""
    n = x.n
    if n > t.n_max:
        raise TowerError(f"tower has no level {n}")
    words = reduced_words(n)
    out = np.zeros((t.algebras[n].dim,) * 2, dtype=complex)
    cache = {k: t.e(k, n) for k in range(1, n)}
    one = t.one(n)
    for k, c in enumerate(x.coeffs):
        if abs(c) < 1e-14:
            continue
        m = one
        for i in words[k]:
            m = m @ cache[i]
        out += c * (t.d ** len(words[k])) * m
    return out


def tl_cell_basis(k: int, l: int, d: float) -> list[TLElement]:
    """Diagram basis of ``A_{k,l}``: ``TL_{l-k}`` diagrams behind ``k`` straight strands."""
    return [shift_insert(basis_element(l - k, d, a), k) for a in range(catalan(l - k))]


def verify_standard_module(t: MarkovTower, lattice=None, j_max: int | None = None, tol: float = 1e-9, seed: int = 0) -> Report:
    """(a) ``A_{0,i}`` sits unitally in ``M_i``, (b) ``E_i`` restricts to ``E^r``,
    (c) ``[M_i, A_{k,l}] = 0`` for ``i <= k <= l``."""
    rng = np.random.default_rng(seed)
    top = min(t.n_max, j_max if j_max is not None else t.n_max)
    d = t.d

    def cell(k: int, l: int) -> list[TLElement]:
        if lattice is not None and (k, l) in lattice.cells:
            return lattice.cell(k, l).basis
        return tl_cell_basis(k, l, d)

    rep = Report(f"standard right module: {t.name}")
    hom = incl = unit = 0.0
    cexp = 0.0
    comm = 0.0
    for i in range(top + 1):
        basis = cell(0, i)
        reps = [tl_representation(t, x) for x in basis]
        unit = max(unit, _dev(tl_representation(t, tl_identity(i, d)), t.one(i)))
        for a in range(min(len(basis), 6)):
            for b in range(min(len(basis), 6)):
                hom = max(hom, _dev(tl_representation(t, basis[a] * basis[b]), reps[a] @ reps[b]))
        for x, rx in zip(basis, reps):
            if i + 1 <= t.n_max and i + 1 <= top:
                incl = max(incl, _dev(tl_representation(t, embed_right(x, 1)), t.include(i, rx)))
            if i >= 1:
                cexp = max(cexp, _dev(t.expect(i, rx), tl_representation(t, right_expectation(x))))
    for i in range(top + 1):
        xs = [t.random(i, rng) for _ in range(3)]
        for l in range(i, top + 1):
            for k in range(i, l + 1):
                for a in cell(k, l):
                    ra = tl_representation(t, a)
                    for x in xs:
                        xx = t.include_to(x, i, l)
                        comm = max(comm, _dev(xx @ ra, ra @ xx))
    rep.add("(a) rho is unital", unit, tol)
    rep.add("(a) rho is multiplicative on A_{0,i}", hom, tol)
    rep.add("(a) rho commutes with the inclusions", incl, tol)
    rep.add("(b) E_i restricts to E^r_{0,i}", cexp, tol)
    rep.add("(c) [M_i, A_{k,l}] = 0 for i <= k <= l", comm, tol)
    return rep


def relative_commutant_dim(t: MarkovTower, n: int, seed: int = 0) -> int:
    """``dim (M_{n-1}' cap M_{n+1})`` by direct kernel computation."""
    rng = np.random.default_rng(seed)
    basis = t.algebras[n + 1].basis()
    cols = []
    for _ in range(2):
        r = t.include_to(t.random(n - 1, rng), n - 1, n + 1)
        cols.append(np.array([(b @ r - r @ b).ravel() for b in basis]).T)
    return _kernel(np.vstack(cols)).shape[1]


def two_step_commutant_dim(g: WeightedBipartiteGraph, base: str, n: int) -> int:
    """``sum_{p, r} (#two-step paths p -> r)^2`` over ``p`` at distance ``n-1`` from ``base``."""
    a = g.adjacency()
    verts = g.vertices
    counts = path_counts(g, base, n - 1)
    two = a @ a
    total = 0
    for p in counts:
        i = verts.index(p)
        total += int(sum(c * c for c in two[i]))
    return total
