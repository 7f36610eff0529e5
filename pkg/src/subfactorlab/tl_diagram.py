"""Shaded Temperley-Lieb-Jones diagram algebra.

Diagrams on ``2n`` boundary points are perfect noncrossing matchings.  Points
are numbered ``1..2n`` counterclockwise starting at the bottom-left corner:
bottom points ``1..n`` run left to right and top points ``n+1..2n`` run right
to left.  Internally the same numbering is used 0-based.

The product ``x * y`` stacks ``x`` on top of ``y``; each closed loop removed
contributes a factor ``d``.  The Jones projections are ``e_i = d^{-1} U_i``
where ``U_i`` is the cup-cap diagram on strands ``i, i+1``.

Elements are stored as dense coefficient vectors over the diagram basis, with
structure constants cached per strand count.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterable

import numpy as np

from .report import Report

PRUNE_TOL = 1e-14


class TLError(ValueError):
    """Raised on incompatible or out-of-range TL operations."""


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


@dataclass(frozen=True)
class TLContext:
    n: int
    d: float
    parity: int = 1

    def __post_init__(self) -> None:
        if self.d <= 0:
            raise TLError(f"loop parameter must be positive, got {self.d}")
        if self.n < 0:
            raise TLError("strand count must be nonnegative")
        if self.parity not in (1, -1):
            raise TLError("parity must be +1 or -1")


@dataclass(frozen=True)
class TLDiagram:
    """A noncrossing pairing; ``pairs`` are sorted 1-based endpoint pairs."""

    n: int
    pairs: tuple[tuple[int, int], ...]
    parity: int = 1

    @classmethod
    def from_partner(cls, partner: tuple[int, ...], parity: int = 1) -> "TLDiagram":
        n = len(partner) // 2
        pairs = tuple(sorted((p + 1, q + 1) for p, q in enumerate(partner) if p < q))
        return cls(n, pairs, parity)

    @property
    def partner(self) -> tuple[int, ...]:
        return _partner_of(self.pairs, self.n)

    def through_strands(self) -> int:
        part = self.partner
        return sum(1 for p in range(self.n) if part[p] >= self.n)


@lru_cache(maxsize=None)
def _partner_of(pairs: tuple[tuple[int, int], ...], n: int) -> tuple[int, ...]:
    out = [0] * (2 * n)
    for a, b in pairs:
        out[a - 1] = b - 1
        out[b - 1] = a - 1
    return tuple(out)


def _matchings(points: tuple[int, ...]) -> list[list[tuple[int, int]]]:
    if not points:
        return [[]]
    first = points[0]
    result = []
    for k in range(1, len(points), 2):
        inner = points[1:k]
        outer = points[k + 1:]
        for a in _matchings(inner):
            for b in _matchings(outer):
                result.append([(first, points[k])] + a + b)
    return result


@lru_cache(maxsize=None)
def _basis_partners(n: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for m in _matchings(tuple(range(2 * n))):
        part = [0] * (2 * n)
        for a, b in m:
            part[a] = b
            part[b] = a
        out.append(tuple(part))
    out.sort()
    return tuple(out)


def enumerate_basis(n: int, parity: int = 1) -> list[TLDiagram]:
    """All noncrossing perfect matchings on ``2n`` points (Catalan many)."""
    if n < 0:
        raise TLError("n must be nonnegative")
    return [TLDiagram.from_partner(p, parity) for p in _basis_partners(n)]


@lru_cache(maxsize=None)
def _basis_index(n: int) -> dict[tuple[int, ...], int]:
    return {p: k for k, p in enumerate(_basis_partners(n))}


def _compose_partners(upper: tuple[int, ...], lower: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    """Stack ``upper`` on ``lower``; return the result and the number of loops."""
    n = len(upper) // 2
    top = 2 * n - 1
    result = [-1] * (2 * n)
    seen = [False] * n

    def walk_from_lower(p: int) -> int:
        # p is a lower-diagram point; follow until an external point is reached
        while True:
            q = lower[p]
            if q < n:
                return q
            m = top - q
            seen[m] = True
            r = upper[m]
            if r >= n:
                return r
            seen[r] = True
            p = top - r

    def walk_from_upper(p: int) -> int:
        while True:
            q = upper[p]
            if q >= n:
                return q
            seen[q] = True
            r = lower[top - q]
            if r < n:
                return r
            m = top - r
            seen[m] = True
            p = m

    for p in range(n):
        if result[p] < 0:
            q = walk_from_lower(p)
            result[p] = q
            result[q] = p
    for p in range(n, 2 * n):
        if result[p] < 0:
            q = walk_from_upper(p)
            result[p] = q
            result[q] = p
    loops = 0
    for m in range(n):
        if seen[m]:
            continue
        loops += 1
        cur = m
        while not seen[cur]:
            seen[cur] = True
            r = lower[top - cur]
            nxt = top - r
            seen[nxt] = True
            cur = upper[nxt]
    return tuple(result), loops


class _Table:
    """Lazily computed structure constants for one strand count."""

    def __init__(self, n: int) -> None:
        self.n = n
        self.partners = _basis_partners(n)
        self.index = _basis_index(n)
        self.size = len(self.partners)
        self._idx: np.ndarray | None = None
        self._loops: np.ndarray | None = None

    def _build(self) -> None:
        size = self.size
        idx = np.empty((size, size), dtype=np.int64)
        loops = np.empty((size, size), dtype=np.int64)
        for a, pa in enumerate(self.partners):
            for b, pb in enumerate(self.partners):
                res, lp = _compose_partners(pa, pb)
                idx[a, b] = self.index[res]
                loops[a, b] = lp
        self._idx, self._loops = idx, loops

    @property
    def idx(self) -> np.ndarray:
        if self._idx is None:
            self._build()
        return self._idx

    @property
    def loops(self) -> np.ndarray:
        if self._loops is None:
            self._build()
        return self._loops


@lru_cache(maxsize=None)
def _table(n: int) -> _Table:
    return _Table(n)


@dataclass(eq=False)
class TLElement:
    """Complex linear combination of diagrams at fixed ``n``, ``d`` and parity."""

    n: int
    d: float
    coeffs: np.ndarray
    parity: int = 1
    _terms: dict | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        c = np.where(np.abs(c) < PRUNE_TOL, 0.0, c)
        object.__setattr__(self, "coeffs", c)

    @property
    def terms(self) -> dict[TLDiagram, complex]:
        partners = _basis_partners(self.n)
        return {
            TLDiagram.from_partner(partners[k], self.parity): complex(c)
            for k, c in enumerate(self.coeffs)
            if c != 0
        }

    @property
    def ctx(self) -> TLContext:
        return TLContext(self.n, self.d, self.parity)

    def _check(self, other: "TLElement") -> None:
        if self.n != other.n or self.parity != other.parity or not np.isclose(self.d, other.d, rtol=0, atol=1e-15):
            raise TLError(
                f"dimension mismatch: (n={self.n}, d={self.d}, parity={self.parity}) vs "
                f"(n={other.n}, d={other.d}, parity={other.parity})"
            )

    def _new(self, coeffs: np.ndarray) -> "TLElement":
        return TLElement(self.n, self.d, coeffs, self.parity)

    def __add__(self, other: "TLElement") -> "TLElement":
        self._check(other)
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other: "TLElement") -> "TLElement":
        self._check(other)
        return self._new(self.coeffs - other.coeffs)

    def __neg__(self) -> "TLElement":
        return self._new(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, TLElement):
            return multiply(self, other)
        return self._new(self.coeffs * complex(other))

    def __rmul__(self, other):
        return self._new(self.coeffs * complex(other))

    def __truediv__(self, other):
        return self._new(self.coeffs / complex(other))

    @property
    def adjoint(self) -> "TLElement":
        return involution(self)

    def norm(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def allclose(self, other: "TLElement", tol: float = 1e-9) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs), initial=0.0) < tol)


def basis_element(n: int, d: float, k: int, parity: int = 1) -> TLElement:
    c = np.zeros(catalan(n), dtype=complex)
    c[k] = 1.0
    return TLElement(n, d, c, parity)


def from_diagram(diagram: TLDiagram, d: float, coeff: complex = 1.0) -> TLElement:
    c = np.zeros(catalan(diagram.n), dtype=complex)
    c[_basis_index(diagram.n)[diagram.partner]] = coeff
    return TLElement(diagram.n, d, c, diagram.parity)


def from_partner(partner: Iterable[int], d: float, coeff: complex = 1.0, parity: int = 1) -> TLElement:
    partner = tuple(partner)
    n = len(partner) // 2
    c = np.zeros(catalan(n), dtype=complex)
    c[_basis_index(n)[partner]] = coeff
    return TLElement(n, d, c, parity)


def identity_partner(n: int) -> tuple[int, ...]:
    return tuple(2 * n - 1 - p for p in range(2 * n))


def identity(n: int, d: float, parity: int = 1) -> TLElement:
    return from_partner(identity_partner(n), d, 1.0, parity)


def zero(n: int, d: float, parity: int = 1) -> TLElement:
    return TLElement(n, d, np.zeros(catalan(n), dtype=complex), parity)


def multiply(x: TLElement, y: TLElement) -> TLElement:
    """Diagrammatic product: ``x`` stacked on top of ``y``."""
    x._check(y)
    tab = _table(x.n)
    nz_x = np.nonzero(x.coeffs)[0]
    nz_y = np.nonzero(y.coeffs)[0]
    out = np.zeros(tab.size, dtype=complex)
    if nz_x.size and nz_y.size:
        sub_idx = tab.idx[np.ix_(nz_x, nz_y)]
        sub_loops = tab.loops[np.ix_(nz_x, nz_y)]
        w = np.outer(x.coeffs[nz_x], y.coeffs[nz_y]) * np.power(float(x.d), sub_loops)
        np.add.at(out, sub_idx.ravel(), w.ravel())
    return TLElement(x.n, x.d, out, x.parity)


def _cup_cap_partner(n: int, i: int) -> tuple[int, ...]:
    part = list(identity_partner(n))
    a, b = i - 1, i  # bottom points (0-based) of strands i, i+1
    ta, tb = 2 * n - 1 - a, 2 * n - 1 - b
    part[a], part[b] = b, a
    part[ta], part[tb] = tb, ta
    return tuple(part)


def cup_cap(ctx: TLContext, i: int) -> TLElement:
    """Unnormalized cup-cap diagram ``U_i``."""
    if not 1 <= i <= ctx.n - 1:
        raise TLError(f"generator index {i} out of range for n={ctx.n}")
    return from_partner(_cup_cap_partner(ctx.n, i), ctx.d, 1.0, ctx.parity)


def jones_generator(ctx: TLContext, i: int) -> TLElement:
    """Jones projection ``e_i = d^{-1} U_i``."""
    return cup_cap(ctx, i) / ctx.d


def involution(x: TLElement) -> TLElement:
    """Vertical reflection with complex conjugated coefficients."""
    n = x.n
    index = _basis_index(n)
    out = np.zeros_like(x.coeffs)
    for k, part in enumerate(_basis_partners(n)):
        c = x.coeffs[k]
        if c == 0:
            continue
        refl = [0] * (2 * n)
        for p in range(2 * n):
            refl[2 * n - 1 - p] = 2 * n - 1 - part[p]
        out[index[tuple(refl)]] += np.conj(c)
    return TLElement(n, x.d, out, x.parity)


@lru_cache(maxsize=None)
def _closure_loops(n: int) -> np.ndarray:
    loops = np.zeros(catalan(n), dtype=np.int64)
    for k, part in enumerate(_basis_partners(n)):
        seen = [False] * (2 * n)
        count = 0
        for start in range(2 * n):
            if seen[start]:
                continue
            count += 1
            p = start
            while not seen[p]:
                seen[p] = True
                q = part[p]
                seen[q] = True
                p = 2 * n - 1 - q
        loops[k] = count
    return loops


def markov_trace(x: TLElement) -> complex:
    """``tr(D) = d^{loops(right closure) - n}`` extended linearly."""
    if x.n == 0:
        return complex(x.coeffs[0])
    weights = np.power(float(x.d), _closure_loops(x.n) - x.n)
    return complex(np.dot(weights, x.coeffs))


def _remove_adjacent(part: tuple[int, ...], a: int, b: int) -> tuple[tuple[int, ...], int]:
    """Join the strands ending at circularly adjacent points ``a``, ``b``."""
    n2 = len(part)
    loop = 1 if part[a] == b else 0
    new = list(part)
    if not loop:
        pa, pb = part[a], part[b]
        new[pa], new[pb] = pb, pa
    keep = [p for p in range(n2) if p not in (a, b)]
    relabel = {p: k for k, p in enumerate(keep)}
    return tuple(relabel[new[p]] for p in keep), loop


@lru_cache(maxsize=None)
def _right_cap_map(n: int) -> tuple[np.ndarray, np.ndarray]:
    idx_small = _basis_index(n - 1)
    targets = np.empty(catalan(n), dtype=np.int64)
    loops = np.empty(catalan(n), dtype=np.int64)
    for k, part in enumerate(_basis_partners(n)):
        res, lp = _remove_adjacent(part, n - 1, n)
        targets[k] = idx_small[res]
        loops[k] = lp
    return targets, loops


@lru_cache(maxsize=None)
def _left_cap_map(n: int) -> tuple[np.ndarray, np.ndarray]:
    idx_small = _basis_index(n - 1)
    targets = np.empty(catalan(n), dtype=np.int64)
    loops = np.empty(catalan(n), dtype=np.int64)
    for k, part in enumerate(_basis_partners(n)):
        # points 2n-1 and 0 are adjacent; rotate so they become last two
        rot = tuple((part[(p + 1) % (2 * n)] - 1) % (2 * n) for p in range(2 * n))
        res, lp = _remove_adjacent(rot, 2 * n - 2, 2 * n - 1)
        targets[k] = idx_small[res]
        loops[k] = lp
    return targets, loops


def _apply_cap(x: TLElement, maps: tuple[np.ndarray, np.ndarray]) -> TLElement:
    targets, loops = maps
    out = np.zeros(catalan(x.n - 1), dtype=complex)
    np.add.at(out, targets, x.coeffs * np.power(float(x.d), loops) / x.d)
    return TLElement(x.n - 1, x.d, out, x.parity)


def right_expectation(x: TLElement, steps: int = 1) -> TLElement:
    """Cap the rightmost strand with factor ``d^{-1}`` (repeated ``steps`` times)."""
    for _ in range(steps):
        if x.n == 0:
            raise TLError("right expectation undefined at n=0")
        x = _apply_cap(x, _right_cap_map(x.n))
    return x


def left_cap(x: TLElement) -> TLElement:
    """Cap the leftmost strand around the left with factor ``d^{-1}``; parity flips."""
    if x.n == 0:
        raise TLError("left cap undefined at n=0")
    out = _apply_cap(x, _left_cap_map(x.n))
    return TLElement(out.n, out.d, out.coeffs, -x.parity)


@lru_cache(maxsize=None)
def _shift_map(n: int, s: int) -> np.ndarray:
    idx_big = _basis_index(n + s)
    m = 2 * (n + s)
    out = np.empty(catalan(n), dtype=np.int64)
    for k, part in enumerate(_basis_partners(n)):
        new = [0] * m
        for p in range(2 * n):
            new[p + s] = part[p] + s
        for t in range(s):
            new[t] = m - 1 - t
            new[m - 1 - t] = t
        out[k] = idx_big[tuple(new)]
    return out


def shift_insert(x: TLElement, strands: int = 2) -> TLElement:
    """Prepend ``strands`` through-strands on the left (the shift map ``S^{(strands/2)}``)."""
    if strands < 0:
        raise TLError("cannot prepend a negative number of strands")
    if strands == 0:
        return x
    out = np.zeros(catalan(x.n + strands), dtype=complex)
    out[_shift_map(x.n, strands)] = x.coeffs
    parity = x.parity if strands % 2 == 0 else -x.parity
    return TLElement(x.n + strands, x.d, out, parity)


def strip_left(x: TLElement, strands: int) -> TLElement:
    """Inverse of :func:`shift_insert` on elements whose first strands are straight."""
    if strands == 0:
        return x
    m = _shift_map(x.n - strands, strands)
    rest = np.ones(x.coeffs.size, dtype=bool)
    rest[m] = False
    if np.max(np.abs(x.coeffs[rest]), initial=0.0) > 1e-10:
        raise TLError("element does not have straight leading strands")
    parity = x.parity if strands % 2 == 0 else -x.parity
    return TLElement(x.n - strands, x.d, x.coeffs[m], parity)


@lru_cache(maxsize=None)
def _embed_map(n: int, m: int) -> np.ndarray:
    idx_big = _basis_index(n + m)
    size = 2 * (n + m)
    out = np.empty(catalan(n), dtype=np.int64)
    for k, part in enumerate(_basis_partners(n)):
        new = [0] * size

        def img(p: int) -> int:
            return p if p < n else p + 2 * m

        for p in range(2 * n):
            new[img(p)] = img(part[p])
        for t in range(m):
            b = n + t
            tp = size - 1 - b
            new[b], new[tp] = tp, b
        out[k] = idx_big[tuple(new)]
    return out


def embed_right(x: TLElement, strands: int = 1) -> TLElement:
    """Unital inclusion ``TL_n -> TL_{n+strands}`` adding strands on the right."""
    if strands == 0:
        return x
    out = np.zeros(catalan(x.n + strands), dtype=complex)
    out[_embed_map(x.n, strands)] = x.coeffs
    return TLElement(x.n + strands, x.d, out, x.parity)


def partial_projection(i: int, j: int, k: int, d: float, n: int | None = None, parity: int = 1) -> TLElement:
    """``e^i_{j,k} = d^{jk} e^i_k e^{i+1}_k ... e^{i+j}_k`` at ambient strand count ``n``.

    ``e^i_k = d^{k(k-1)} (e_{k+i}...e_{i+1})(e_{k+i+1}...e_{i+2})...(e_{2k+i-1}...e_{k+i})``.
    """
    need = i + j + 2 * k
    if n is None:
        n = need
    if min(i, j, k) < 0 or n < need:
        raise TLError(f"partial projection e^{i}_({j},{k}) needs at least {need} strands, got {n}")
    ctx = TLContext(n, d, parity)
    out = identity(n, d, parity)
    for t in range(j + 1):
        out = out * _single_partial(ctx, i + t, k)
    return out * (d ** (j * k))


def _single_partial(ctx: TLContext, i: int, k: int) -> TLElement:
    out = identity(ctx.n, ctx.d, ctx.parity)
    for r in range(k):
        for g in range(k + i + r, i + r, -1):
            out = out * jones_generator(ctx, g)
    return out * (ctx.d ** (k * (k - 1)))


def nested_cups(n: int, d: float, i: int, k: int, parity: int = 1) -> TLElement:
    """The pure diagram with ``k`` nested cups and caps on strands ``i+1..i+2k``."""
    part = list(identity_partner(n))
    for t in range(k):
        a, b = i + t, i + 2 * k - 1 - t
        part[a], part[b] = b, a
        ta, tb = 2 * n - 1 - a, 2 * n - 1 - b
        part[ta], part[tb] = tb, ta
    return from_partner(part, d, 1.0, parity)


@lru_cache(maxsize=None)
def reduced_words(n: int) -> tuple[tuple[int, ...], ...]:
    """For each basis diagram a word ``(i_1, ..., i_r)`` with ``U_{i_1}...U_{i_r}`` equal to it."""
    words: dict[int, tuple[int, ...]] = {}
    index = _basis_index(n)
    start = identity_partner(n)
    words[index[start]] = ()
    queue = deque([start])
    gens = [_cup_cap_partner(n, i) for i in range(1, n)]
    while queue:
        cur = queue.popleft()
        w = words[index[cur]]
        for i, g in enumerate(gens, start=1):
            res, loops = _compose_partners(g, cur)
            if loops:
                continue
            k = index[res]
            if k not in words:
                words[k] = (i,) + w
                queue.append(res)
    return tuple(words[k] for k in range(len(index)))


def gram_matrix(n: int, d: float) -> np.ndarray:
    """Gram matrix ``tr(b_a^* b_b)`` of the diagram basis."""
    size = catalan(n)
    basis = [basis_element(n, d, k) for k in range(size)]
    adj = [involution(b) for b in basis]
    g = np.empty((size, size), dtype=complex)
    for a in range(size):
        for b in range(size):
            g[a, b] = markov_trace(adj[a] * basis[b])
    return g


def commutator(x: TLElement, y: TLElement) -> TLElement:
    return x * y - y * x


def verify_tl_algebra(n: int, d: float, tol: float = 1e-12) -> Report:
    """Basis size, Jones relations, exhaustive associativity and Gram positivity at ``n``."""
    rep = Report(f"TL_{n} at d={d:.6g}")
    size = catalan(n)
    rep.add_bool(f"basis size = Catalan({n}) = {size}", len(_basis_partners(n)) == size)
    ctx = TLContext(n, d)
    es = {i: jones_generator(ctx, i) for i in range(1, n)}
    proj = adj = braid = far = 0.0
    for i, e in es.items():
        proj = max(proj, (e * e - e).norm())
        adj = max(adj, (e.adjoint - e).norm())
        for j, f in es.items():
            if abs(i - j) == 1:
                braid = max(braid, (e * f * e - e / d**2).norm())
            elif abs(i - j) >= 2:
                far = max(far, commutator(e, f).norm())
    rep.add("e_i^2 = e_i = e_i^*", max(proj, adj), tol)
    rep.add("e_i e_{i+-1} e_i = d^-2 e_i", braid, tol)
    rep.add("e_i e_j = e_j e_i for |i-j| >= 2", far, tol)
    basis = [basis_element(n, d, k) for k in range(size)]
    assoc = 0.0
    for a in basis:
        for b in basis:
            ab = a * b
            for c in basis:
                assoc = max(assoc, (ab * c - a * (b * c)).norm())
    rep.add("associativity on all basis triples", assoc, tol)
    gmin = float(np.linalg.eigvalsh(gram_matrix(n, d)).min()) if size else 1.0
    rep.add_bool("Gram matrix positive definite", gmin > 1e-6, f"min eigenvalue {gmin:.4g}")
    return rep
