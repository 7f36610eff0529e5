"""The Temperley-Lieb-Jones standard lambda-lattice ``A_{i,j} = <e_{i+1}, ..., e_{j-1}>``.

Cells are subspaces of ``TL_j`` given by spanning sets of words in the Jones
projections, pruned by rank under the trace inner product.  Both conditional
expectations, the 2-shift maps and the relative commutant construction are
provided together with verifiers for the lattice axioms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .report import AxiomViolation, Report
from .tl_diagram import (
    TLContext,
    TLElement,
    TLError,
    catalan,
    embed_right,
    gram_matrix,
    identity,
    involution,
    jones_generator,
    left_cap,
    markov_trace,
    partial_projection,
    right_expectation,
    shift_insert,
    strip_left,
)

RANK_TOL = 1e-9


class RegimeError(ValueError):
    """The modulus lies outside the supported (semisimple, d >= 2) regime."""


@dataclass
class LambdaCell:
    i: int
    j: int
    basis: list[TLElement]

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass
class LambdaLattice:
    d: float
    j_max: int
    cells: dict[tuple[int, int], LambdaCell] = field(default_factory=dict)

    def cell(self, i: int, j: int) -> LambdaCell:
        try:
            return self.cells[(i, j)]
        except KeyError as exc:
            raise TLError(f"cell A_({i},{j}) outside the truncation window") from exc

    def e(self, k: int, n: int) -> TLElement:
        """Jones projection ``e_k`` inside ``TL_n``."""
        return jones_generator(TLContext(n, self.d), k)

    def one(self, n: int) -> TLElement:
        return identity(n, self.d)

    def dim(self, i: int, j: int) -> int:
        return self.cell(i, j).dim


# ---------------------------------------------------------------- linear algebra


_CHOL: dict[tuple[int, float], np.ndarray] = {}


def _chol_adjoint(n: int, d: float) -> np.ndarray:
    """``L^*`` with ``G = L L^*``, so ``L^* c`` are trace-orthonormal coordinates."""
    key = (n, float(d))
    if key not in _CHOL:
        _CHOL[key] = np.linalg.cholesky(gram_matrix(n, d)).conj().T
    return _CHOL[key]


def _coeff_matrix(elements: list[TLElement]) -> np.ndarray:
    return np.array([x.coeffs for x in elements]).T


def orthonormal_coords(elements: list[TLElement], n: int, d: float) -> np.ndarray:
    """Coordinates in a Gram-orthonormalised frame (columns span the subspace)."""
    if not elements:
        return np.zeros((catalan(n), 0), dtype=complex)
    coords = _chol_adjoint(n, d) @ _coeff_matrix(elements)
    u, s, _ = np.linalg.svd(coords, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * max(1.0, s[0] if s.size else 1.0)))
    return u[:, :rank]


def projection_residual(x: TLElement, subspace: list[TLElement]) -> float:
    """Trace-norm distance from ``x`` to the span of ``subspace``."""
    v = _chol_adjoint(x.n, x.d) @ x.coeffs
    q = orthonormal_coords(subspace, x.n, x.d)
    r = v - q @ (q.conj().T @ v)
    return float(np.linalg.norm(r))


def subspace_distance(a: list[TLElement], b: list[TLElement]) -> float:
    """Largest projection residual of either spanning set against the other."""
    worst = 0.0
    for x in a:
        worst = max(worst, projection_residual(x, b))
    for x in b:
        worst = max(worst, projection_residual(x, a))
    return worst


def _solve_in_span(target: TLElement, columns: list[TLElement]) -> tuple[np.ndarray, float]:
    mat = _coeff_matrix(columns)
    sol, *_ = np.linalg.lstsq(mat, target.coeffs, rcond=None)
    resid = float(np.max(np.abs(mat @ sol - target.coeffs), initial=0.0))
    return sol, resid


def _combine(basis: list[TLElement], coeffs: np.ndarray) -> TLElement:
    out = basis[0] * 0
    for b, c in zip(basis, coeffs):
        if c != 0:
            out = out + b * c
    return out


# ---------------------------------------------------------------- construction


def _span_of_words(n: int, d: float, gens: list[TLElement], max_len: int) -> list[TLElement]:
    one = identity(n, d)
    kept = [one]
    frontier = [one]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for g in gens:
                cand = w * g
                if projection_residual(cand, kept) > RANK_TOL * max(1.0, cand.norm()):
                    kept.append(cand)
                    nxt.append(cand)
        if not nxt:
            break
        frontier = nxt
    return kept


def build_tlj_lattice(d: float, j_max: int) -> LambdaLattice:
    """All cells ``A_{i,j}``, ``0 <= i <= j <= j_max``, of the TLJ lattice."""
    if d < 2:
        raise RegimeError(f"d={d} < 2 is outside the semisimple regime")
    if j_max > 7:
        raise TLError("j_max is capped at 7")
    lat = LambdaLattice(d, j_max)
    for j in range(j_max + 1):
        ctx = TLContext(j, d)
        for i in range(j + 1):
            gens = [jones_generator(ctx, k) for k in range(i + 1, j)]
            basis = _span_of_words(j, d, gens, 2 * (j - i))
            lat.cells[(i, j)] = LambdaCell(i, j, basis)
    return lat


# ---------------------------------------------------------------- expectations


def horizontal_expectation(x: TLElement) -> TLElement:
    """``E^r_{i,j}``: cap the rightmost strand, ``A_{i,j} -> A_{i,j-1}``."""
    return right_expectation(x)


def vertical_expectation_diagram(x: TLElement, i: int) -> TLElement:
    """``E^l_{i,j}`` drawn as a cap on strand ``i+1`` around the left."""
    core = strip_left(x, i)
    capped = left_cap(core)
    out = shift_insert(capped, i + 1)
    return TLElement(out.n, out.d, out.coeffs, x.parity)


def vertical_expectation(lattice: LambdaLattice, i: int, j: int, x: TLElement, tol: float = 1e-9) -> TLElement:
    """``E^l_{i,j}: A_{i,j} -> A_{i+1,j}``.

    For ``i >= 1`` this solves ``y e_i = e_i x e_i`` for ``y`` in ``A_{i+1,j}``.
    For ``i = 0`` there is no ``e_0`` and the left cap is used directly.
    """
    if x.n != j:
        raise TLError(f"element has {x.n} strands, expected {j}")
    if i >= j:
        raise TLError("E^l_{i,j} needs i < j")
    if i == 0:
        return vertical_expectation_diagram(x, 0)
    e = lattice.e(i, j)
    target = e * x * e
    basis = lattice.cell(i + 1, j).basis
    cols = [b * e for b in basis]
    sol, resid = _solve_in_span(target, cols)
    if resid > tol:
        raise AxiomViolation(f"y e_{i} = e_{i} x e_{i} has no solution in A_({i + 1},{j}); residual {resid:.2e}")
    return _combine(basis, sol)


def multi_right_expectation(x: TLElement, k: int) -> TLElement:
    return right_expectation(x, k)


# ---------------------------------------------------------------- shift maps


def shift_map(lattice: LambdaLattice, i: int, j: int, x: TLElement) -> TLElement:
    """``S_{i,j}(x) = d^{2j-2i+2} E^l_{i,j+2}(e_{i+1}...e_j x e_{j+1} e_j ... e_{i+1})``."""
    d = lattice.d
    n = j + 2
    xx = embed_right(x, n - x.n)
    left = identity(n, d)
    for k in range(i + 1, j + 1):
        left = left * lattice.e(k, n)
    right = lattice.e(j + 1, n)
    for k in range(j, i, -1):
        right = right * lattice.e(k, n)
    inner = left * xx * right
    return vertical_expectation(lattice, i, n, inner) * (d ** (2 * j - 2 * i + 2))


def shift_power(lattice: LambdaLattice, i: int, j: int, x: TLElement, times: int) -> TLElement:
    """``S^{(times)}`` as the iterate of 2-shifts."""
    for t in range(times):
        x = shift_map(lattice, i + 2 * t, j + 2 * t, x)
    return x


# ---------------------------------------------------------------- relative commutants


def relative_commutant(ambient: list[TLElement], constraints: list[TLElement], tol: float = RANK_TOL) -> list[TLElement]:
    """Basis of ``{x in span(ambient) : [x, c] = 0 for all c}``."""
    if not constraints:
        return list(ambient)
    blocks = []
    for c in constraints:
        cols = [(b * c - c * b).coeffs for b in ambient]
        blocks.append(np.array(cols).T)
    mat = np.vstack(blocks)
    _, s, vh = np.linalg.svd(mat)
    scale = max(1.0, s[0]) if s.size else 1.0
    rank = int(np.sum(s > tol * scale))
    kernel = vh[rank:].conj().T
    return [_combine(ambient, kernel[:, k]) for k in range(kernel.shape[1])]


def reconstruct_by_commutants(lattice: LambdaLattice) -> dict[tuple[int, int], list[TLElement]]:
    """Rows ``i >= 2`` rebuilt as ``A_{i,j} = A_{i-1,j} cap {e_{i-1}}'`` from rows 0 and 1."""
    out: dict[tuple[int, int], list[TLElement]] = {}
    for j in range(lattice.j_max + 1):
        for i in range(min(j, 1) + 1):
            out[(i, j)] = lattice.cell(i, j).basis
        for i in range(2, j + 1):
            out[(i, j)] = relative_commutant(out[(i - 1, j)], [lattice.e(i - 1, j)])
    return out


# ---------------------------------------------------------------- verifiers


def check_commuting_square(lattice: LambdaLattice, i: int, j: int, tol: float = 1e-9, e_left=None) -> Report:
    """``E^l_{i,j} o E^r_{i,j+1} = E^r_{i+1,j+1} o E^l_{i,j+1}`` on a basis of ``A_{i,j+1}``."""
    rep = Report(f"commuting square ({i},{j})")
    if i >= j:
        rep.add("commuting square", 0.0, tol, "vacuous: both sides land in C")
        return rep
    el = e_left or (lambda a, b, x: vertical_expectation(lattice, a, b, x))
    worst = 0.0
    for x in lattice.cell(i, j + 1).basis:
        lhs = el(i, j, horizontal_expectation(x))
        rhs = horizontal_expectation(el(i, j + 1, x))
        worst = max(worst, float(np.max(np.abs(lhs.coeffs - rhs.coeffs))))
    rep.add("commuting square", worst, tol)
    return rep


def check_standardness(lattice: LambdaLattice, tol: float = 1e-9) -> Report:
    """``[A_{i,j}, A_{k,l}] = 0`` whenever ``i <= j <= k <= l``."""
    rep = Report("standard condition")
    worst = 0.0
    count = 0
    jm = lattice.j_max
    for l in range(jm + 1):
        for k in range(l + 1):
            big = lattice.cell(k, l).basis
            for j in range(k + 1):
                for i in range(j + 1):
                    for x in lattice.cell(i, j).basis:
                        xx = embed_right(x, l - j)
                        for y in big:
                            worst = max(worst, (xx * y - y * xx).norm())
                            count += 1
    rep.add("standard condition", worst, tol, f"{count} commutators")
    return rep


def check_markov_conditions(lattice: LambdaLattice, tol: float = 1e-10) -> Report:
    """Dimension equalities (c1) and ``E^r(e_j) = E^l(e_j) = d^{-2}`` (c2)."""
    rep = Report("Markov conditions")
    d = lattice.d
    bad = 0
    for j in range(lattice.j_max):
        for i in range(j + 1):
            if lattice.dim(i, j) != lattice.dim(i + 1, j + 1):
                bad += 1
    rep.add("(c1) dim A_{i,j} = dim A_{i+1,j+1}", float(bad), 0.5)
    worst = 0.0
    for j in range(1, lattice.j_max):
        e = lattice.e(j, j + 1)
        worst = max(worst, (right_expectation(e) - identity(j, d) * d**-2).norm())
        for k in range(j + 1, lattice.j_max + 1):
            ek = embed_right(e, k - j - 1)
            el = vertical_expectation(lattice, j - 1, k, ek)
            worst = max(worst, (el - identity(k, d) * d**-2).norm())
    rep.add("(c2) E^r(e_j) = E^l(e_j) = d^-2", worst, tol)
    return rep


def check_jones_implementation(lattice: LambdaLattice, tol: float = 1e-9) -> Report:
    """(b3) ``e_j x e_j = E^r(x) e_j`` and (b4) ``e_i x e_i = E^l(x) e_i``."""
    rep = Report("Jones projections implement expectations")
    w3 = w4 = 0.0
    for j in range(1, lattice.j_max):
        for i in range(j):
            e = lattice.e(j, j + 1)
            for x in lattice.cell(i, j).basis:
                xx = embed_right(x, 1)
                w3 = max(w3, (e * xx * e - embed_right(right_expectation(x), 2) * e).norm())
    for j in range(2, lattice.j_max + 1):
        for i in range(1, j):
            e = lattice.e(i, j)
            for x in lattice.cell(i, j).basis:
                w4 = max(w4, (e * x * e - vertical_expectation(lattice, i, j, x) * e).norm())
    rep.add("(b3) e_j x e_j = E^r(x) e_j", w3, tol)
    rep.add("(b4) e_i x e_i = E^l(x) e_i", w4, tol)
    return rep


def check_pull_down(lattice: LambdaLattice, tol: float = 1e-9) -> Report:
    """(c1)' horizontal and (c2)' vertical pull-down identities."""
    rep = Report("pull-down")
    d = lattice.d
    worst_h = 0.0
    for j in range(lattice.j_max):
        for i in range(j + 1):
            if j < 1:
                continue
            e = lattice.e(j, j + 1)
            for x in lattice.cell(i, j + 1).basis:
                y = right_expectation(x * e) * d**2
                worst_h = max(worst_h, (embed_right(y, 1) * e - x * e).norm())
    worst_v = 0.0
    for j in range(2, lattice.j_max + 1):
        for i in range(1, j):
            e = lattice.e(i, j)
            for x in lattice.cell(i - 1, j).basis:
                y = vertical_expectation(lattice, i - 1, j, x * e) * d**2
                worst_v = max(worst_v, (y * e - x * e).norm())
    rep.add("(c1)' d^2 E^r(x e_j) e_j = x e_j", worst_h, tol)
    rep.add("(c2)' d^2 E^l(x e_i) e_i = x e_i", worst_v, tol)
    return rep


def check_shift_properties(lattice: LambdaLattice, tol: float = 1e-9, seed: int = 0, samples: int = 3) -> Report:
    """Properties (1)-(7) of the 2-shift map plus agreement with ``shift_insert``."""
    rep = Report("2-shift map")
    rng = np.random.default_rng(seed)
    d = lattice.d
    jm = lattice.j_max
    dev = {k: 0.0 for k in ("range", "unital", "mult", "star", "inj", "par_r", "par_l",
                            "restrict_j", "restrict_i", "shift", "trace", "gens", "insert", "power")}

    def rand(i: int, j: int) -> TLElement:
        basis = lattice.cell(i, j).basis
        c = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        return _combine(basis, c)

    for j in range(0, jm - 1):
        for i in range(0, j + 1):
            target = lattice.cell(i + 2, j + 2).basis
            one = identity(j, d)
            dev["unital"] = max(dev["unital"], (shift_map(lattice, i, j, one) - identity(j + 2, d)).norm())
            images = [shift_map(lattice, i, j, b) for b in lattice.cell(i, j).basis]
            mat = _coeff_matrix(images)
            rank = np.linalg.matrix_rank(mat, tol=1e-8)
            dev["inj"] = max(dev["inj"], float(rank != len(images)))
            for _ in range(samples):
                x, y = rand(i, j), rand(i, j)
                sx, sy = shift_map(lattice, i, j, x), shift_map(lattice, i, j, y)
                dev["range"] = max(dev["range"], projection_residual(sx, target))
                dev["mult"] = max(dev["mult"], (shift_map(lattice, i, j, x * y) - sx * sy).norm())
                dev["star"] = max(dev["star"], (shift_map(lattice, i, j, involution(x)) - involution(sx)).norm())
                dev["insert"] = max(dev["insert"], (sx - shift_insert(x, 2)).norm())
                dev["trace"] = max(dev["trace"], abs(markov_trace(sx) - markov_trace(x)))
                if j >= 1 and i <= j - 1:
                    lhs = shift_map(lattice, i, j - 1, right_expectation(x))
                    rhs = right_expectation(sx)
                    dev["par_r"] = max(dev["par_r"], (lhs - rhs).norm())
                if i < j:
                    lhs = shift_map(lattice, i + 1, j, vertical_expectation(lattice, i, j, x))
                    rhs = vertical_expectation(lattice, i + 2, j + 2, sx)
                    dev["par_l"] = max(dev["par_l"], (lhs - rhs).norm())
                if j + 3 <= jm:
                    big = shift_map(lattice, i, j + 1, embed_right(x, 1))
                    dev["restrict_j"] = max(dev["restrict_j"], (big - embed_right(sx, 1)).norm())
                if i >= 1:
                    dev["restrict_i"] = max(dev["restrict_i"], (shift_map(lattice, i - 1, j, x) - sx).norm())
                ejj = partial_projection(i, j - i, 1, d, n=j + 2)
                xx = embed_right(x, 2)
                dev["shift"] = max(dev["shift"], (ejj * xx - sx * ejj).norm())
                if j + 4 <= jm:
                    twice = shift_power(lattice, i, j, x, 2)
                    dev["power"] = max(dev["power"], (twice - shift_insert(x, 4)).norm())
            for k in range(i + 1, j):
                sk = shift_map(lattice, i, j, lattice.e(k, j))
                dev["gens"] = max(dev["gens"], (sk - lattice.e(k + 2, j + 2)).norm())
    names = {
        "range": "(1) S(x) in A_{i+2,j+2}",
        "unital": "(2) S(1) = 1",
        "mult": "(2) S(xy) = S(x)S(y)",
        "star": "(2) S(x*) = S(x)*",
        "inj": "(2) S injective",
        "par_r": "(3) S o E^r = E^r o S",
        "par_l": "(3) S o E^l = E^l o S",
        "restrict_j": "(4) S_{i,j+1} = S_{i,j} on A_{i,j}",
        "restrict_i": "(4) S_{i-1,j} = S_{i,j} on A_{i,j}",
        "shift": "(5) e^i_{j-i,1} x = S(x) e^i_{j-i,1}",
        "trace": "(6) tr o S = tr",
        "gens": "(7) S(e_k) = e_{k+2}",
        "insert": "S(x) = two strands prepended",
        "power": "S^(2) = S o S",
    }
    for key, label in names.items():
        rep.add(label, dev[key], tol)
    return rep


def check_commutant_reconstruction(lattice: LambdaLattice, tol: float = 1e-9) -> Report:
    rebuilt = reconstruct_by_commutants(lattice)
    worst = 0.0
    for (i, j), basis in rebuilt.items():
        worst = max(worst, subspace_distance(basis, lattice.cell(i, j).basis))
    rep = Report("relative commutant reconstruction")
    rep.add("A_{i,j} = A_{i-1,j} cap {e_{i-1}}'", worst, tol)
    return rep


def verify_lattice(lattice: LambdaLattice, tol: float = 1e-9, seed: int = 0) -> Report:
    rep = Report(f"TLJ lambda-lattice d={lattice.d} j_max={lattice.j_max}")
    cs = Report("commuting squares")
    for j in range(lattice.j_max):
        for i in range(j + 1):
            cs.extend(check_commuting_square(lattice, i, j, tol), prefix=f"({i},{j}) ")
    rep.add("commuting squares", cs.max_deviation, tol)
    rep.extend(check_markov_conditions(lattice, min(tol, 1e-10)))
    rep.extend(check_jones_implementation(lattice, tol))
    rep.extend(check_pull_down(lattice, tol))
    rep.extend(check_standardness(lattice, tol))
    rep.extend(check_shift_properties(lattice, tol, seed))
    rep.extend(check_commutant_reconstruction(lattice, tol))
    return rep
