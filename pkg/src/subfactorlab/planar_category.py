"""The planar tensor category of the TLJ lambda-lattice as triple morphisms.

A morphism ``[m,s] -> [n,s]`` is a triple ``(x; [m,s], [n,s])`` whose
endomorphism part ``x`` is a Temperley-Lieb element on ``(m+n)/2`` strands.
The rectangular diagram and the square one share the counterclockwise
boundary numbering (bottom left to right, then top right to left), so ``x``
is literally the bent diagram.  For shading ``-`` the lattice representative
lives in ``A_{1,.}``, i.e. it carries one extra straight strand on the left.

Composition and ``x (x) 1`` are computed from the lattice data: multi-step
conditional expectations, the partial Jones projections ``e^n_{j,i}`` and the
2-shift.  The scalars are fixed so that the result agrees with gluing the
diagrams (loop value ``d``); :func:`glue_compose` and :func:`juxtapose` are
independent reference implementations of that gluing, used as oracles.
Pivotal traces are normalised by ``d^{-n}`` so that both equal the Markov trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .markov_tower import MarkovTower, TowerError, tl_representation
from .report import Report
from .tl_diagram import (
    TLElement,
    TLError,
    _basis_index,
    _basis_partners,
    catalan,
    embed_right,
    identity,
    markov_trace,
    partial_projection,
    right_expectation,
    shift_insert,
    strip_left,
)

PLUS = "+"
MINUS = "-"


class CompositionError(ValueError):
    """Labels do not compose (target of ``f`` differs from source of ``g``)."""


class ShadingError(ValueError):
    """Shadings of the factors are incompatible."""


@dataclass(frozen=True)
class ObjectLabel:
    n: int
    sign: str = PLUS

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("object size must be nonnegative")
        if self.sign not in (PLUS, MINUS):
            raise ValueError(f"sign must be '+' or '-', got {self.sign!r}")

    @property
    def right_sign(self) -> str:
        """Shading on the right of the object."""
        return self.sign if self.n % 2 == 0 else _flip(self.sign)

    @property
    def dual(self) -> "ObjectLabel":
        return ObjectLabel(self.n, self.right_sign)

    def __str__(self) -> str:
        return f"[{self.n},{self.sign}]"


def _flip(s: str) -> str:
    return MINUS if s == PLUS else PLUS


def _off(s: str) -> int:
    return 0 if s == PLUS else 1


class _Zero:
    """Absorbing marker for the zero object and zero morphisms."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "ZERO"

    def __bool__(self) -> bool:
        return False


ZERO = _Zero()


@dataclass
class TripleMorphism:
    endo: TLElement
    source: ObjectLabel
    target: ObjectLabel

    def __post_init__(self) -> None:
        if self.source.sign != self.target.sign:
            raise ShadingError(f"source {self.source} and target {self.target} have different shading")
        if (self.target.n - self.source.n) % 2:
            raise ShadingError(f"source {self.source} and target {self.target} differ by an odd count")
        k = (self.source.n + self.target.n) // 2
        if self.endo.n != k:
            raise TLError(f"endomorphism part must have {k} strands, got {self.endo.n}")

    @property
    def d(self) -> float:
        return self.endo.d

    @property
    def sign(self) -> str:
        return self.source.sign

    @property
    def dagger(self) -> "TripleMorphism":
        return TripleMorphism(self.endo.adjoint, self.target, self.source)

    def lattice_rep(self) -> TLElement:
        """Representative in ``A_{0,.}`` (shading ``+``) or ``A_{1,.}`` (shading ``-``)."""
        return shift_insert(self.endo, _off(self.sign))

    def __repr__(self) -> str:
        return f"TripleMorphism({self.source} -> {self.target}, {self.endo.n} strands)"


def _from_lattice(x: TLElement, source: ObjectLabel, target: ObjectLabel) -> TripleMorphism:
    y = strip_left(x, _off(source.sign))
    return TripleMorphism(TLElement(y.n, y.d, y.coeffs), source, target)


def identity_morphism(obj: ObjectLabel, d: float) -> TripleMorphism:
    return TripleMorphism(identity(obj.n, d), obj, obj)


def random_morphism(source: ObjectLabel, target: ObjectLabel, d: float, rng: np.random.Generator) -> TripleMorphism:
    k = (source.n + target.n) // 2
    c = rng.normal(size=catalan(k)) + 1j * rng.normal(size=catalan(k))
    return TripleMorphism(TLElement(k, d, c), source, target)


def distance(a, b) -> float:
    if a is ZERO or b is ZERO:
        return 0.0 if a is b else float("inf")
    if a.source != b.source or a.target != b.target:
        return float("inf")
    return float(np.max(np.abs(a.endo.coeffs - b.endo.coeffs), initial=0.0))


# ------------------------------------------------------------------ composition


def _lift(x: TLElement, n: int) -> TLElement:
    return embed_right(x, n - x.n)


@lru_cache(maxsize=4096)
def _pp(base: int, j: int, i: int, d: float, n: int, parity: int) -> TLElement:
    return partial_projection(base, j, i, d, n=n, parity=parity)


def _compose_c1(y: TLElement, x: TLElement, n: int, i: int, j: int) -> TLElement:
    """``[n] -> [n+2i] -> [n+2i+2j]``: ``d^{2i} E^{r,i}(y x e^n_{j,i})``."""
    big = n + 2 * i + j
    e = _pp(n, j, i, x.d, big, x.parity)
    return right_expectation(_lift(y, big) * _lift(x, big) * e, i) * x.d ** (2 * i)


def _compose_c2(y: TLElement, x: TLElement, n: int, i: int, j: int) -> TLElement:
    """``[n] -> [n+2i+2j] -> [n+2i]``: ``d^{2i+j} E^{r,i+j}(y x e^{n,*}_{j,i})``."""
    big = n + 2 * i + j
    e = _pp(n, j, i, x.d, big, x.parity).adjoint
    return right_expectation(_lift(y, big) * _lift(x, big) * e, i + j) * x.d ** (2 * i + j)


def _compose_c3(y: TLElement, x: TLElement, n: int, i: int, j: int) -> TLElement:
    """``[n+2i] -> [n] -> [n+2i+2j]``: ``d^i y e^{n,*}_{j,i} x``."""
    big = n + 2 * i + j
    e = _pp(n, j, i, x.d, big, x.parity).adjoint
    return _lift(y, big) * e * _lift(x, big) * x.d**i


def compose(g, f):
    """``g o f`` by case analysis on source, middle and target sizes."""
    if g is ZERO or f is ZERO:
        return ZERO
    if f.target != g.source:
        raise CompositionError(f"cannot compose: target {f.target} of f differs from source {g.source} of g")
    a, b, c = f.source.n, f.target.n, g.target.n
    off = _off(f.sign)
    x, y = f.lattice_rep(), g.lattice_rep()
    if a <= b <= c:
        out = _compose_c1(y, x, a + off, (b - a) // 2, (c - b) // 2)
    elif a <= c <= b:
        out = _compose_c2(y, x, a + off, (c - a) // 2, (b - c) // 2)
    elif b <= a <= c:
        out = _compose_c3(y, x, b + off, (a - b) // 2, (c - a) // 2)
    else:
        return compose(f.dagger, g.dagger).dagger
    return _from_lattice(out, f.source, g.target)


# ------------------------------------------------------------------ tensor products


def tensor_id_right(f, obj: ObjectLabel, strict: bool = False):
    """``f (x) 1_obj`` via ``x e^m_{j-i,i}`` (``i <= j``) or ``x e^{m,*}_{i-j,j}`` (``i > j``)."""
    if f is ZERO:
        return ZERO
    if f.source.right_sign != obj.sign:
        if strict:
            raise ShadingError(f"{f.source} is shaded {f.source.right_sign} on the right but {obj} is shaded {obj.sign} on the left")
        return ZERO
    if f.target.n < f.source.n:
        return tensor_id_right(f.dagger, obj).dagger
    m, i, j = f.source.n, (f.target.n - f.source.n) // 2, obj.n
    off = _off(f.sign)
    x = f.lattice_rep()
    big = m + off + i + j
    if i <= j:
        e = _pp(m + off, j - i, i, x.d, big, x.parity)
    else:
        e = _pp(m + off, i - j, j, x.d, big, x.parity).adjoint
    out = _lift(x, big) * e * x.d ** min(i, j)
    return _from_lattice(out, ObjectLabel(m + j, f.sign), ObjectLabel(m + 2 * i + j, f.sign))


def tensor_id_left(obj: ObjectLabel, f, strict: bool = False):
    """``1_obj (x) f`` via the 2-shift of the lattice representative."""
    if f is ZERO:
        return ZERO
    if obj.right_sign != f.sign:
        if strict:
            raise ShadingError(f"{obj} is shaded {obj.right_sign} on the right but f is shaded {f.sign} on the left")
        return ZERO
    steps = obj.n + _off(obj.sign) - _off(f.sign)
    out = shift_insert(f.lattice_rep(), steps)
    return _from_lattice(out, ObjectLabel(obj.n + f.source.n, obj.sign), ObjectLabel(obj.n + f.target.n, obj.sign))


def tensor(x, y, strict: bool = False):
    """``x (x) y := (x (x) 1) o (1 (x) y)``; incompatible shadings give ``ZERO``."""
    if x is ZERO or y is ZERO:
        return ZERO
    if x.source.right_sign != y.sign:
        if strict:
            raise ShadingError(f"cannot tensor: {x.source} is shaded {x.source.right_sign} on the right, y is shaded {y.sign}")
        return ZERO
    return compose(tensor_id_right(x, y.target), tensor_id_left(x.source, y))


def tensor_objects(a: ObjectLabel, b: ObjectLabel):
    if a.right_sign != b.sign:
        return ZERO
    return ObjectLabel(a.n + b.n, a.sign)


# ------------------------------------------------------------------ rigidity and traces


def coev(obj: ObjectLabel, d: float) -> TripleMorphism:
    """``1 -> X (x) Xbar``: nested cups."""
    return TripleMorphism(identity(obj.n, d), ObjectLabel(0, obj.sign), ObjectLabel(2 * obj.n, obj.sign))


def ev(obj: ObjectLabel, d: float) -> TripleMorphism:
    """``Xbar (x) X -> 1``: nested caps."""
    s = obj.right_sign
    return TripleMorphism(identity(obj.n, d), ObjectLabel(2 * obj.n, s), ObjectLabel(0, s))


def zigzag_defects(obj: ObjectLabel, d: float) -> tuple[float, float]:
    """Distances of both snake composites from the identities of ``X`` and ``Xbar``."""
    bar = obj.dual
    left = compose(tensor(identity_morphism(obj, d), ev(obj, d)), tensor(coev(obj, d), identity_morphism(obj, d)))
    right = compose(tensor(ev(obj, d), identity_morphism(bar, d)), tensor(identity_morphism(bar, d), coev(obj, d)))
    return distance(left, identity_morphism(obj, d)), distance(right, identity_morphism(bar, d))


def _scalar(f: TripleMorphism) -> complex:
    if f.source.n or f.target.n:
        raise CompositionError("not an endomorphism of a unit object")
    return complex(f.endo.coeffs[0])


def pivotal_traces(f: TripleMorphism) -> tuple[complex, complex]:
    """``(Tr_L(f), Tr_R(f)) / d^n``; both equal the Markov trace."""
    if f.source != f.target:
        raise CompositionError(f"trace needs an endomorphism, got {f.source} -> {f.target}")
    x, d, n = f.source, f.d, f.source.n
    bar = x.dual
    tr_r = compose(coev(x, d).dagger, compose(tensor(f, identity_morphism(bar, d)), coev(x, d)))
    tr_l = compose(ev(x, d), compose(tensor(identity_morphism(bar, d), f), ev(x, d).dagger))
    return _scalar(tr_l) / d**n, _scalar(tr_r) / d**n


# ------------------------------------------------------------------ diagram oracles


def _glue(lower: tuple[int, ...], a: int, b: int, upper: tuple[int, ...], c: int) -> tuple[tuple[int, ...], int]:
    """Stack a diagram ``b <- a`` under ``c <- b``; return the partner tuple and loop count."""
    adj: dict[tuple[str, int], list[tuple[str, int]]] = {}

    def link(u, v):
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)

    for p, q in enumerate(lower):
        if p < q:
            link(("L", p), ("L", q))
    for p, q in enumerate(upper):
        if p < q:
            link(("U", p), ("U", q))
    for pos in range(b):
        link(("L", a + b - 1 - pos), ("U", pos))
    outer = {("L", p): p for p in range(a)}
    outer.update({("U", b + p): a + p for p in range(c)})
    res = [0] * (a + c)
    seen = set()
    for start, idx in outer.items():
        if start in seen:
            continue
        prev, cur = None, start
        seen.add(cur)
        while True:
            nxt = adj[cur][0] if prev is None else next(v for v in adj[cur] if v != prev)
            prev, cur = cur, nxt
            seen.add(cur)
            if cur in outer:
                break
        res[idx], res[outer[cur]] = outer[cur], idx
    rest = set(adj) - seen
    loops = 0
    while rest:
        stack = [rest.pop()]
        while stack:
            for v in adj[stack.pop()]:
                if v in rest:
                    rest.remove(v)
                    stack.append(v)
        loops += 1
    return tuple(res), loops


def glue_compose(g: TripleMorphism, f: TripleMorphism) -> TripleMorphism:
    """Reference ``g o f`` by stacking rectangular diagrams directly."""
    if f.target != g.source:
        raise CompositionError(f"cannot compose: target {f.target} of f differs from source {g.source} of g")
    a, b, c = f.source.n, f.target.n, g.target.n
    k = (a + c) // 2
    idx = _basis_index(k)
    out = np.zeros(catalan(k), dtype=complex)
    pf, pg = _basis_partners(f.endo.n), _basis_partners(g.endo.n)
    for s in np.flatnonzero(f.endo.coeffs):
        for t in np.flatnonzero(g.endo.coeffs):
            part, loops = _glue(pf[s], a, b, pg[t], c)
            out[idx[part]] += f.endo.coeffs[s] * g.endo.coeffs[t] * f.d**loops
    return TripleMorphism(TLElement(k, f.d, out), f.source, g.target)


def juxtapose(x: TripleMorphism, y: TripleMorphism):
    """Reference ``x (x) y`` by placing diagrams side by side."""
    if x.source.right_sign != y.sign:
        return ZERO
    a, a2, b, b2 = x.source.n, x.target.n, y.source.n, y.target.n
    k = (a + a2 + b + b2) // 2
    idx = _basis_index(k)
    out = np.zeros(catalan(k), dtype=complex)

    def mx(p: int) -> int:
        return p if p < a else a + b + b2 + (p - a)

    def my(p: int) -> int:
        return a + p if p < b else a + b + (p - b)

    px, py = _basis_partners(x.endo.n), _basis_partners(y.endo.n)
    for s in np.flatnonzero(x.endo.coeffs):
        for t in np.flatnonzero(y.endo.coeffs):
            res = [0] * (2 * k)
            for p, q in enumerate(px[s]):
                res[mx(p)] = mx(q)
            for p, q in enumerate(py[t]):
                res[my(p)] = my(q)
            out[idx[tuple(res)]] += x.endo.coeffs[s] * y.endo.coeffs[t]
    return TripleMorphism(TLElement(k, x.d, out), ObjectLabel(a + b, x.sign), ObjectLabel(a2 + b2, x.sign))


# ------------------------------------------------------------------ module category over a Markov tower


@dataclass
class ModuleMorphism:
    """``(f; [m], [n])`` with ``f`` in ``M_{(m+n)/2}`` of a Markov tower."""

    mat: np.ndarray
    source: int
    target: int
    tower: MarkovTower

    def __post_init__(self) -> None:
        if (self.target - self.source) % 2:
            raise ShadingError(f"module labels [{self.source}] and [{self.target}] differ by an odd count")
        k = (self.source + self.target) // 2
        if k > self.tower.n_max:
            raise TowerError(f"tower has no level {k}")
        if self.mat.shape != (self.tower.algebras[k].dim,) * 2:
            raise TowerError(f"matrix shape {self.mat.shape} does not match level {k}")

    @property
    def level(self) -> int:
        return (self.source + self.target) // 2

    @property
    def dagger(self) -> "ModuleMorphism":
        return ModuleMorphism(self.mat.conj().T, self.target, self.source, self.tower)


def _tower_expect(t: MarkovTower, x: np.ndarray, level: int, steps: int) -> np.ndarray:
    for k in range(steps):
        x = t.expect(level - k, x)
    return x


def _tower_pp(t: MarkovTower, base: int, j: int, i: int, level: int) -> np.ndarray:
    return tl_representation(t, partial_projection(base, j, i, t.d, n=level))


def module_compose(g: ModuleMorphism, f: ModuleMorphism) -> ModuleMorphism:
    """``g o f`` with the tower's expectations and Jones projections in place of the lattice ones."""
    if f.target != g.source:
        raise CompositionError(f"cannot compose: target [{f.target}] of f differs from source [{g.source}] of g")
    t = f.tower
    a, b, c = f.source, f.target, g.target
    d = t.d

    def lift(m: ModuleMorphism, level: int) -> np.ndarray:
        return t.include_to(m.mat, m.level, level)

    if a <= b <= c:
        n, i, j = a, (b - a) // 2, (c - b) // 2
        big = n + 2 * i + j
        prod = lift(g, big) @ lift(f, big) @ _tower_pp(t, n, j, i, big)
        out = _tower_expect(t, prod, big, i) * d ** (2 * i)
    elif a <= c <= b:
        n, i, j = a, (c - a) // 2, (b - c) // 2
        big = n + 2 * i + j
        prod = lift(g, big) @ lift(f, big) @ _tower_pp(t, n, j, i, big).conj().T
        out = _tower_expect(t, prod, big, i + j) * d ** (2 * i + j)
    elif b <= a <= c:
        n, i, j = b, (a - b) // 2, (c - a) // 2
        big = n + 2 * i + j
        out = lift(g, big) @ _tower_pp(t, n, j, i, big).conj().T @ lift(f, big) * d**i
    else:
        return module_compose(f.dagger, g.dagger).dagger
    return ModuleMorphism(out, a, c, t)


def module_act_right(f: ModuleMorphism, obj: ObjectLabel) -> ModuleMorphism:
    """``f |> 1_obj``; the tower plays the role of the ``+`` lattice row."""
    if obj.sign != (PLUS if f.source % 2 == 0 else MINUS):
        raise ShadingError(f"[{f.source}] is followed by shading {'+' if f.source % 2 == 0 else '-'}, not {obj.sign}")
    if f.target < f.source:
        return module_act_right(f.dagger, obj).dagger
    t = f.tower
    m, i, j = f.source, (f.target - f.source) // 2, obj.n
    big = m + i + j
    if i <= j:
        e = _tower_pp(t, m, j - i, i, big)
    else:
        e = _tower_pp(t, m, i - j, j, big).conj().T
    out = t.include_to(f.mat, f.level, big) @ e * t.d ** min(i, j)
    return ModuleMorphism(out, m + j, m + 2 * i + j, t)


def module_act_left(m: int, x: TripleMorphism, tower: MarkovTower) -> ModuleMorphism:
    """``1_[m] <| x``: the TL element behind ``m`` straight strands, represented in the tower."""
    if x.sign != (PLUS if m % 2 == 0 else MINUS):
        raise ShadingError(f"[{m}] is followed by shading {'+' if m % 2 == 0 else '-'}, not {x.sign}")
    return ModuleMorphism(tl_representation(tower, shift_insert(x.endo, m)), m + x.source.n, m + x.target.n, tower)


def module_identity(n: int, tower: MarkovTower) -> ModuleMorphism:
    return ModuleMorphism(tower.one(n), n, n, tower)


def random_module_morphism(source: int, target: int, tower: MarkovTower, rng: np.random.Generator) -> ModuleMorphism:
    return ModuleMorphism(tower.random((source + target) // 2, rng), source, target, tower)


def module_distance(a: ModuleMorphism, b: ModuleMorphism) -> float:
    if (a.source, a.target) != (b.source, b.target):
        return float("inf")
    return float(np.max(np.abs(a.mat - b.mat), initial=0.0))


# ------------------------------------------------------------------ law verification


def _random_label(rng: np.random.Generator, top: int, parity: int | None = None) -> int:
    vals = [v for v in range(top + 1) if parity is None or v % 2 == parity]
    return int(rng.choice(vals))


def _random_sign(rng: np.random.Generator) -> str:
    return PLUS if rng.random() < 0.5 else MINUS


def _max_over(count: int, fn: Callable[[], float]) -> float:
    return max((fn() for _ in range(count)), default=0.0)


def verify_category_laws(d: float, instances: int = 200, seed: int = 0, tol: float = 1e-9, size: int = 3, budget: int = 6) -> Report:
    """Randomised checks of the category laws.

    Factors have size at most ``size``; tensor products of several factors are
    kept at total size ``budget`` so that diagram tables stay small.
    """
    rng = np.random.default_rng(seed)
    rep = Report(f"planar category laws at d={d:.6g}")

    def obj(parity=None, sign=None):
        return ObjectLabel(_random_label(rng, size, parity), sign or _random_sign(rng))

    def rand(src, tgt):
        return random_morphism(src, tgt, d, rng)

    def pair_after(src):
        return ObjectLabel(_random_label(rng, size, src.n % 2), src.sign)

    def assoc():
        a = obj()
        b, c, e = pair_after(a), pair_after(a), pair_after(a)
        f, g, h = rand(a, b), rand(b, c), rand(c, e)
        return distance(compose(h, compose(g, f)), compose(compose(h, g), f))

    def unit():
        a = obj()
        b = pair_after(a)
        f = rand(a, b)
        return max(distance(compose(identity_morphism(b, d), f), f), distance(compose(f, identity_morphism(a, d)), f))

    def oracle():
        a = obj()
        b, c = pair_after(a), pair_after(a)
        f, g = rand(a, b), rand(b, c)
        return distance(compose(g, f), glue_compose(g, f))

    def dagger():
        a = obj()
        b, c = pair_after(a), pair_after(a)
        f, g = rand(a, b), rand(b, c)
        return distance(compose(g, f).dagger, compose(f.dagger, g.dagger))

    def second(first: ObjectLabel) -> ObjectLabel:
        return ObjectLabel(_random_label(rng, size), first.right_sign)

    def interchange():
        a = obj()
        a2 = pair_after(a)
        b = second(a)
        b2 = pair_after(b)
        x, y = rand(a, a2), rand(b, b2)
        lhs = compose(tensor_id_right(x, b2), tensor_id_left(a, y))
        rhs = compose(tensor_id_left(a2, y), tensor_id_right(x, b))
        return max(distance(lhs, rhs), distance(lhs, juxtapose(x, y)))

    def tensor_assoc():
        while True:
            a = obj()
            b = second(a)
            c = second(b)
            a2, b2, c2 = pair_after(a), pair_after(b), pair_after(c)
            if max(a.n, a2.n) + max(b.n, b2.n) + max(c.n, c2.n) <= budget:
                break
        x, y, z = rand(a, a2), rand(b, b2), rand(c, c2)
        return distance(tensor(tensor(x, y), z), tensor(x, tensor(y, z)))

    def functorial():
        a = obj()
        b, c = pair_after(a), pair_after(a)
        p = second(a)
        q, r = pair_after(p), pair_after(p)
        y, x = rand(a, b), rand(b, c)
        w, z = rand(p, q), rand(q, r)
        return distance(tensor(compose(x, y), compose(z, w)), compose(tensor(x, z), tensor(y, w)))

    def dagger_tensor():
        a = obj()
        b = second(a)
        x, y = rand(a, pair_after(a)), rand(b, pair_after(b))
        return distance(tensor(x, y).dagger, tensor(x.dagger, y.dagger))

    def zig():
        return max(zigzag_defects(ObjectLabel(_random_label(rng, budget // 3), _random_sign(rng)), d))

    def traces():
        a = obj()
        f = rand(a, a)
        tl, tr = pivotal_traces(f)
        m = markov_trace(f.endo)
        return max(abs(tl - m), abs(tr - m))

    laws = [
        ("composition is associative", assoc),
        ("identities are units", unit),
        ("composition agrees with diagram gluing", oracle),
        ("(g o f)^dagger = f^dagger o g^dagger", dagger),
        ("interchange: (x(x)1)(1(x)y) = (1(x)y)(x(x)1)", interchange),
        ("tensor product is strictly associative", tensor_assoc),
        ("tensor product is functorial", functorial),
        ("(x (x) y)^dagger = x^dagger (x) y^dagger", dagger_tensor),
        ("zigzag identities", zig),
        ("Tr_L = Tr_R = Markov trace", traces),
    ]
    for name, fn in laws:
        rep.add(name, _max_over(instances, fn), tol, f"{instances} random instances, seed {seed}")
    return rep


def verify_module_laws(tower: MarkovTower, instances: int = 50, seed: int = 0, tol: float = 1e-9, size: int = 3) -> Report:
    """Associativity, units and the action interchange for :func:`module_compose`."""
    rng = np.random.default_rng(seed)
    d = tower.d
    rep = Report(f"module category over {tower.name}")
    cap = tower.n_max

    size = min(size, cap)

    def label(parity=None, top=None):
        return _random_label(rng, size if top is None else top, parity)

    def assoc():
        a = label()
        b, c, e = (label(a % 2) for _ in range(3))
        f, g, h = (random_module_morphism(s, t, tower, rng) for s, t in ((a, b), (b, c), (c, e)))
        return module_distance(module_compose(h, module_compose(g, f)), module_compose(module_compose(h, g), f))

    def unit():
        a = label()
        b = label(a % 2)
        f = random_module_morphism(a, b, tower, rng)
        return max(
            module_distance(module_compose(module_identity(b, tower), f), f),
            module_distance(module_compose(f, module_identity(a, tower)), f),
        )

    def interchange():
        m = label()
        m2 = label(m % 2)
        sign = PLUS if m % 2 == 0 else MINUS
        k = label(top=cap - max(m, m2))
        k2 = label(k % 2, top=cap - max(m, m2))
        f = random_module_morphism(m, m2, tower, rng)
        x = random_morphism(ObjectLabel(k, sign), ObjectLabel(k2, sign), d, rng)
        lhs = module_compose(module_act_right(f, ObjectLabel(k2, sign)), module_act_left(m, x, tower))
        rhs = module_compose(module_act_left(m2, x, tower), module_act_right(f, ObjectLabel(k, sign)))
        return module_distance(lhs, rhs)

    def tl_action():
        a = label()
        b, c = label(a % 2), label(a % 2)
        f = random_morphism(ObjectLabel(a), ObjectLabel(b), d, rng)
        g = random_morphism(ObjectLabel(b), ObjectLabel(c), d, rng)
        rf = ModuleMorphism(tl_representation(tower, f.endo), a, b, tower)
        rg = ModuleMorphism(tl_representation(tower, g.endo), b, c, tower)
        image = ModuleMorphism(tl_representation(tower, compose(g, f).endo), a, c, tower)
        return module_distance(module_compose(rg, rf), image)

    for name, fn in [
        ("module composition restricts to TL composition", tl_action),
        ("module composition is associative", assoc),
        ("module identities are units", unit),
        ("(f |> 1) o (1 <| x) = (1 <| x) o (f |> 1)", interchange),
    ]:
        rep.add(name, _max_over(instances, fn), tol, f"{instances} random instances, seed {seed}")
    return rep
