"""Acceptance criteria 1-9.

Each test prints one ``criterion k: PASS/FAIL`` line.  Expected values come
from independent oracles: closed-form Catalan numbers, path counts, sine
weights and the block sizes of the single-graph path towers.  Also runnable
as ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from subfactorlab.biunitary import (
    build_markov_lattice,
    check_biunitary,
    check_rotations,
    compare_invariants,
    connection_from_json,
    connection_from_lattice,
    product_connection,
    square_a3_connection,
    trivial_connection,
    verify_lattice_axioms,
)
from subfactorlab.gpa_embed import box_space, embed_tl, jones_wenzl, kernel_dimension
from subfactorlab.lambda_lattice import build_tlj_lattice, verify_lattice
from subfactorlab.markov_tower import (
    build_path_tower,
    decompose_tower,
    example_traceless_tower,
    e_lambda,
    expectation_lambda,
    path_counts,
    principal_graph,
    recover_edge_weighting,
    traceless_lambda,
    verify_markov_axioms,
    weights_by_depth,
)
from subfactorlab.planar_category import verify_category_laws
from subfactorlab.tl_diagram import verify_tl_algebra
from subfactorlab.weighted_graph import a5_example, dynkin_a

FIXTURES = Path(__file__).parent / "fixtures"


def report_line(k: int, ok: bool, detail: str, capsys=None) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


def sine_weights(k: int) -> dict[tuple[int, int], list[float]]:
    """Edge weights of ``A_k`` by depth from an end vertex: ``sin((b+1) pi/(k+1)) / sin((a+1) pi/(k+1))``."""
    s = [math.sin((j + 1) * math.pi / (k + 1)) for j in range(k)]
    out = {}
    for a in range(k - 1):
        out[(a, a + 1)] = [s[a + 1] / s[a]]
        out[(a + 1, a)] = [s[a] / s[a + 1]]
    return out


def weight_gap(got: dict, want: dict) -> float:
    if set(got) != set(want):
        return float("inf")
    gap = 0.0
    for key in want:
        if len(got[key]) != len(want[key]):
            return float("inf")
        gap = max(gap, max(abs(a - b) for a, b in zip(sorted(got[key]), sorted(want[key]))))
    return gap


# ------------------------------------------------------------------ criteria


def criterion_1() -> tuple[bool, str]:
    t0 = time.perf_counter()
    ok, worst = True, 0.0
    for d in (2.3, math.sqrt(7)):
        for n in range(5):
            rep = verify_tl_algebra(n, d, tol=1e-12)
            ok &= rep.passed
            worst = max(worst, rep.max_deviation)
            ok &= rep.checks[0].passed and math.comb(2 * n, n) // (n + 1) == [1, 1, 2, 5, 14][n]
    dt = time.perf_counter() - t0
    return ok and dt < 5, f"TL_n, n<=4, d in {{2.3, sqrt 7}}: max deviation {worst:.1e}, {dt:.2f} s"


def criterion_2() -> tuple[bool, str]:
    t0 = time.perf_counter()
    lat = build_tlj_lattice(2.3, 5)
    rep = verify_lattice(lat, tol=1e-9, seed=0)
    dims_ok = all(lat.dim(i, j) == (1 if j == i else math.comb(2 * (j - i), j - i) // (j - i + 1)) for i in range(6) for j in range(i, 6))
    dt = time.perf_counter() - t0
    names = [c.name for c in rep.checks]
    # commuting squares, Markov conditions, pull-down, standardness, shift properties (1)-(7), commutants
    groups = ["commuting squares", "(c2) E^r(e_j)", "(b3)", "(c1)'", "(c2)'", "standard condition"]
    groups += [f"({k}) " for k in range(1, 8)] + ["cap {e_{i-1}}'"]
    covered = all(any(g in n for n in names) for g in groups)
    bad = ", ".join(c.name for c in rep.failures())
    return rep.passed and dims_ok and covered and dt < 30, f"{len(rep.checks)} checks, dims {'ok' if dims_ok else 'WRONG'}, max deviation {rep.max_deviation:.1e}, {dt:.2f} s {bad}".rstrip()


def criterion_3() -> tuple[bool, str]:
    t0 = time.perf_counter()
    rep = verify_category_laws(2.3, instances=200, seed=0, tol=1e-9)
    dt = time.perf_counter() - t0
    again = verify_category_laws(2.3, instances=20, seed=0, tol=1e-9)
    first = verify_category_laws(2.3, instances=20, seed=0, tol=1e-9)
    repro = [c.deviation for c in again.checks] == [c.deviation for c in first.checks]
    names = " ".join(c.name for c in rep.checks).lower()
    covered = all(k in names for k in ("interchange", "associativ", "functorial", "zigzag", "tr_l"))
    return rep.passed and repro and covered and dt < 30, f"200 instances per law, max deviation {rep.max_deviation:.1e}, reproducible {repro}, {dt:.2f} s"


def criterion_4() -> tuple[bool, str]:
    d = math.sqrt(5)
    lam = traceless_lambda(d)
    rep = verify_markov_axioms(example_traceless_tower(d, 6), tol=1e-10)
    e11, e22 = np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)
    gap = abs(expectation_lambda(e11, lam)[0, 0] - expectation_lambda(e22, lam)[0, 0])
    nontracial = abs(gap - abs(1 - 2 * lam)) < 1e-12 and gap > 0.4
    ee = float(np.max(np.abs(expectation_lambda(e_lambda(lam), lam) - 0.2 * np.eye(2))))
    ok = rep.passed and nontracial and ee < 1e-12 and abs(lam * (1 - lam) - 0.2) < 1e-14
    return ok, f"axioms n<=6 max deviation {rep.max_deviation:.1e}, |E(e11)-E(e22)| = {gap:.4f}, |E(e_lambda) - 0.2| = {ee:.1e}"


def criterion_5() -> tuple[bool, str]:
    g = a5_example()
    t = build_path_tower(g, "p1", 6)
    dec = decompose_tower(t)
    counts = path_counts(g, "p1", 4)
    by_vertex = (counts["p1"], counts["p2"], counts["p3"])
    blocks = sorted(dec.bratteli.sizes[4])
    dims_ok = by_vertex == (2, 3, 1) and blocks == sorted(by_vertex) and t.dims()[4] == 14
    pg = principal_graph(dec.bratteli)
    und = {frozenset((e.src, e.dst)) for e in pg.edges}
    deg = sorted(sum(v in e for e in und) for v in pg.vertices)
    is_a5 = len(pg.vertices) == 5 and len(und) == 4 and deg == [1, 1, 2, 2, 2]
    rec = recover_edge_weighting(t)
    gap = weight_gap(weights_by_depth(rec.graph, "L0.0"), sine_weights(5))
    ok = dims_ok and is_a5 and rec.report.passed and gap < 1e-8
    return ok, f"blocks at n=4 {by_vertex} total {t.dims()[4]}, principal graph A5 {is_a5}, weight gap {gap:.1e}"


def criterion_6() -> tuple[bool, str]:
    t0 = time.perf_counter()
    out = []
    ok = True
    for k, n, want in ((5, 4, 0), (5, 5, 1), (3, 3, 1)):
        g = dynkin_a(k)
        kd = kernel_dimension(g, None, n)
        ok &= kd == want
        if want:
            box = box_space(g, None, n)
            jw = jones_wenzl(n, box.d)
            norm = float(np.linalg.norm(embed_tl(jw, g, box=box)))
            ok &= norm < 1e-8 and jw.norm() > 0.1
            out.append(f"A{k} n={n}: {kd} (|JW|={norm:.1e})")
        else:
            out.append(f"A{k} n={n}: {kd}")
    dt = time.perf_counter() - t0
    return ok and dt < 20, ", ".join(out) + f", {dt:.2f} s"


def criterion_7() -> tuple[bool, str]:
    t0 = time.perf_counter()
    a = dynkin_a(3)
    m = build_markov_lattice(product_connection(a, a), i_max=4, j_max=4)
    single = decompose_tower(build_path_tower(a, "p1", 4)).bratteli.sizes
    sizes = m.block_sizes()
    blocks_ok = all(sorted(sizes[(i, j)]) == sorted(x * y for x in single[i] for y in single[j]) for i in range(5) for j in range(5))
    phi = connection_from_lattice(m)
    bi, rot = check_biunitary(phi, 1e-9), check_rotations(phi, 1e-9)
    rebuilt = build_markov_lattice(phi, i_max=4, j_max=4)
    ax = verify_lattice_axioms(rebuilt, tol=1e-9, standard=True)
    names = " ".join(c.name for c in ax.checks)
    covered = "[e_i, f_j] = 0" in names and "standard column" in names and "standard row" in names
    dt = time.perf_counter() - t0
    ok = blocks_ok and bi.passed and rot.passed and ax.passed and covered and dt < 60
    return ok, f"blocks match A3 x A3 {blocks_ok}, biunitary {bi.passed}, r^4/r^2 {rot.passed}, 4x4 axioms {ax.passed}, {dt:.2f} s"


def criterion_8() -> tuple[bool, str]:
    gaps = []
    for k in (3, 4, 5):
        rec = recover_edge_weighting(build_path_tower(dynkin_a(k), "p1", k + 1))
        gaps.append(weight_gap(weights_by_depth(rec.graph, "L0.0"), sine_weights(k)) if rec.report.passed else float("inf"))
    a = dynkin_a(3)
    hadamard_gauged = connection_from_json(__import__("json").loads((FIXTURES / "hadamard_gauged.json").read_text()))
    conns = [trivial_connection(0.3), square_a3_connection(), hadamard_gauged, product_connection(a, a)]
    cgaps = []
    for c in conns:
        m = build_markov_lattice(c, i_max=3, j_max=3)
        cgaps.append(compare_invariants(connection_from_lattice(m), c) if verify_lattice_axioms(m).passed else float("inf"))
    ok = max(gaps) < 1e-8 and max(cgaps) < 1e-8
    return ok, f"weights A3/A4/A5 gap {max(gaps):.1e}, connection singular values gap {max(cgaps):.1e}"


NEGATIVE = [
    (["verify-graph", "a3_perturbed.json"], "fair: outgoing weights sum to d"),
    (["build-tower", "a3_perturbed.json"], "balanced: w(e) w(bar e) = 1"),
    (["verify-graph", "a5_bad_nu.json"], "Frobenius-Perron"),
    (["build-tower", "a5_bad_nu.json"], "Frobenius-Perron"),
    (["embed-tl", "a5_bad_nu.json", "--n", "3"], "Frobenius-Perron"),
    (["verify-connection", "bad_connection.json"], "horizontal"),
    (["verify-connection", "hadamard_connection.json", "--compare", "trivial_connection.json"], "gauge invariants"),
    (["build-lattice", "bad_connection.json", "--imax", "2", "--jmax", "2"], "inclusion is a unital *-homomorphism"),
]


def criterion_9() -> tuple[bool, str]:
    ok, bad = True, []
    for argv, axiom in NEGATIVE:
        args = [str(FIXTURES / a) if a.endswith(".json") else a for a in argv]
        res = subprocess.run([sys.executable, "-m", "subfactorlab.cli", *args], capture_output=True, text=True)
        last = res.stdout.rstrip().splitlines()[-1] if res.stdout.strip() else ""
        good = res.returncode == 1 and last.startswith("VERIFICATION FAILED") and axiom in last
        ok &= good
        if not good:
            bad.append(f"{argv[0]} {argv[1]} (exit {res.returncode})")
    return ok, f"{len(NEGATIVE)} perturbation fixtures exit 1 naming the axiom" + (f"; failing: {', '.join(bad)}" if bad else "")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("k", range(1, 10))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k - 1]()
    report_line(k, ok, detail, capsys)
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        report_line(k, ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
