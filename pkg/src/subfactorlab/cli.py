"""Command line front end.

Exit codes: 0 when every check passes, 1 when a verification fails, 2 for
input errors (unreadable or malformed JSON, schema violations, caps).
The default tolerance is 1e-9; ``SUBFACTORLAB_TOL`` overrides it and
``--tol`` overrides both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bighilb import ShapeError
from .biunitary import (
    GRID_CAP,
    build_markov_lattice,
    check_biunitary,
    check_rotations,
    compare_invariants,
    connection_from_json,
    connection_from_lattice,
    connection_to_dot,
    connection_to_json,
    singular_value_invariants,
    verify_lattice_axioms,
)
from .gpa_embed import N_CAP, box_space, embed_tl, jones_wenzl, kernel_dimension, verify_embedding
from .lambda_lattice import RegimeError, build_tlj_lattice, verify_lattice
from .markov_tower import (
    N_MAX_CAP,
    TowerError,
    bratteli_to_dot,
    build_path_tower,
    decompose_tower,
    principal_graph,
    principal_graph_to_dot,
    recover_edge_weighting,
    verify_markov_axioms,
    weights_by_depth,
)
from .report import AxiomViolation, Report
from .tl_diagram import TLError
from .weighted_graph import (
    GraphError,
    check_associative,
    check_fair,
    check_square_fair,
    fp_defect,
    graph_from_json,
    edge_weights_from_vertex_weighting,
    graph_to_dot,
    infer_fp_modulus,
    nu_from_json,
    square_from_json,
    square_to_dot,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DEFAULT_TOL = 1e-9
TOL_ENV = "SUBFACTORLAB_TOL"
SQUARE_KEYS = ("lambda0", "lambda1", "omega0", "omega1")


class InputError(ValueError):
    """Bad command line input; maps to exit code 2."""


INPUT_ERRORS = (InputError, GraphError, ShapeError, TLError, TowerError, RegimeError, AxiomViolation)


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError as exc:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from exc


def _check_tol(tol: float) -> float:
    if not 0 < tol <= 1e-2:
        raise InputError(f"tolerance must lie in (0, 1e-2], got {tol}")
    return tol


def load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _emit(args, rep: Report, data: dict, dot: str | None = None) -> int:
    """Print the text report, write the optional artifacts and return the exit code."""
    out = sys.stdout
    print(rep.title, file=out)
    for c in rep.checks:
        mark = "PASS" if c.passed else "FAIL"
        note = f"  ({c.note})" if c.note else ""
        print(f"  {mark}  {c.name}: deviation {c.deviation:.3e} (tol {c.tol:.1e}){note}", file=out)
    for key, value in data.items():
        if isinstance(value, (int, float, str, list)) and len(str(value)) <= 120:
            print(f"  {key}: {value}", file=out)
    if rep.passed:
        print("OK", file=out)
    else:
        names = "; ".join(c.name + (f" [{c.note}]" if c.note else "") for c in rep.failures())
        print(f"VERIFICATION FAILED: {names}", file=out)
    if args.json:
        payload = {"command": args.command, "passed": rep.passed, "report": rep.to_dict(), "data": _jsonable(data)}
        text = json.dumps(payload, indent=2, sort_keys=True)
        if args.json == "-":
            print(text, file=out)
        else:
            Path(args.json).write_text(text + "\n")
    if args.dot and dot is not None:
        Path(args.dot).write_text(dot)
    return EXIT_OK if rep.passed else EXIT_FAIL


# ------------------------------------------------------------------ subcommands


def cmd_verify_graph(args) -> int:
    data = load_json(args.path)
    tol = args.tol
    if isinstance(data, dict) and all(k in data for k in SQUARE_KEYS):
        sq = square_from_json(data)
        rep = Report(f"square-partite graph {args.path}")
        rep.extend(check_associative(sq))
        rep.extend(check_square_fair(sq, args.d, args.d, tol=tol))
        return _emit(args, rep, {"corners": {k: len(getattr(sq, k)) for k in ("v00", "v10", "v01", "v11")}}, square_to_dot(sq))
    g, nu, fp = _load_weighted(data, args.d, tol)
    rep = Report(f"graph {args.path}")
    info: dict = {"vertices": len(g.vertices), "edges": len(g.edges)}
    if fp is not None:
        rep.extend(fp)
        if not fp.passed:
            return _emit(args, rep, info, graph_to_dot(g))
    rep.extend(check_fair(g, args.d, tol=tol))
    return _emit(args, rep, info, graph_to_dot(g))


def _load_weighted(data, d: float | None, tol: float):
    """Graph, vertex weighting and its Frobenius-Perron report (``None`` without ``nu``).

    A weighting that violates the Frobenius-Perron condition is a verification
    failure, not an input error, so the weights are only applied once it holds.
    """
    g = graph_from_json(data, apply_nu=False)
    nu = nu_from_json(data)
    if nu is None:
        return g, None, None
    missing = [v for v in g.vertices if not nu.get(v, 0) > 0]
    if missing:
        raise GraphError(f"vertex weighting is missing or non-positive at {missing[0]!r}")
    if d is None:
        d = infer_fp_modulus(g, nu)
    defect = fp_defect(g, nu, d)
    worst = max(defect, key=lambda v: abs(defect[v]))
    rep = Report("vertex weighting")
    rep.add("Frobenius-Perron: sum of neighbour weights = d nu(v)", abs(defect[worst]), max(tol, 1e-8) * max(1.0, d), f"worst vertex {worst}")
    if rep.passed:
        g = g.with_weights(edge_weights_from_vertex_weighting(g, nu, d))
    return g, nu, rep


def _fair_or_report(g, d, tol, title) -> Report | None:
    pre = check_fair(g, d, tol=max(tol, 1e-8))
    if pre.passed:
        return None
    rep = Report(title)
    rep.extend(pre, "precondition: ")
    return rep


def cmd_build_tower(args) -> int:
    g, _, fp = _load_weighted(load_json(args.path), args.d, args.tol)
    if fp is not None and not fp.passed:
        return _emit(args, fp, {})
    depth = args.depth if args.depth is not None else 4
    if not 0 <= depth <= N_MAX_CAP:
        raise InputError(f"--depth must lie in [0, {N_MAX_CAP}]")
    base = args.base or g.v0[0]
    bad = _fair_or_report(g, args.d, args.tol, f"tower of {args.path}")
    if bad is not None:
        return _emit(args, bad, {})
    t = build_path_tower(g, base, depth, d=args.d)
    rep = Report(f"path tower of {args.path} at {base}, depth {depth}, d={t.d:.12g}")
    rep.extend(verify_markov_axioms(t, tol=max(args.tol, 1e-10), seed=args.seed))
    info: dict = {"d": t.d, "dims": t.dims()}
    dot = None
    if depth >= 1:
        dec = decompose_tower(t, seed=args.seed)
        bd = dec.bratteli
        info["blocks"] = bd.sizes
        info["bratteli"] = bd.to_dict()
        pg = principal_graph(bd)
        info["principal_graph"] = {"v0": pg.v0, "v1": pg.v1, "edges": [[e.src, e.dst] for e in pg.edges]}
        dot = bratteli_to_dot(bd) + "\n" + principal_graph_to_dot(pg)
    if args.recover_weights:
        if depth < 2:
            raise InputError("--recover-weights needs --depth >= 2")
        rec = recover_edge_weighting(t, seed=args.seed, tol=max(args.tol, 1e-8))
        rep.extend(rec.report, "recovery: ")
        got = weights_by_depth(rec.graph, "L0.0")
        want = weights_by_depth(g, base)
        gap = 0.0
        for key, ws in got.items():
            ref = want.get(key)
            if ref is None or len(ref) != len(ws):
                gap = float("inf")
                break
            gap = max(gap, max(abs(a - b) for a, b in zip(ws, ref)))
        rep.add("round trip: recovered weights match the input weighting", gap, max(args.tol, 1e-8))
        info["recovered_weights"] = {f"{a}-{b}": ws for (a, b), ws in got.items()}
    return _emit(args, rep, info, dot)


def cmd_verify_connection(args) -> int:
    c = connection_from_json(load_json(args.path))
    rep = Report(f"connection {args.path}")
    rep.extend(check_biunitary(c, args.tol))
    rep.extend(check_rotations(c, args.tol))
    info: dict = {"d0": c.d0, "d1": c.d1, "blocks": len(c.phi.blocks)}
    if args.compare:
        other = connection_from_json(load_json(args.compare))
        rep.add("gauge invariants: blockwise singular values agree", compare_invariants(c, other), max(args.tol, 1e-8), args.compare)
        info["invariants"] = singular_value_invariants(c)
    return _emit(args, rep, info, connection_to_dot(c))


def cmd_build_lattice(args) -> int:
    if args.path is None:
        if args.d is None:
            raise InputError("build-lattice needs a connection file or --d for the TLJ lattice")
        j_max = args.jmax if args.jmax is not None else 5
        lat = build_tlj_lattice(args.d, j_max)
        rep = verify_lattice(lat, tol=args.tol, seed=args.seed)
        info = {"d": args.d, "j_max": j_max, "cell_dims": {f"{i},{j}": lat.dim(i, j) for i in range(j_max + 1) for j in range(i, j_max + 1)}}
        return _emit(args, rep, info)
    c = connection_from_json(load_json(args.path))
    i_max = args.imax if args.imax is not None else 3
    j_max = args.jmax if args.jmax is not None else 3
    if not (1 <= i_max <= GRID_CAP and 1 <= j_max <= GRID_CAP):
        raise InputError(f"--imax and --jmax must lie in [1, {GRID_CAP}]")
    m = build_markov_lattice(c, base=args.base, i_max=i_max, j_max=j_max)
    rep = verify_lattice_axioms(m, tol=args.tol, seed=args.seed)
    info: dict = {"base": m.base, "block_sizes": {f"{i},{j}": v for (i, j), v in m.block_sizes().items()}}
    if args.extract and rep.passed:
        try:
            back = connection_from_lattice(m, seed=args.seed, tol=max(args.tol, 1e-8))
        except (AxiomViolation, TowerError) as exc:
            rep.add_bool("extraction: connection recovered from the lattice", False, str(exc))
        else:
            rep.extend(check_biunitary(back, args.tol), "extracted: ")
            rep.add("round trip: blockwise singular values agree", compare_invariants(c, back), max(args.tol, 1e-8))
            info["extracted"] = connection_to_json(back)
    return _emit(args, rep, info)


def cmd_embed_tl(args) -> int:
    data = load_json(args.path)
    g, nu, fp = _load_weighted(data, args.d, args.tol)
    n = args.n if args.n is not None else (args.depth if args.depth is not None else 3)
    if not 1 <= n <= N_CAP:
        raise InputError(f"--n must lie in [1, {N_CAP}]")
    rep = Report(f"TL embedding into the graph planar algebra of {args.path}, n={n}")
    if fp is not None:
        rep.extend(fp)
        if not fp.passed:
            return _emit(args, rep, {})
    emb, sub = verify_embedding(g, nu, n, seed=args.seed, tol=args.tol)
    rep.extend(sub)
    box = box_space(g, nu, n)
    info: dict = {"d": box.d, "box_dim": box.dim, "image_rank": emb.image_rank, "kernel_dim": emb.kernel_dim}
    if emb.kernel_dim:
        jw = embed_tl(jones_wenzl(n, box.d), g, box=box)
        info["jw_norm"] = float(np.linalg.norm(jw))
        rep.add(f"kernel is spanned by JW_{n}", float(np.linalg.norm(jw)) if emb.kernel_dim == 1 else float("inf"), max(args.tol, 1e-8))
    if args.expect_kernel is not None:
        rep.add("kernel dimension as expected", abs(kernel_dimension(g, nu, n) - args.expect_kernel), 0.5)
    return _emit(args, rep, info)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help=f"tolerance (default 1e-9, or ${TOL_ENV})")
    common.add_argument("--seed", type=int, default=0, help="seed for randomised checks (default 0)")
    common.add_argument("--d", type=float, default=None, help="modulus override")
    common.add_argument("--json", metavar="PATH", default=None, help="write a JSON report ('-' for stdout)")
    common.add_argument("--dot", metavar="PATH", default=None, help="write a DOT export")

    p = argparse.ArgumentParser(prog="subfactorlab", description="Verify and build standard lambda-lattices, Markov towers and biunitary connections.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify-graph", parents=[common], help="fairness, balance, Frobenius-Perron and square associativity")
    s.add_argument("path")
    s.set_defaults(func=cmd_verify_graph)

    s = sub.add_parser("build-tower", parents=[common], help="path tower, Markov axioms, Bratteli diagram and principal graph")
    s.add_argument("path")
    s.add_argument("--base", default=None)
    s.add_argument("--depth", type=int, default=None)
    s.add_argument("--recover-weights", action="store_true", help="recover the edge weighting and compare with the input")
    s.set_defaults(func=cmd_build_tower)

    s = sub.add_parser("verify-connection", parents=[common], help="biunitarity and rotation checks")
    s.add_argument("path")
    s.add_argument("--compare", metavar="PATH", default=None, help="second connection whose gauge invariants must agree")
    s.set_defaults(func=cmd_verify_connection)

    s = sub.add_parser("build-lattice", parents=[common], help="Markov lattice of a connection, or the TLJ lattice with --d")
    s.add_argument("path", nargs="?", default=None)
    s.add_argument("--base", default=None)
    s.add_argument("--imax", type=int, default=None)
    s.add_argument("--jmax", type=int, default=None)
    s.add_argument("--extract", action="store_true", help="extract the connection back and compare invariants")
    s.set_defaults(func=cmd_build_lattice)

    s = sub.add_parser("embed-tl", parents=[common], help="TL diagrams in the graph planar algebra")
    s.add_argument("path")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--depth", type=int, default=None, help="alias for --n")
    s.add_argument("--expect-kernel", type=int, default=None)
    s.set_defaults(func=cmd_embed_tl)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.tol = _check_tol(args.tol if args.tol is not None else default_tol())
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KeyError, TypeError) as exc:
        print(f"input error: malformed data ({type(exc).__name__}: {exc})", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
