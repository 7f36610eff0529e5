"""The A5 path tower at d = sqrt 3: dimensions, Bratteli blocks, principal graph
and the recovered edge weighting against sin(k pi / 6) ratios.

    python scripts/a5_tower.py [--depth 6] [--dot out.dot]
"""

from __future__ import annotations

import argparse
import math

from subfactorlab.markov_tower import (
    bratteli_to_dot,
    build_path_tower,
    decompose_tower,
    principal_graph,
    principal_graph_to_dot,
    recover_edge_weighting,
    verify_markov_axioms,
    weights_by_depth,
)
from subfactorlab.weighted_graph import a5_example


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--dot", default=None)
    args = ap.parse_args()

    g = a5_example()
    t = build_path_tower(g, "p1", args.depth)
    print(f"d = {t.d:.12f}  dims = {t.dims()}")
    print(verify_markov_axioms(t).summary())
    dec = decompose_tower(t)
    for n, sizes in enumerate(dec.bratteli.sizes):
        print(f"level {n}: blocks {sizes}")
    pg = principal_graph(dec.bratteli)
    print("principal graph edges:", sorted({tuple(sorted((e.src, e.dst))) for e in pg.edges}))
    rec = recover_edge_weighting(t)
    s = [math.sin(k * math.pi / 6) for k in range(1, 6)]
    for (a, b), ws in sorted(weights_by_depth(rec.graph, "L0.0").items()):
        print(f"depth {a} -> {b}: recovered {ws[0]:.12f}  sine ratio {s[b] / s[a]:.12f}")
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(bratteli_to_dot(dec.bratteli) + "\n" + principal_graph_to_dot(pg))


if __name__ == "__main__":
    main()
