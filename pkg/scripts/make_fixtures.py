"""Write the JSON fixtures used by the CLI tests and the acceptance suite.

Graph weights are written as decimal strings computed from the closed form
``nu_k = sin(k pi / (n + 1))`` for ``A_n``; connections come from the
fixture builders in :mod:`subfactorlab.biunitary`.
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from subfactorlab.biunitary import (
    apply_gauge,
    connection_to_json,
    product_connection,
    random_gauge,
    square_a3_connection,
    trivial_connection,
)
from subfactorlab.weighted_graph import dynkin_a

ROOT = Path(__file__).resolve().parents[1]


def a_graph(n: int, with_nu: bool) -> dict:
    """``A_n`` as ``p1 - ... - pn`` with closed-form Perron data."""
    names = [f"p{k}" for k in range(1, n + 1)]
    nu = {f"p{k}": math.sin(k * math.pi / (n + 1)) for k in range(1, n + 1)}
    edges, bar = [], {}
    for k in range(n - 1):
        u, v = names[k], names[k + 1]
        a, b = f"{u}>{v}", f"{v}>{u}"
        edges.append({"id": a, "src": u, "dst": v, "w": repr(nu[v] / nu[u])})
        edges.append({"id": b, "src": v, "dst": u, "w": repr(nu[u] / nu[v])})
        bar[a], bar[b] = b, a
    out = {"v0": names[0::2], "v1": names[1::2], "edges": edges, "bar": bar}
    if with_nu:
        for e in out["edges"]:
            del e["w"]
        out["nu"] = {k: repr(v) for k, v in nu.items()}
    return out


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default=str(ROOT / "tests" / "fixtures"))
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def write(name: str, data) -> None:
        (out / name).write_text(json.dumps(data, indent=1) + "\n")

    for n in (3, 4, 5):
        write(f"a{n}.json", a_graph(n, with_nu=False))
    write("a5_nu.json", a_graph(5, with_nu=True))

    bad = a_graph(3, with_nu=False)
    bad["edges"][0]["w"] = "1.5"
    write("a3_perturbed.json", bad)
    bad_nu = a_graph(5, with_nu=True)
    bad_nu["nu"]["p3"] = "0.9"
    write("a5_bad_nu.json", bad_nu)
    (out / "malformed.json").write_text('{"v0": ["p1"], "v1": ["p2"], "edges": [\n')
    write("missing_bar.json", {"v0": ["p1"], "v1": ["p2"], "edges": [{"id": "e", "src": "p1", "dst": "p2", "w": "1"}]})

    write("trivial_connection.json", connection_to_json(trivial_connection(0.3)))
    hadamard = square_a3_connection()
    write("hadamard_connection.json", connection_to_json(hadamard))
    write("hadamard_gauged.json", connection_to_json(apply_gauge(hadamard, *random_gauge(hadamard, np.random.default_rng(7)))))
    write("bad_connection.json", connection_to_json(square_a3_connection((1.0, 1.0, 1.0, 1.0))))
    write("product_a3_connection.json", connection_to_json(product_connection(dynkin_a(3), dynkin_a(3))))
    print(f"fixtures written to {out}")


if __name__ == "__main__":
    main()
