"""Kernel of the TL embedding into the graph planar algebra of A_k, for each box
space n.  The kernel first appears at n = k, where it is spanned by JW_k.

    python scripts/kernel_scan.py [--kmax 6] [--nmax 6]
"""

from __future__ import annotations

import argparse

import numpy as np

from subfactorlab.gpa_embed import N_CAP, box_space, embed_tl, jones_wenzl, kernel_dimension
from subfactorlab.tl_diagram import catalan
from subfactorlab.weighted_graph import dynkin_a


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=6)
    ap.add_argument("--nmax", type=int, default=5)
    args = ap.parse_args()
    nmax = min(args.nmax, N_CAP)
    print("k  n  catalan  kernel  |embed(JW_n)|")
    for k in range(3, args.kmax + 1):
        g = dynkin_a(k)
        for n in range(1, nmax + 1):
            box = box_space(g, None, n)
            kd = kernel_dimension(g, None, n)
            jw = float(np.linalg.norm(embed_tl(jones_wenzl(n, box.d), g, box=box))) if n <= k else float("nan")
            print(f"{k}  {n}  {catalan(n):7d}  {kd:6d}  {jw:.2e}")


if __name__ == "__main__":
    main()
