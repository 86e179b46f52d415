"""Counterexamples of forall x exists y : x*y > 1 as the y box grows.

    python scripts/hyperbola_sweep.py --boxes 1,10,20,40,80
"""

from __future__ import annotations

import argparse
from fractions import Fraction

from sarkit.decide import GridSpec, counterexample_lattice
from sarkit.formula import parse_sentence


def sweep(boxes, x_res: int = 64, y_res: int = 256) -> list:
    """(B, count, max |x|) of the x-lattice counterexamples for y in [-B, B]."""
    out = []
    for B in boxes:
        s = parse_sentence(f"forall x in [-1, 1] . exists y in [-{B}, {B}] : x*y > 1")
        c = counterexample_lattice(s, GridSpec(resolution=x_res, resolutions={"y": y_res}))
        pts = [p[0] for p in c.points()]
        out.append((B, len(pts), max((abs(x) for x in pts), default=Fraction(0))))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--boxes", default="1,10,20,40,80")
    ap.add_argument("--x-res", type=int, default=64)
    ap.add_argument("--y-res", type=int, default=256)
    a = ap.parse_args(argv)
    boxes = [int(b) for b in a.boxes.split(",")]
    print(f"{'B':>4} {'count':>6} {'max |x|':>10} {'1/B':>8}")
    for B, n, m in sweep(boxes, a.x_res, a.y_res):
        print(f"{B:>4} {n:>6} {float(m):>10.5f} {1 / B:>8.5f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
