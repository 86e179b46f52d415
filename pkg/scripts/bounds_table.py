"""Range exponents and tower bounds for a few sentence shapes.

    python scripts/bounds_table.py --alpha 1
"""

from __future__ import annotations

import argparse

from sarkit.bounds import BoundConfig, bounds_table

SHAPES = [(1, 1, 2), (1, 1, 4), (1, 1, 8), (2, 1, 4), (1, 2, 4), (2, 2, 8), (3, 1, 16)]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=int, default=8)
    ap.add_argument("--beta", type=int, default=32)
    a = ap.parse_args(argv)
    cfg = BoundConfig(alpha=a.alpha, beta=a.beta)
    print(f"{'n':>2} {'m':>2} {'L':>3} {'N':>8} {'M':>10}  C, D")
    for n, m, L in SHAPES:
        t = bounds_table(n, m, L, cfg)
        print(f"{n:>2} {m:>2} {L:>3} {t['N']:>8} {t['M']:>10}  {t['C']}, {t['D']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
