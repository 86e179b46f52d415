"""Check verdict preservation and counterexample fattening over the committed corpus.

    python scripts/check_corpus.py --corpus tests/data/corpus.jsonl
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from sarkit.desk import check_corpus_row


def load(path: str) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", default="tests/data/corpus.jsonl")
    ap.add_argument("--limit", type=int, default=None)
    a = ap.parse_args(argv)
    rows = load(a.corpus)[: a.limit]
    t0 = time.time()
    results = []
    for row in rows:
        r = check_corpus_row(row)
        results.append(r)
        print(f"{r.id:3d} expand={r.expand} exotic={r.exotic} membership={r.membership} "
              f"run={r.run} raw_isolated={r.raw_isolated}", file=sys.stderr)
    bad = sum(not r.preserved for r in results)
    runs = [r.run for r in results if r.run is not None]
    iso = sum(1 for r in results if r.raw_isolated)
    print(f"preserved {len(rows) - bad}/{len(rows)}; false rows {len(runs)}, "
          f"min run {min(runs) if runs else None}; raw rows with isolated counterexamples {iso}; "
          f"{time.time() - t0:.1f}s")
    return 0 if bad == 0 and all(r >= 3 for r in runs) else 1


if __name__ == "__main__":
    raise SystemExit(main())
