"""Generate the small-sentence corpus used by the verdict-preservation tests.

Each entry has a strict forall-exists sentence (one universal, one or two
existential variables, degree <= 2), the reference verdicts of its classical
and exotic readings, and a paired one-dimensional directed Hausdorff instance.
Only entries whose reference verdicts are robust at the desk margin are kept;
pipelines are never consulted here.

    python scripts/make_corpus.py --out tests/data/corpus.jsonl --seed 7
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction

from sarkit.decide import Verdict
from sarkit.desk import bounded_reference, check_exotic, exotic_reading
from sarkit.decide import GridSpec, oracle_decide
from sarkit.desk import MARGIN, expand_grids
from sarkit.formula import (
    HausdorffInstance, SemiAlgebraicSet, instance_to_dict, parse_formula, parse_sentence,
    print_formula,
)
from sarkit.reductions import encode_directed_hausdorff


@dataclass(frozen=True)
class CorpusConfig:
    size: int = 200
    false_count: int = 60
    seed: int = 7
    max_coeff: int = 3
    max_tries: int = 20_000


SEEDS = [
    "forall x exists y: x*y > 1",
    "forall x exists y: y - x < 1 & x - y < 1",
    "forall x exists y: x^2 + y^2 > 0",
    "forall x exists y: y^2 - x < 0",
]


def _monomials(names):
    out = [()]
    for i, a in enumerate(names):
        out.append(((a, 1),))
        out.append(((a, 2),))
        for b in names[i + 1:]:
            out.append(((a, 1), (b, 1)))
    return out


def _poly_text(rng: random.Random, names, cfg: CorpusConfig) -> str:
    monos = _monomials(names)
    picks = rng.sample(monos, rng.randint(2, 4))
    parts = []
    for m in picks:
        c = rng.choice([k for k in range(-cfg.max_coeff, cfg.max_coeff + 1) if k])
        body = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
        parts.append(f"{c}" if not body else (f"{c}*{body}" if c != 1 else body))
    text = " + ".join(parts).replace("+ -", "- ")
    return text


def random_sentence(rng: random.Random, cfg: CorpusConfig) -> str:
    m = rng.choice([1, 1, 1, 2])
    ys = ["y"] if m == 1 else ["y1", "y2"]
    names = ["x"] + ys
    atoms = [f"{_poly_text(rng, names, cfg)} {rng.choice(['<', '>'])} 0" for _ in range(rng.choice([1, 1, 2]))]
    body = atoms[0] if len(atoms) == 1 else f"({atoms[0]}) {rng.choice(['&', '|'])} ({atoms[1]})"
    return f"forall x exists {', '.join(ys)}: {body}"


def _set_text(rng: random.Random) -> str:
    q = lambda: Fraction(rng.randint(-6, 6), 4)
    kind = rng.choice(["point", "interval", "interval", "union"])
    if kind == "point":
        return f"x - {q()} = 0".replace("- -", "+ ")
    lo, hi = sorted((q(), q()))
    if lo == hi:
        hi = lo + Fraction(1, 2)
    iv = f"x >= {lo} & x <= {hi}"
    if kind == "interval":
        return iv
    return f"({iv}) | x - {q()} = 0".replace("- -", "+ ")


def random_instance(rng: random.Random) -> HausdorffInstance:
    A = SemiAlgebraicSet(("x",), parse_formula(_set_text(rng), free=("x",)))
    B = SemiAlgebraicSet(("x",), parse_formula(_set_text(rng), free=("x",)))
    t = Fraction(rng.choice([0, 1, 2, 3, 4, 5, 6]), 4)
    return HausdorffInstance(A, B, t, True)


def reference_expand(s) -> Verdict:
    g, _ = expand_grids(s)
    return oracle_decide(bounded_reference(s), g)


def reference_exotic(s) -> Verdict:
    return check_exotic(exotic_reading(s)).reference


def reference_hausdorff(h: HausdorffInstance) -> Verdict:
    g = GridSpec(resolution=32, margin=MARGIN,
                 boxes={"e": (Fraction(1, 16), Fraction(1, 4)), "a1": (-2, 2), "b1": (-2, 2)},
                 resolutions={"e": 3})
    return oracle_decide(encode_directed_hausdorff(h), g)


def build(cfg: CorpusConfig) -> list:
    rng = random.Random(cfg.seed)
    seen: set = set()
    out: list = []
    counts = {Verdict.TRUE: 0, Verdict.FALSE: 0}
    quota = {Verdict.TRUE: cfg.size - cfg.false_count, Verdict.FALSE: cfg.false_count}
    candidates = iter(SEEDS)
    for _ in range(cfg.max_tries):
        if len(out) == cfg.size:
            break
        text = next(candidates, None) or random_sentence(rng, cfg)
        s = parse_sentence(text)
        key = print_formula(s)
        if key in seen:
            continue
        seen.add(key)
        v = reference_expand(s)
        if v is Verdict.FRAGILE or counts[v] >= quota[v]:
            continue
        ev = reference_exotic(s)
        if ev is Verdict.FRAGILE:
            continue
        for _ in range(50):
            h = random_instance(rng)
            hv = reference_hausdorff(h)
            if hv is not Verdict.FRAGILE:
                break
        else:
            continue
        counts[v] += 1
        out.append({
            "id": len(out),
            "sentence": key,
            "expected": v.value,
            "exotic_expected": ev.value,
            "hausdorff": instance_to_dict(h),
            "hausdorff_expected": hv.value,
        })
        print(f"{len(out):3d} {v.value:5s} {ev.value:5s} {hv.value:5s} {key}", file=sys.stderr)
    if len(out) < cfg.size:
        raise SystemExit(f"only {len(out)} robust sentences found")
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="tests/data/corpus.jsonl")
    ap.add_argument("--seed", type=int, default=CorpusConfig.seed)
    ap.add_argument("--size", type=int, default=CorpusConfig.size)
    ap.add_argument("--false-count", type=int, default=CorpusConfig.false_count)
    a = ap.parse_args(argv)
    cfg = CorpusConfig(size=a.size, false_count=a.false_count, seed=a.seed)
    rows = build(cfg)
    with open(a.out, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
