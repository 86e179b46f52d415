"""Acceptance criteria 1-9, each printing one PASS/FAIL line."""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest

from bound_table import FORALL_STRICT, TABLE, lattice_witnesses, matches, monotonicity_violations
from sarkit.algebra import Polynomial, TowerBound, double_exp, tower_le
from sarkit.bounds import epsilon_lower_bound, existential_range_exponent, universal_range_exponent
from sarkit.cli import main as cli_main
from sarkit.decide import (
    GridSpec, Verdict, counterexample_lattice, directed_hausdorff, eval_formula, oracle_decide, sample_set,
)
from sarkit.desk import check_corpus_row
from sarkit.errors import SizeExceededError
from sarkit.formula import And, Atom, Not, Or, Rel, SemiAlgebraicSet, formula_length, parse_formula, parse_sentence
from sarkit.gadgets import chi, tseitin_quadratic, tseitin_quartic
from sarkit.reductions import erd_to_hausdorff, expand_counterexamples

F = Fraction
ROOT = Path(__file__).resolve().parents[1]


def report(capsys, k: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


# ---------------------------------------------------------------------------
# 1. quartic pair distance

def test_criterion_1_quartic_pair(capsys):
    t0 = time.time()
    code = cli_main(["approx-hausdorff", str(ROOT / "data" / "quartic_pair.json"),
                     "--resolution", "512", "--box=-16,16", "--refine"])
    out = capsys.readouterr().out.splitlines()
    elapsed = time.time() - t0
    i = next(k for k, line in enumerate(out) if line.startswith("refined"))
    d = float(out[i].split()[1])
    a = [float(x) for x in out[i + 1].split()[1:]]
    b = [float(x) for x in out[i + 2].split()[1:]]
    ok = (code == 0 and abs(d - 12.33591) <= 5e-3 and elapsed < 60
          and math.dist(a, (-11.48362, -6.1760)) <= 5e-2
          and math.dist(b, (-0.56460, -0.43583)) <= 5e-2)
    report(capsys, 1, ok, f"distance {d:.6f}, a {a}, b {b}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 2. squaring chain exactness

def test_criterion_2_chi_exact(capsys):
    sympy = pytest.importorskip("sympy")
    bad = []
    for N in range(7):
        f = chi(N)
        atoms = f.children if isinstance(f, And) else (f,)
        syms = sympy.symbols([f"u{i}" for i in range(N + 1)])
        eqs = [sympy.sympify(str(a.poly).replace("^", "**")) for a in atoms]
        sols = sympy.solve(eqs, syms, dict=True)
        want = {s: sympy.Rational(1, 2 ** (2 ** i)) for i, s in enumerate(syms)}
        if sols != [want]:
            bad.append(N)
    ok = not bad
    report(capsys, 2, ok, f"unique exact solution u_i = 2^-2^i for N = 0..6; failures {bad}")
    assert ok


# ---------------------------------------------------------------------------
# 3. xy > 1 counterexamples

def test_criterion_3_hyperbola(capsys):
    s = parse_sentence("forall x in [-1, 1] . exists y in [-1, 1] : x*y > 1")
    g = GridSpec(resolution=64)
    verdict = oracle_decide(s, g)
    full = counterexample_lattice(s, g)
    widths = []
    for B in (10, 20, 40, 80):
        sb = parse_sentence(f"forall x in [-1, 1] . exists y in [-{B}, {B}] : x*y > 1")
        c = counterexample_lattice(sb, GridSpec(resolution=64, resolutions={"y": 256}))
        xs = [p[0] for p in c.points()]
        widths.append((B, max(abs(x) for x in xs), all(abs(x) <= F(1, B) for x in xs)))
    shrinking = all(w1[1] <= w0[1] for w0, w1 in zip(widths, widths[1:]))
    ok = (verdict is Verdict.FALSE and full.count == 65 and shrinking and all(w[2] for w in widths))
    report(capsys, 3, ok, f"verdict {verdict.value}, {full.count}/65 lattice points; "
           f"max |x| by box {[(B, float(m)) for B, m, _ in widths]}")
    assert ok


# ---------------------------------------------------------------------------
# 4 and 5. corpus

@pytest.fixture(scope="module")
def corpus_results(corpus):
    return [check_corpus_row(row) for row in corpus]


def test_criterion_4_preservation(capsys, corpus_results):
    good = sum(r.preserved for r in corpus_results)
    ok = good == 200 and len(corpus_results) == 200
    report(capsys, 4, ok, f"verdict preserved in {good}/{len(corpus_results)}")
    assert ok


def test_criterion_5_fattening(capsys, corpus_results):
    runs = [r.run for r in corpus_results if r.run is not None]
    isolated = [r.id for r in corpus_results if r.raw_isolated]
    ok = len(runs) == 60 and min(runs) >= 3 and len(isolated) >= 1
    report(capsys, 5, ok, f"{len(runs)} false rows, min run {min(runs)} lattice points; "
           f"{len(isolated)} raw inputs with isolated counterexamples")
    assert ok


# ---------------------------------------------------------------------------
# 6. flattening

NAMES = ("x", "y", "z")


def _random_poly(r: random.Random) -> Polynomial:
    terms: dict = {}
    for _ in range(r.randint(1, 3)):
        m = tuple(sorted((v, r.randint(1, 2)) for v in r.sample(NAMES, r.randint(0, 2))))
        terms[m] = terms.get(m, 0) + r.randint(-4, 4)
    p = Polynomial(terms)
    return p if not p.is_zero() else Polynomial.var("x")


def _random_formula(r: random.Random, depth: int = 0):
    if depth >= 2 or r.random() < 0.35:
        return Atom(_random_poly(r), r.choice(list(Rel)))
    k = r.random()
    if k < 0.15:
        return Not(_random_formula(r, depth + 1))
    kids = tuple(_random_formula(r, depth + 1) for _ in range(r.randint(2, 3)))
    return And(kids) if k < 0.55 else Or(kids)


def _mp(p: Polynomial, env: dict):
    total = mpmath.mpf(0)
    for m, c in p.items():
        term = mpmath.mpf(c)
        for v, e in m:
            x = env[v]
            term *= (mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else x) ** e
        total += term
    return total


def _infeasible(z3, equations, point, fresh) -> bool:
    vs = {v: z3.Real(v) for v in fresh}
    s = z3.Solver()
    s.set("timeout", 20000)
    for e in equations:
        expr = 0
        for m, c in e.items():
            term = z3.RealVal(c)
            for v, k in m:
                base = vs[v] if v in vs else z3.RealVal(point[v])
                for _ in range(k):
                    term = term * base
            expr = expr + term
        s.add(expr == 0)
    return s.check() == z3.unsat


def test_criterion_6_flattening(capsys):
    z3 = pytest.importorskip("z3")
    r = random.Random(2024)
    lattice = [F(k, 2) for k in range(-2, 3)]
    worst = 0.0
    mismatches = degree_fail = n_true = n_false = 0
    with mpmath.workdps(60):
        for _ in range(100):
            f = _random_formula(r)
            q, Q = tseitin_quadratic(f), tseitin_quartic(f)
            degree_fail += not (all(e.total_degree() <= 2 for e in q.equations) and Q.poly.total_degree() <= 4)
            # the quartic is the sum of squares of the system, so it shares its real zeros
            sos = Q.poly == sum((e * e for e in q.equations), Polynomial.zero()) and Q.fresh == q.fresh
            for _ in range(100):
                pt = {v: r.choice(lattice) if r.random() < 0.7 else F(r.randint(-9, 9), r.randint(1, 5))
                      for v in NAMES}
                if eval_formula(f, pt):
                    n_true += 1
                    env = {**pt, **q.witness(pt)}
                    res = max([float(abs(_mp(e, env))) for e in q.equations] + [0.0])
                    res = max(res, float(abs(_mp(Q.poly, {**pt, **Q.witness(pt)}))))
                    worst = max(worst, res)
                    mismatches += res >= 1e-12
                else:
                    n_false += 1
                    mismatches += not (sos and _infeasible(z3, q.equations, pt, q.fresh))
    ok = mismatches == 0 and degree_fail == 0 and n_true + n_false == 10_000
    report(capsys, 6, ok, f"{n_true} true points (max residual {worst:.1e}), {n_false} false points infeasible; "
           f"{mismatches} mismatches, {degree_fail} degree failures")
    assert ok


# ---------------------------------------------------------------------------
# 7. bound calculus

def test_criterion_7_bounds(capsys):
    table_bad = [f"{row.op}{row.args}" for row in TABLE if not matches(row)]
    mono_bad = monotonicity_violations()
    outside = 0
    for text in FORALL_STRICT:
        s = parse_sentence(text)
        L = formula_length(s)
        D = double_exp(existential_range_exponent(1, 1, universal_range_exponent(1, 1, L), L))
        for _, y in lattice_witnesses(s):
            outside += y is None or not tower_le(TowerBound.lit(max(1, math.ceil(abs(y)))), D)
    ok = len(TABLE) == 20 and not table_bad and not mono_bad and len(FORALL_STRICT) == 30 and outside == 0
    report(capsys, 7, ok, f"table {20 - len(table_bad)}/20, monotonicity violations {len(mono_bad)}, "
           f"witnesses outside [-D, D] {outside} of {30 * 17}")
    assert ok


# ---------------------------------------------------------------------------
# 8. closure reduction

ERD_PAIRS = [
    (("x",), "x = 0", "x > 0 & x < 1", True),
    (("x",), "x - 2 = 0", "x > 0 & x < 1", False),
    (("x",), "x >= 0 & x <= 1", "x > 0 & x < 1", True),
    (("x",), "x >= 0 & x <= 2", "x > 0 & x < 1", False),
    (("x",), "x - 1 = 0", "x^2 - 1 < 0", True),
    (("x",), "x = 0", "x != 0", True),
    (("x",), "x^2 - 1 = 0", "x^2 - 1 < 0", True),
    (("x",), "x^2 - 4 = 0", "x^2 - 1 < 0", False),
    (("x",), "x > 0 & x < 1", "x >= 0 & x <= 1", True),
    (("x",), "x = 0", "x^2 - 1 > 0", False),
    (("x", "y"), "x^2 + y^2 - 1 = 0", "x^2 + y^2 - 1 < 0", True),
    (("x", "y"), "x^2 + y^2 - 4 = 0", "x^2 + y^2 - 1 < 0", False),
    (("x", "y"), "x = 0 & y = 0", "x^2 + y^2 - 1 = 0", False),
    (("x", "y"), "x^2 + y^2 - 1 <= 0", "x^2 + y^2 - 1 < 0", True),
    (("x", "y"), "y = 0 & x^2 - 1 <= 0", "y > 0 & x^2 + y^2 - 4 < 0", True),
    (("x", "y"), "x = 0 & y = 0", "x*y > 0", True),
    (("x", "y"), "x - 1 = 0 & y + 1 = 0", "x*y > 0", False),
    (("x", "y"), "x^2 + y^2 - 1 = 0", "x^2 + y^2 - 1 > 0 & x^2 + y^2 - 4 < 0", True),
    (("x", "y"), "4*x^2 + 4*y^2 - 1 <= 0", "x^2 + y^2 - 1 > 0 & x^2 + y^2 - 4 < 0", False),
    (("x", "y"), "x*y - 1 = 0 & x^2 - 4 <= 0", "x*y - 1 > 0", True),
]


def test_criterion_8_closure(capsys):
    wrong = []
    for coords, a, b, inside in ERD_PAIRS:
        h = erd_to_hausdorff(SemiAlgebraicSet(coords, parse_formula(a)), SemiAlgebraicSet(coords, parse_formula(b)))
        g = GridSpec(resolution=256 if len(coords) == 1 else 128, default_box=(-4, 4))
        r = directed_hausdorff(sample_set(h.A, g), sample_set(h.B, g))
        if (r.distance <= 1 + r.error) != inside:
            wrong.append((a, b, r.distance, r.error))
    ok = not wrong and len(ERD_PAIRS) == 20
    report(capsys, 8, ok, f"{20 - len(wrong)}/20 pairs agree with the closure relation {wrong}")
    assert ok


# ---------------------------------------------------------------------------
# 9. what is not reproduced

def test_criterion_9_scope_statement(capsys):
    # the full-scale constructions cannot be materialized, even for the smallest input
    eps = epsilon_lower_bound(2, [1])
    try:
        expand_counterexamples(parse_sentence("forall x . exists y : x*y > 1"))
        refused = False
    except SizeExceededError:
        refused = True
    ok = eps.try_materialize() is None and refused
    report(capsys, 9, ok,
           "NOT REPRODUCED: the completeness results and the doubly exponential gap between the "
           "range bounds are not reproducible at any scale. Full-scale epsilon and squaring chains "
           "do not fit in memory. Coverage is by structural postconditions, oracle equivalence at "
           "desk scale (criteria 4, 6, 8) and counterexample fattening (criterion 5).")
    assert ok
