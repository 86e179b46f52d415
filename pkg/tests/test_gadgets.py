from __future__ import annotations

import itertools
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from sarkit.algebra import Polynomial, double_exp
from sarkit.errors import NotNormalizedError, PreconditionError, WrongRelationError
from sarkit.formula import (
    And, Atom, FreshNames, PrenexSentence, Quantifier, QuantifierBlock, Rel,
    all_names, formula_length, iter_atoms, parse_formula, parse_sentence,
)
from sarkit.gadgets import (
    chi, chi_solution, find_chi, not_chi, scale_block, scale_variables, strengthen_atom,
    tseitin_equation, tseitin_quadratic, tseitin_quartic,
)
from strategies import formulas

X, Y = Polynomial.var("x"), Polynomial.var("y")
OPS = {Rel.LT: lambda v: v < 0, Rel.LE: lambda v: v <= 0, Rel.EQ: lambda v: v == 0,
       Rel.NE: lambda v: v != 0, Rel.GE: lambda v: v >= 0, Rel.GT: lambda v: v > 0}


def holds(f, pt) -> bool:
    """Independent evaluator on the AST."""
    from sarkit.formula import Not, Or
    if isinstance(f, Atom):
        return OPS[f.rel](f.poly.evaluate(pt))
    if isinstance(f, And):
        return all(holds(c, pt) for c in f.children)
    if isinstance(f, Or):
        return any(holds(c, pt) for c in f.children)
    if isinstance(f, Not):
        return not holds(f.child, pt)
    raise TypeError(f)


def mp_value(p: Polynomial, env: dict):
    # witnesses can be large, so evaluate well above double precision
    with mpmath.workdps(60):
        total = mpmath.mpf(0)
        for m, c in p.items():
            term = mpmath.mpf(c)
            for v, e in m:
                x = env[v]
                term *= (mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else x) ** e
            total += term
        return total


# ---------------------------------------------------------------------------
# squaring chain

def test_chi_zero():
    assert chi(0) == parse_formula("2*u0 = 1")
    assert chi_solution(0) == [Fraction(1, 2)]


def test_chi_solutions():
    assert chi_solution(2) == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 16)]
    assert chi_solution(3)[3] == Fraction(1, 256)


@pytest.mark.parametrize("N", range(6))
def test_chi_solution_satisfies_formula(N):
    pt = dict(zip([f"u{i}" for i in range(N + 1)], chi_solution(N)))
    assert holds(chi(N), pt)
    assert not holds(not_chi(N), pt)


def _interval(p: Polynomial, box: dict):
    lo = hi = Fraction(0)
    for m, c in p.items():
        tlo = thi = Fraction(c)
        for v, e in m:
            a, b = box[v]
            cands = [a ** e, b ** e]
            if e % 2 == 0 and a < 0 < b:
                cands.append(Fraction(0))
            plo, phi = min(cands), max(cands)
            prods = [tlo * plo, tlo * phi, thi * plo, thi * phi]
            tlo, thi = min(prods), max(prods)
        lo += tlo
        hi += thi
    return lo, hi


@pytest.mark.parametrize("N", range(5))
def test_chi_unique_by_subdivision(N):
    names = [f"u{i}" for i in range(N + 1)]
    eqs = [a.poly for a in iter_atoms(chi(N))]
    boxes = [{v: (Fraction(-1), Fraction(1)) for v in names}]
    sol = dict(zip(names, chi_solution(N)))
    for _ in range(14 * (N + 1)):
        nxt = []
        for b in boxes:
            if any(not (lo <= 0 <= hi) for lo, hi in map(lambda p: _interval(p, b), eqs)):
                continue
            v = max(names, key=lambda n: b[n][1] - b[n][0])
            a, c = b[v]
            mid = (a + c) / 2
            nxt += [{**b, v: (a, mid)}, {**b, v: (mid, c)}]
        boxes = nxt
    assert boxes
    # every surviving box is tiny and sits next to the known solution
    for b in boxes:
        for v in names:
            lo, hi = b[v]
            assert hi - lo <= Fraction(1, 2 ** 12)
            assert lo - Fraction(1, 2 ** 10) <= sol[v] <= hi + Fraction(1, 2 ** 10)


def test_find_chi_in_conjunction():
    m = And((*chi(3).children, Atom(X, Rel.LT)))
    assert find_chi(m) == ["u0", "u1", "u2", "u3"]
    assert find_chi(Atom(X, Rel.LT)) is None


def test_chi_negative_rejected():
    with pytest.raises(ValueError):
        chi(-1)


# ---------------------------------------------------------------------------
# strengthening

def test_strengthen_example():
    a, z = strengthen_atom(Atom(X, Rel.LT), "z")
    Z = Polynomial.var("z")
    assert a == Atom(Z * Z * X + 1, Rel.LT)
    assert holds(a, {"x": -1, "z": 2})
    assert not any(holds(a, {"x": 0, "z": Fraction(k, 4)}) for k in range(-40, 41))


def test_strengthen_bounded_z_misses_shallow_points():
    a, _ = strengthen_atom(Atom(X, Rel.LT), "z")
    zs = [Fraction(k, 64) for k in range(-64, 65)]
    assert not any(holds(a, {"x": Fraction(-1, 2), "z": z}) for z in zs)


def test_strengthen_rejects_nonstrict():
    with pytest.raises(WrongRelationError):
        strengthen_atom(Atom(X, Rel.LE), "z")


def test_strengthen_fresh_name():
    fresh = FreshNames({"x"})
    _, z = strengthen_atom(Atom(X, Rel.LT), fresh)
    assert z.startswith("_t") and z != "x"


@given(st.fractions(-8, 8, max_denominator=16), st.integers(-3, 3), st.integers(1, 3))
def test_strengthen_equivalence(x, a, b):
    p = a * X * X + b * X - 1
    atom, _ = strengthen_atom(Atom(p, Rel.LT), "z")
    v = p.evaluate({"x": x})
    # candidate witness z = 1 + 1/sqrt(-v) rounded up to a rational above it
    cands = [Fraction(0)]
    if v < 0:
        cands.append(Fraction(int(1 / (-v) ** 0.5 if -v > 0 else 0) + 2))
    assert (v < 0) == any(holds(atom, {"x": x, "z": z}) for z in cands)


@given(st.fractions(-4, 4, max_denominator=32), st.integers(1, 6))
def test_strengthen_bounded_forces_margin(x, D):
    atom, _ = strengthen_atom(Atom(X, Rel.LT), "z")
    zs = [Fraction(k * D, 32) for k in range(-32, 33)]
    if any(holds(atom, {"x": x, "z": z}) for z in zs):
        assert x < -Fraction(1, D * D)


# ---------------------------------------------------------------------------
# scaling

def _boxed(level: int, body, K: int) -> PrenexSentence:
    names = [f"u{i}" for i in range(K + 1)]
    blocks = (
        QuantifierBlock(Quantifier.FORALL, ("x",), double_exp(level).materialize()),
        QuantifierBlock(Quantifier.EXISTS, tuple(names), Fraction(1)),
    )
    return PrenexSentence(blocks, And((*chi(K).children, body)))


def test_scale_block_single_atom_preserves_sign():
    s = _boxed(1, Atom(X - 1, Rel.LT), 1)
    t = scale_block(s, 0, 1, 1)
    assert t.blocks[0].box == 1
    body = [c for c in t.matrix.children if c not in set(chi(1).children)]
    assert len(body) == 1
    sol = dict(zip(["u0", "u1"], chi_solution(1)))
    C = 4
    for k in range(20):
        x = Fraction(-C) + Fraction(2 * C * k, 19)
        lhs = holds(body[0], {**sol, "x": x / C})
        assert lhs == (x - 1 < 0)


@pytest.mark.parametrize("K,level", [(2, 1), (3, 2), (3, 1)])
def test_scale_block_matches_original_on_samples(K, level):
    body = parse_formula("x^2 - 3*x + 1 < 0 | x^3 - 2 > 0")
    s = _boxed(level, body, K)
    t = scale_block(s, 0, K, level)
    sol = dict(zip([f"u{i}" for i in range(K + 1)], chi_solution(K)))
    C = double_exp(level).materialize()
    rest = [c for c in t.matrix.children if c not in set(chi(K).children)]
    for k in range(21):
        x = Fraction(-C) + Fraction(2 * C * k, 20)
        assert holds(rest[0], {**sol, "x": x / C}) == holds(body, {"x": x})


def test_scale_variables_is_polynomial_without_division():
    f = Atom(X * X * Y - 1, Rel.LT)
    g = scale_variables(f, {"x": 1, "y": 2}, 2, ["u0", "u1", "u2"])
    assert all(c.denominator == 1 for _, c in g.poly.items())
    assert set(g.poly.vars) <= {"x", "y", "u0", "u1", "u2"}


def test_scale_block_errors():
    s = _boxed(2, Atom(X, Rel.LT), 1)
    with pytest.raises(PreconditionError):
        scale_block(s, 0, 1, 2)             # chain shorter than level
    no_chain = parse_sentence("forall x in [-4, 4] . exists y : x*y > 1")
    with pytest.raises(PreconditionError):
        scale_block(no_chain, 0, 1, 1)
    wrong_box = _boxed(1, Atom(X, Rel.LT), 2)
    with pytest.raises(PreconditionError):
        scale_block(wrong_box, 0, 2, 2)     # box 4 is not 2^(2^2)


# ---------------------------------------------------------------------------
# flattening

def test_tseitin_equation_atom_kept():
    r = tseitin_quadratic(parse_formula("x = 0"))
    assert r.equations == (X,)
    assert r.fresh == ()
    q = tseitin_quartic(parse_formula("x = 0"))
    assert q.poly == X * X and q.poly.total_degree() == 2


def test_tseitin_strict_atom_witnesses():
    r = tseitin_quadratic(parse_formula("x < 0"))
    assert all(e.total_degree() <= 2 for e in r.equations)
    for k in range(1, 51):
        x = Fraction(-k, 7)
        w = r.witness({"x": x})
        env = {"x": x, **w}
        for e in r.equations:
            assert abs(mp_value(e, env)) < 1e-12


def test_tseitin_disjunction_grid():
    f = parse_formula("x = 0 | y = 0")
    r = tseitin_quadratic(f)
    grid = [Fraction(k, 2) for k in range(-2, 3)]
    for x, y in itertools.product(grid, grid):
        if holds(f, {"x": x, "y": y}):
            env = {"x": x, "y": y, **r.witness({"x": x, "y": y})}
            assert all(mp_value(e, env) == 0 for e in r.equations)


def _fresh_infeasible(equations, point, fresh) -> bool:
    z3 = pytest.importorskip("z3")
    vs = {v: z3.Real(v) for v in fresh}
    s = z3.Solver()
    s.set("timeout", 5000)
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


def test_tseitin_quartic_grid_with_z3():
    f = parse_formula("x < 0 | y = 0")
    q = tseitin_quartic(f)
    assert q.poly.total_degree() <= 4
    grid = [Fraction(k, 2) for k in range(-2, 3)]
    for x, y in itertools.product(grid, grid):
        pt = {"x": x, "y": y}
        if holds(f, pt):
            env = {**pt, **q.witness(pt)}
            assert abs(mp_value(q.poly, env)) < 1e-12
        else:
            assert _fresh_infeasible([q.poly], pt, q.fresh)


@given(formulas(names=("x", "y"), max_leaves=4))
def test_tseitin_degrees_and_true_points(f):
    r = tseitin_quadratic(f)
    q = tseitin_quartic(f)
    assert all(e.total_degree() <= 2 for e in r.equations)
    assert q.poly.total_degree() <= 4
    for x, y in itertools.product([-1, 0, Fraction(1, 2)], repeat=2):
        pt = {"x": Fraction(x), "y": Fraction(y)}
        if holds(f, pt):
            env = {**pt, **r.witness(pt)}
            assert all(abs(mp_value(e, env)) < 1e-12 for e in r.equations)
            assert abs(mp_value(q.poly, {**pt, **q.witness(pt)})) < 1e-12


def _corpus_matrices(corpus, limit):
    for row in corpus[:limit]:
        yield parse_sentence(row["sentence"]).matrix


def test_tseitin_projection_on_corpus_grid(corpus):
    """True points get a witness; false points admit none (z3 on a subset)."""
    checked_false = 0
    for f in _corpus_matrices(corpus, 200):
        r = tseitin_quadratic(f)
        names = sorted(all_names(f))
        grid = [Fraction(-1), Fraction(0), Fraction(1, 2)]
        for vals in itertools.product(grid, repeat=len(names)):
            pt = dict(zip(names, vals))
            if holds(f, pt):
                env = {**pt, **r.witness(pt)}
                assert all(abs(mp_value(e, env)) < 1e-12 for e in r.equations)
            elif checked_false < 60:
                assert _fresh_infeasible(r.equations, pt, r.fresh)
                checked_false += 1


def test_tseitin_equation_copy_free_is_single_residual():
    f = parse_formula("(x < 0 & y <= 1) | x*y = 2")
    e = tseitin_equation(f, copies=False)
    assert all(n.startswith("_t") for n in e.fresh)
    for x, y in itertools.product([-1, 0, 1, 2], repeat=2):
        pt = {"x": Fraction(x), "y": Fraction(y)}
        if holds(f, pt):
            assert abs(mp_value(e.poly, {**pt, **e.witness(pt)})) < 1e-12


SIZE_CONSTANT = 8


def _poly_size(p: Polynomial) -> int:
    return sum(1 + sum(k for _, k in m) for m, _ in p.items())


@given(formulas(names=("x", "y", "z"), max_leaves=6))
def test_tseitin_size_linear(f):
    r = tseitin_quadratic(f)
    size = sum(_poly_size(e) for e in r.equations) + len(r.fresh)
    assert size <= SIZE_CONSTANT * formula_length(f)


def test_tseitin_size_constant_reported(corpus):
    ratios = []
    for f in _corpus_matrices(corpus, 200):
        r = tseitin_quadratic(f)
        ratios.append((sum(_poly_size(e) for e in r.equations) + len(r.fresh)) / formula_length(f))
    print(f"tseitin size constant over corpus: max {max(ratios):.2f}, mean {sum(ratios) / len(ratios):.2f}")
    assert max(ratios) <= SIZE_CONSTANT


def test_tseitin_rejects_quantified_input():
    with pytest.raises(NotNormalizedError):
        tseitin_quadratic(parse_sentence("forall x . exists y : x*y > 1"))
