from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from sarkit.algebra import Polynomial, TowerBound, double_exp, tower_le
from sarkit.bounds import (
    BoundConfig, DeskScale, ball_radius_bound, bounds_table, clog2, compact_poly_bound_exponent,
    constant_bound_exponent, epsilon_exponent, epsilon_lower_bound, existential_range_exponent,
    interval_bound_exponent, interval_sup, qe_size_bound, universal_range_exponent,
)
from sarkit.errors import PreconditionError
from sarkit.formula import formula_length, parse_polynomial, parse_sentence
from bound_table import FORALL_STRICT, TABLE, lattice_witnesses, matches, monotonicity_violations

ONE = BoundConfig(alpha=1)
TWO = BoundConfig(alpha=2)


@pytest.mark.parametrize("row", TABLE, ids=lambda r: f"{r.op}{r.args}")
def test_hand_table(row):
    assert matches(row)


def test_spec_examples():
    assert qe_size_bound(2, [1], 1, TWO).materialize() == 16
    assert universal_range_exponent(1, 1, 2, ONE) == 8
    assert existential_range_exponent(1, 1, 8, 2, ONE) == 80
    big = epsilon_lower_bound(2, [1])
    assert big.try_materialize() is None


def test_clog2():
    assert [clog2(L) for L in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]


def test_ball_needs_complexity_four():
    with pytest.raises(PreconditionError):
        ball_radius_bound(3, 1)


def test_config_validation():
    with pytest.raises(ValueError):
        BoundConfig(alpha=0)
    with pytest.raises(ValueError):
        BoundConfig(alpha=40, beta=32)
    with pytest.raises(ValueError):
        BoundConfig(beta=16)
    cfg = BoundConfig(desk=DeskScale(universal=1))
    assert cfg.pick("universal", 99) == 1
    assert cfg.pick("existential", 99) == 99


# ---------------------------------------------------------------------------
# monotonicity lattice

SMALL = [1, 2, 3]
LS = [2, 3, 4, 8]


def _le(a, b) -> bool:
    if isinstance(a, int) and isinstance(b, int):
        return a <= b
    return tower_le(a, b)


def test_qe_monotone():
    for L, n1, n2, m in itertools.product(LS, SMALL, SMALL, SMALL):
        base = qe_size_bound(L, [n1, n2], m, TWO)
        assert _le(base, qe_size_bound(L + 1, [n1, n2], m, TWO))
        assert _le(base, qe_size_bound(L, [n1 + 1, n2], m, TWO))
        assert _le(base, qe_size_bound(L, [n1, n2 + 1], m, TWO))
        assert _le(base, qe_size_bound(L, [n1, n2], m + 1, TWO))


def test_ball_monotone():
    for L, n in itertools.product([4, 5, 8], SMALL):
        base = ball_radius_bound(L, n)
        assert _le(base, ball_radius_bound(L + 1, n))
        assert _le(base, ball_radius_bound(L, n + 1))


def test_epsilon_monotone():
    for L, n in itertools.product(LS, SMALL):
        base = epsilon_lower_bound(L, [n])
        assert _le(base, epsilon_lower_bound(L + 1, [n]))
        assert _le(base, epsilon_lower_bound(L, [n + 1]))
        assert _le(base, epsilon_lower_bound(L, [n, 1]))      # one more block
        assert epsilon_exponent(L, [n]) <= epsilon_exponent(L, [n, 1])


def test_range_exponents_monotone():
    for (n, m, L), cfg in itertools.product(itertools.product(SMALL, SMALL, LS), [ONE, TWO]):
        N = universal_range_exponent(n, m, L, cfg)
        assert N <= universal_range_exponent(n + 1, m, L, cfg)
        assert N <= universal_range_exponent(n, m + 1, L, cfg)
        assert N <= universal_range_exponent(n, m, L + 1, cfg)
        M = existential_range_exponent(n, m, N, L, cfg)
        assert M <= existential_range_exponent(n, m, N + 1, L, cfg)
        assert M <= existential_range_exponent(n + 1, m, N, L, cfg)
        assert M <= existential_range_exponent(n, m + 1, N, L, cfg)
        assert M <= existential_range_exponent(n, m, N, L + 1, cfg)


def test_universal_range_quadratic_in_n():
    Ns = [universal_range_exponent(n, 1, 2, ONE) for n in range(1, 6)]
    assert Ns == [8 * n * n for n in range(1, 6)]


def test_compact_monotone_in_N():
    p = parse_polynomial("x^2*y - 3*y + 1")
    Ks = [compact_poly_bound_exponent(p, N, 2) for N in range(5)]
    assert Ks == sorted(Ks)


# ---------------------------------------------------------------------------
# compact polynomial bound

def test_compact_constant():
    assert compact_poly_bound_exponent(Polynomial.const(5), 3, 1) == 2
    assert constant_bound_exponent(4) == 1
    assert constant_bound_exponent(17) == 3


def test_interval_cross_check_identity():
    x = Polynomial.var("x")
    assert interval_bound_exponent(x, 0) <= 1            # 2 <= 2^(2^1)
    assert interval_sup(x, 2) == 2
    assert interval_bound_exponent(x, 0) <= compact_poly_bound_exponent(x, 0, 1)


def _random_poly(rng: random.Random) -> Polynomial:
    names = ["x", "y"]
    terms = {}
    for _ in range(rng.randint(1, 4)):
        mono = tuple((v, rng.randint(1, 2)) for v in names if rng.random() < 0.6)
        terms[mono] = terms.get(mono, 0) + rng.randint(-7, 7)
    p = Polynomial(terms)
    return p if not p.is_zero() else Polynomial.const(3)


def test_interval_bound_dominates_samples():
    rng = random.Random(11)
    for _ in range(30):
        p = _random_poly(rng)
        for N in (0, 1):
            C = 1 << (1 << N)
            K = interval_bound_exponent(p, N)
            E = double_exp(K).try_materialize(4096)
            grid = [Fraction(-C) + Fraction(2 * C * i, 8) for i in range(9)]
            sampled = max(abs(p.evaluate({"x": a, "y": b})) for a in grid for b in grid)
            assert sampled <= interval_sup(p, C) <= E
            if not p.is_constant():
                assert K <= compact_poly_bound_exponent(p, N, 2)


# ---------------------------------------------------------------------------
# witnesses inside the existential range

@pytest.mark.parametrize("text", FORALL_STRICT)
def test_witnesses_inside_existential_range(text):
    s = parse_sentence(text)
    L = formula_length(s)
    N = universal_range_exponent(1, 1, L)
    M = existential_range_exponent(1, 1, N, L)
    for _, y in lattice_witnesses(s):
        assert y is not None
        assert tower_le(TowerBound.lit(max(1, math.ceil(abs(y)))), double_exp(M))


def test_bounds_table_record():
    t = bounds_table(1, 1, 4, ONE)
    assert t["N"] == 16 and t["M"] == 8 * 2 * 18
    assert t["C"] == "2^(2^16)"
    assert "ball_radius" in t
    assert "ball_radius" not in bounds_table(1, 1, 3, ONE)


@given(st.integers(2, 50), st.integers(1, 4), st.integers(1, 4))
def test_range_exponents_polynomial_envelope(L, n, m):
    N = universal_range_exponent(n, m, L, ONE)
    M = existential_range_exponent(n, m, N, L, ONE)
    lg = clog2(L)
    assert N <= 8 * lg * n * n * m
    assert M <= 8 * lg * n * (n + N + 1) * m


def test_shared_monotonicity_lattice():
    assert monotonicity_violations() == []
