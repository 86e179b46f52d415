"""Hypothesis strategies shared by the test modules."""

from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from sarkit.algebra import Polynomial
from sarkit.formula import And, Atom, Not, Or, Rel

VARS = ("x", "y", "z")

small_ints = st.integers(min_value=-5, max_value=5)
rationals = st.builds(Fraction, st.integers(-12, 12), st.integers(1, 6))


@st.composite
def monomials(draw, names=VARS, max_exp=3):
    chosen = draw(st.lists(st.sampled_from(names), unique=True, max_size=len(names)))
    return tuple((v, draw(st.integers(1, max_exp))) for v in chosen)


@st.composite
def polynomials(draw, names=VARS, max_terms=4, max_exp=3):
    terms = draw(st.lists(st.tuples(monomials(names, max_exp), small_ints), max_size=max_terms))
    return Polynomial(terms)


def points(names=VARS):
    return st.fixed_dictionaries({v: rationals for v in names})


relations = st.sampled_from(list(Rel))


def atoms(names=VARS, rels=relations):
    return st.builds(Atom, polynomials(names, max_terms=3, max_exp=2), rels)


def formulas(names=VARS, rels=relations, negation=True, max_leaves=6):
    def extend(children):
        opts = [st.lists(children, min_size=2, max_size=3).map(lambda cs: And(tuple(cs))),
                st.lists(children, min_size=2, max_size=3).map(lambda cs: Or(tuple(cs)))]
        if negation:
            opts.append(children.map(Not))
        return st.one_of(*opts)
    return st.recursive(atoms(names, rels), extend, max_leaves=max_leaves)
