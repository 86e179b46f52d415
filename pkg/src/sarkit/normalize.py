"""Relation elimination, negation normal form, prenex form and DNF."""

from __future__ import annotations

from .algebra import var_key
from .errors import NotNormalizedError, NotPreparedError, SizeExceededError
from .formula import (
    And, Atom, Not, Or, PrenexSentence, Quantified, QuantifierBlock, Rel,
    all_names, conj, disj, free_vars, is_quantifier_free,
)


def _rewrite_atom(a: Atom):
    p, r = a.poly, a.rel
    if r in (Rel.LT, Rel.LE):
        return a
    if r is Rel.GT:
        return Atom(-p, Rel.LT)
    if r is Rel.GE:
        return Atom(-p, Rel.LE)
    if r is Rel.EQ:
        return And((Atom(p, Rel.LE), Atom(-p, Rel.LE)))
    return Or((Atom(p, Rel.LT), Atom(-p, Rel.LT)))


def eliminate_relations(f):
    """Rewrite every atom to use only < and <=."""
    if isinstance(f, Atom):
        return _rewrite_atom(f)
    if isinstance(f, (And, Or)):
        return type(f)(tuple(eliminate_relations(c) for c in f.children))
    if isinstance(f, Not):
        return Not(eliminate_relations(f.child))
    if isinstance(f, Quantified):
        return Quantified(f.block, eliminate_relations(f.body))
    if isinstance(f, PrenexSentence):
        return PrenexSentence(f.blocks, eliminate_relations(f.matrix), f.free)
    raise TypeError(f"not a formula: {f!r}")


def to_nnf(f):
    """Push negations into atoms; atoms must already use only < and <=."""
    if isinstance(f, PrenexSentence):
        return PrenexSentence(f.blocks, to_nnf(f.matrix), f.free)
    return _nnf(f, False)


def _nnf(f, neg: bool):
    if isinstance(f, Atom):
        if f.rel not in (Rel.LT, Rel.LE):
            raise NotPreparedError(f"atom uses {f.rel.value}; eliminate relations first")
        if not neg:
            return f
        # not(P < 0) iff -P <= 0, not(P <= 0) iff -P < 0
        return Atom(-f.poly, Rel.LE if f.rel is Rel.LT else Rel.LT)
    if isinstance(f, Not):
        return _nnf(f.child, not neg)
    if isinstance(f, (And, Or)):
        kids = tuple(_nnf(c, neg) for c in f.children)
        flip = isinstance(f, And) == neg
        return Or(kids) if flip else And(kids)
    if isinstance(f, Quantified):
        b = f.block
        if neg:
            b = QuantifierBlock(b.quantifier.dual(), b.vars, b.box)
        return Quantified(b, _nnf(f.body, neg))
    raise TypeError(f"not a formula: {f!r}")


def push_negations(f, neg: bool = False):
    """Negation-free equivalent using complemented relations (any relation allowed)."""
    if isinstance(f, Atom):
        return Atom(f.poly, f.rel.complement()) if neg else f
    if isinstance(f, Not):
        return push_negations(f.child, not neg)
    if isinstance(f, (And, Or)):
        kids = tuple(push_negations(c, neg) for c in f.children)
        flip = isinstance(f, And) == neg
        return Or(kids) if flip else And(kids)
    if isinstance(f, Quantified):
        b = f.block
        if neg:
            b = QuantifierBlock(b.quantifier.dual(), b.vars, b.box)
        return Quantified(b, push_negations(f.body, neg))
    if isinstance(f, PrenexSentence):
        if neg:
            blocks = tuple(QuantifierBlock(b.quantifier.dual(), b.vars, b.box) for b in f.blocks)
            return PrenexSentence(blocks, push_negations(f.matrix, True), f.free)
        return PrenexSentence(f.blocks, push_negations(f.matrix), f.free)
    raise TypeError(f"not a formula: {f!r}")


def negate(f):
    """Negation in negation-free form."""
    return push_negations(f, True)


# ---------------------------------------------------------------------------
# prenex conversion

def _sentence_as_formula(s: PrenexSentence):
    body = s.matrix
    for b in reversed(s.blocks):
        body = Quantified(b, body)
    return body


def alpha_rename(f, taken: set):
    """Give every quantified variable a name distinct from all others and from `taken`.

    The first binding of a name keeps it; later ones get suffixes _1, _2, ...
    """
    used = set(taken)
    all_used = all_names(f) | used

    def fresh(name: str) -> str:
        i = 1
        while f"{name}_{i}" in all_used:
            i += 1
        out = f"{name}_{i}"
        all_used.add(out)
        return out

    def walk(g, env: dict):
        if isinstance(g, Atom):
            return Atom(g.poly.rename(env), g.rel) if env else g
        if isinstance(g, (And, Or)):
            return type(g)(tuple(walk(c, env) for c in g.children))
        if isinstance(g, Not):
            return Not(walk(g.child, env))
        if isinstance(g, Quantified):
            inner = dict(env)
            names = []
            for v in g.block.vars:
                if v in used:
                    nv = fresh(v)
                    inner[v] = nv
                else:
                    nv = v
                    inner.pop(v, None)
                used.add(nv)
                names.append(nv)
            return Quantified(g.block.with_vars(names), walk(g.body, inner))
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, {})


def _pull(f):
    """Split a negation-free, alpha-renamed formula into (blocks, matrix)."""
    if isinstance(f, Atom):
        return [], f
    if isinstance(f, Quantified):
        blocks, m = _pull(f.body)
        return [f.block] + blocks, m
    if isinstance(f, (And, Or)):
        parts = [_pull(c) for c in f.children]
        prefix = _merge_prefixes([p[0] for p in parts])
        matrix = (conj if isinstance(f, And) else disj)(*[p[1] for p in parts])
        return prefix, matrix
    raise NotNormalizedError("negation left inside a formula being prenexed")


def _merge_prefixes(seqs: list) -> list:
    """Interleave block sequences, keeping each sequence's order and
    grouping equal quantifiers greedily."""
    seqs = [list(s) for s in seqs]
    out: list = []
    prev = None
    while any(seqs):
        heads = [s[0].quantifier for s in seqs if s]
        kind = prev if prev in heads and not prev.exotic else heads[0]
        taken: list = []
        for s in seqs:
            while s and s[0].quantifier is kind:
                taken.append(s.pop(0))
                if kind.exotic:
                    break
            if kind.exotic and taken:
                break
        out.extend(_group_blocks(taken))
        prev = kind
    return out


def _group_blocks(blocks: list) -> list:
    """Merge consecutive blocks of the same quantifier and equal range."""
    out: list = []
    for b in blocks:
        if out and not b.quantifier.exotic and out[-1].quantifier is b.quantifier and out[-1].box == b.box:
            out[-1] = QuantifierBlock(b.quantifier, out[-1].vars + b.vars, b.box)
        else:
            out.append(b)
    return out


def to_prenex(f) -> PrenexSentence:
    """Move all quantifiers to the front of a (possibly nested) quantified formula."""
    if isinstance(f, PrenexSentence):
        return f
    free = tuple(sorted(free_vars(f), key=var_key))
    g = push_negations(f)
    g = alpha_rename(g, set(free))
    blocks, matrix = _pull(g)
    return PrenexSentence(tuple(_group_blocks(blocks)), matrix, free)


# ---------------------------------------------------------------------------
# disjunctive normal form

def to_dnf(f, size_limit: int = 10_000):
    """Disjunction of conjunctions of atoms; aborts past size_limit atoms."""
    if isinstance(f, PrenexSentence):
        return PrenexSentence(f.blocks, to_dnf(f.matrix, size_limit), f.free)
    if not is_quantifier_free(f):
        raise NotNormalizedError("DNF needs a quantifier-free formula")
    clauses = _clauses(f, size_limit)
    return disj(*[conj(*c) for c in clauses])


def _clauses(f, limit: int) -> list:
    if isinstance(f, Atom):
        return [[f]]
    if isinstance(f, Not):
        raise NotNormalizedError("DNF needs a negation-free formula")
    if isinstance(f, Or):
        out: list = []
        for c in f.children:
            out.extend(_clauses(c, limit))
            _check(out, limit)
        return out
    acc: list = [[]]
    for c in f.children:
        sub = _clauses(c, limit)
        if len(acc) * len(sub) > limit:
            raise SizeExceededError(f"DNF would exceed {limit} atoms")
        acc = [a + b for a in acc for b in sub]
        _check(acc, limit)
    return acc


def _check(clauses: list, limit: int) -> None:
    if sum(len(c) for c in clauses) > limit:
        raise SizeExceededError(f"DNF would exceed {limit} atoms")
