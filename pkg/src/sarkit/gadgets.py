"""Reusable formula constructions: the squaring chain, atom strengthening,
variable scaling and flattening to low-degree equations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import mpmath

from .algebra import Polynomial, TowerBound, double_exp, eval_float, sum_polys, tower_le, var_key
from .errors import NotNormalizedError, PreconditionError, WrongRelationError
from .formula import (
    And, Atom, FreshNames, Or, PrenexSentence, QuantifierBlock, Rel,
    all_names, conj, disj, is_quantifier_free, iter_atoms, map_atoms,
)
from .normalize import push_negations

# ---------------------------------------------------------------------------
# squaring chain

def chi_names(N: int, prefix: str = "u") -> list:
    return [f"{prefix}{i}" for i in range(N + 1)]


def chi(N: int, prefix: str = "u", names: list | None = None):
    """(2 u0 - 1 = 0) and u_i - u_{i-1}^2 = 0 for i = 1..N."""
    if N < 0:
        raise ValueError("N must be non-negative")
    names = names or chi_names(N, prefix)
    if len(names) != N + 1:
        raise ValueError("need N + 1 names")
    u = [Polynomial.var(n) for n in names]
    atoms = [Atom(2 * u[0] - 1, Rel.EQ)]
    for i in range(1, N + 1):
        atoms.append(Atom(u[i] - u[i - 1] * u[i - 1], Rel.EQ))
    return conj(*atoms)


def not_chi(N: int, prefix: str = "u", names: list | None = None):
    """Negation of chi as a negation-free disjunction of strict atoms."""
    names = names or chi_names(N, prefix)
    u = [Polynomial.var(n) for n in names]
    atoms = [Atom(2 * u[0] - 1, Rel.NE)]
    for i in range(1, N + 1):
        atoms.append(Atom(u[i] - u[i - 1] * u[i - 1], Rel.NE))
    return disj(*atoms)


def chi_solution(N: int) -> list:
    """The values u_i = 2^(-2^i), i = 0..N."""
    return [Fraction(1, 1 << (1 << i)) for i in range(N + 1)]


def find_chi(matrix) -> list | None:
    """Names u0..uK of a squaring chain found among the top-level conjuncts."""
    conjuncts = matrix.children if isinstance(matrix, And) else (matrix,)
    eqs = [a for a in conjuncts if isinstance(a, Atom) and a.rel is Rel.EQ]
    start = None
    for a in eqs:
        p = a.poly
        if len(p) == 2 and p.constant_value() == -1 and len(p.vars) == 1:
            v = p.vars[0]
            if p == 2 * Polynomial.var(v) - 1:
                start = v
                break
    if start is None:
        return None
    chain = [start]
    by_poly = {a.poly for a in eqs}
    others = {v for a in eqs for v in a.poly.vars}
    while True:
        prev = Polynomial.var(chain[-1])
        nxt = None
        for v in sorted(others, key=var_key):
            if v not in chain and (Polynomial.var(v) - prev * prev) in by_poly:
                nxt = v
                break
        if nxt is None:
            return chain
        chain.append(nxt)


# ---------------------------------------------------------------------------
# strengthening

def strengthen_atom(a: Atom, fresh: FreshNames | str):
    """P < 0  becomes  z^2 P + 1 < 0 with a fresh z."""
    if a.rel is not Rel.LT:
        raise WrongRelationError(f"strengthening needs a P < 0 atom, got {a.rel.value}")
    z = fresh if isinstance(fresh, str) else fresh.new("z")
    zp = Polynomial.var(z)
    return Atom(zp * zp * a.poly + 1, Rel.LT), z


# ---------------------------------------------------------------------------
# scaling

def scale_polynomial(p: Polynomial, levels: Mapping[str, int], K: int, d: int, u: list) -> Polynomial:
    """u_K^d * p(..., x_v / u_{L_v}, ...) written without division.

    Uses u_K / u_L = u_L u_{L+1} ... u_{K-1}, valid for the chain values.
    """
    out: dict = {}
    for m, c in p.items():
        deg = sum(e for v, e in m if v in levels)
        if deg > d:
            raise PreconditionError(f"scaling degree {d} below monomial degree {deg}")
        mult: dict = {}
        if d - deg:
            mult[u[K]] = d - deg
        for v, e in m:
            if v in levels:
                for i in range(levels[v], K):
                    mult[u[i]] = mult.get(u[i], 0) + e
        exps = dict(m)
        for name, e in mult.items():
            exps[name] = exps.get(name, 0) + e
        key = tuple(sorted(exps.items(), key=lambda it: var_key(it[0])))
        out[key] = out.get(key, 0) + c
    return Polynomial(out)


def scaled_degree(f, names) -> int:
    names = set(names)
    best = 0
    for a in iter_atoms(f):
        for m, _ in a.poly.items():
            best = max(best, sum(e for v, e in m if v in names))
    return best


def scale_variables(f, levels: Mapping[str, int], K: int, u: list, d: int | None = None):
    """Substitute x -> x / u_{L} for each scaled variable and clear denominators with u_K^d."""
    for v, L in levels.items():
        if L > K:
            raise PreconditionError(f"chain length {K} shorter than scaling level {L} of {v}")
    if len(u) < K + 1:
        raise PreconditionError("chain too short")
    if d is None:
        d = scaled_degree(f, levels)
    return map_atoms(f, lambda a: Atom(scale_polynomial(a.poly, levels, K, d, u), a.rel))


def _box_is_double_exp(box, level: int) -> bool:
    if box is None:
        return False
    target = double_exp(level)
    b = box if isinstance(box, TowerBound) else None
    if b is None:
        if Fraction(box).denominator != 1:
            return False
        b = TowerBound.lit(int(box))
    return tower_le(b, target) and tower_le(target, b)


def scale_block(s: PrenexSentence, block: int, K: int, level: int, d: int | None = None) -> PrenexSentence:
    """Rescale one block from [-2^(2^level), 2^(2^level)] to [-1, 1].

    The sentence must conjoin a squaring chain u0..uK with K >= level.
    """
    u = find_chi(s.matrix)
    if u is None:
        raise PreconditionError("sentence has no squaring-chain conjunct")
    if len(u) < K + 1:
        raise PreconditionError(f"squaring chain has length {len(u) - 1} < {K}")
    if K < level:
        raise PreconditionError(f"K = {K} is smaller than the scaling level {level}")
    b = s.blocks[block]
    if not _box_is_double_exp(b.box, level):
        raise PreconditionError(f"block {block} is not boxed by 2^(2^{level})")
    chain_atoms = set(iter_atoms(chi(len(u) - 1, names=u)))
    conjuncts = s.matrix.children if isinstance(s.matrix, And) else (s.matrix,)
    keep = [c for c in conjuncts if c in chain_atoms]
    rest = [c for c in conjuncts if c not in chain_atoms]
    levels = {v: level for v in b.vars}
    if d is None:
        d = scaled_degree(conj(*rest), levels) if rest else 0
    scaled = [scale_variables(c, levels, K, u, d) for c in rest]
    blocks = list(s.blocks)
    blocks[block] = QuantifierBlock(b.quantifier, b.vars, Fraction(1))
    return PrenexSentence(tuple(blocks), conj(*keep, *scaled), s.free)


# ---------------------------------------------------------------------------
# flattening to equations

def _sqrt(value, prec: int):
    """Exact square root of a non-negative rational if it exists, else an mpmath value."""
    if isinstance(value, Fraction):
        n, dd = value.numerator, value.denominator
        rn, rd = math.isqrt(n), math.isqrt(dd)
        if rn * rn == n and rd * rd == dd:
            return Fraction(rn, rd)
        with mpmath.workdps(prec):
            return mpmath.sqrt(mpmath.mpf(n) / dd)
    with mpmath.workdps(prec):
        return mpmath.sqrt(value)


def eval_mixed(p: Polynomial, values: Mapping, prec: int = 50):
    """Evaluate with exact Fractions, switching to mpmath once an irrational value is involved."""
    exact = all(isinstance(values[v], (int, Fraction)) for v in p.vars)
    if exact:
        return p.evaluate(values)
    with mpmath.workdps(prec):
        total = mpmath.mpf(0)
        for m, c in p.items():
            term = mpmath.mpf(c)
            for v, e in m:
                x = values[v]
                if isinstance(x, Fraction):
                    x = mpmath.mpf(x.numerator) / x.denominator
                term *= mpmath.power(x, e)
            total += term
        return total


@dataclass
class _Def:
    name: str
    kind: str  # "sqrt" (s, P + s^2), "isqrt" (z, z^2 P + 1), "inv" (z, z P - 1), "copy", "prod"
    poly: Polynomial | None = None
    factors: tuple = ()


@dataclass
class TseitinResult:
    """Equations E_i = 0 whose projection onto the input variables is the input set."""

    equations: tuple
    fresh: tuple
    defs: list = field(repr=False, default_factory=list)
    precision: int = 50

    def __iter__(self):
        return iter((self.equations, self.fresh, self.witness))

    @property
    def formula(self):
        return conj(*[Atom(e, Rel.EQ) for e in self.equations]) if self.equations else Atom(Polynomial.zero(), Rel.EQ)

    def witness(self, point: Mapping) -> dict:
        return _run_witness(self.defs, point, self.precision)

    def witness_float(self, values: Mapping) -> dict:
        return witness_float(self.defs, values)


@dataclass
class TseitinQuartic:
    poly: Polynomial
    fresh: tuple
    defs: list = field(repr=False, default_factory=list)
    precision: int = 50

    def __iter__(self):
        return iter((self.poly, self.fresh, self.witness))

    @property
    def formula(self):
        return Atom(self.poly, Rel.EQ)

    def witness(self, point: Mapping) -> dict:
        return _run_witness(self.defs, point, self.precision)

    def witness_float(self, values: Mapping) -> dict:
        return witness_float(self.defs, values)


def witness_float(defs: list, values: Mapping) -> dict:
    """Witness values in floating point, elementwise over numpy arrays."""
    import numpy as np

    env = dict(values)
    out: dict = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        for d in defs:
            if d.kind == "prod":
                val = env[d.factors[0]] * env[d.factors[1]]
            elif d.kind == "copy":
                val = eval_float(d.poly, env)
            else:
                p = np.asarray(eval_float(d.poly, env), dtype=float)
                if d.kind == "sqrt":
                    val = np.sqrt(np.maximum(-p, 0.0))
                elif d.kind == "isqrt":
                    val = np.where(p < 0, 1.0 / np.sqrt(np.abs(p)), 0.0)
                else:
                    val = np.where(p != 0, 1.0 / np.where(p != 0, p, 1.0), 0.0)
            env[d.name] = val
            out[d.name] = val
    return out


def _run_witness(defs: list, point: Mapping, prec: int) -> dict:
    values = {k: Fraction(v) if isinstance(v, int) else v for k, v in point.items()}
    out: dict = {}
    for d in defs:
        if d.kind == "prod":
            a, b = values[d.factors[0]], values[d.factors[1]]
            if isinstance(a, Fraction) and isinstance(b, Fraction):
                val = a * b
            else:
                with mpmath.workdps(prec):
                    val = _to_mp(a) * _to_mp(b)
        elif d.kind == "copy":
            val = eval_mixed(d.poly, values, prec)
        else:
            p = eval_mixed(d.poly, values, prec)
            if d.kind == "sqrt":
                val = _sqrt(-p, prec) if p <= 0 else Fraction(0)
            elif d.kind == "isqrt":
                if p < 0:
                    r = _sqrt(-p, prec)
                    val = 1 / r if isinstance(r, Fraction) else _mp_inv(r, prec)
                else:
                    val = Fraction(0)
            else:
                val = (1 / p if isinstance(p, Fraction) else _mp_inv(p, prec)) if p != 0 else Fraction(0)
        values[d.name] = val
        out[d.name] = val
    return out


def _to_mp(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return x


def _mp_inv(x, prec: int):
    with mpmath.workdps(prec):
        return 1 / x


class _Flattener:
    def __init__(self, f, fresh: FreshNames, copies: bool = True):
        self.fresh = fresh
        self.copies = copies
        self.defs: list = []
        self.side: list = []  # definitional equations

    def atom_residual(self, a: Atom) -> Polynomial:
        p, r = a.poly, a.rel
        if r is Rel.EQ:
            return p
        if r in (Rel.GE, Rel.GT):
            p, r = -p, {Rel.GE: Rel.LE, Rel.GT: Rel.LT}[r]
        if r is Rel.LE:
            s = self.fresh.new("s")
            self.defs.append(_Def(s, "sqrt", p))
            sv = Polynomial.var(s)
            return p + sv * sv
        if r is Rel.LT:
            z = self.fresh.new("z")
            self.defs.append(_Def(z, "isqrt", p))
            zv = Polynomial.var(z)
            return zv * zv * p + 1
        z = self.fresh.new("z")
        self.defs.append(_Def(z, "inv", p))
        return Polynomial.var(z) * p - 1

    def define(self, r: Polynomial) -> Polynomial:
        if not self.copies:
            return r
        if len(r) == 1 and r.total_degree() == 1 and list(r.items())[0][1] == 1:
            return r
        v = self.fresh.new("v")
        self.defs.append(_Def(v, "copy", r))
        self.side.append(Polynomial.var(v) - r)
        return Polynomial.var(v)

    def residual(self, f) -> Polynomial:
        """One polynomial R with f(x) iff exists fresh: R = 0 (plus side equations)."""
        if isinstance(f, Atom):
            return self.atom_residual(f)
        if isinstance(f, And):
            rs = [self.define(self.residual(c)) for c in f.children]
            return sum_polys(r * r for r in rs)
        if isinstance(f, Or):
            rs = [self.residual(c) for c in f.children]
            if len(rs) == 2 and all(r.total_degree() <= 1 for r in rs):
                return rs[0] * rs[1]
            vs = [self.define(r) for r in rs]
            acc = vs[0]
            for v in vs[1:-1]:
                acc = self.define(acc * v)
            return acc * vs[-1] if len(vs) > 1 else acc
        raise TypeError(f"unexpected node {f!r}")

    def top(self, f) -> list:
        if isinstance(f, And):
            out = []
            for c in f.children:
                out.extend(self.top(c))
            return out
        return [self.residual(f)]


class _DegreeReducer:
    def __init__(self, fresh: FreshNames, defs: list):
        self.fresh = fresh
        self.defs = defs
        self.pairs: dict = {}
        self.equations: list = []

    def pair(self, a: str, b: str) -> str:
        key = tuple(sorted((a, b), key=var_key))
        if key not in self.pairs:
            w = self.fresh.new("w")
            self.pairs[key] = w
            self.defs.append(_Def(w, "prod", factors=key))
            pa, pb = Polynomial.var(key[0]), Polynomial.var(key[1])
            self.equations.append(Polynomial.var(w) - pa * pb)
        return self.pairs[key]

    def reduce(self, p: Polynomial) -> Polynomial:
        out: dict = {}
        for m, c in p.items():
            factors = [v for v, e in m for _ in range(e)]
            while len(factors) > 2:
                w = self.pair(factors[0], factors[1])
                factors = [w] + factors[2:]
            exps: dict = {}
            for v in factors:
                exps[v] = exps.get(v, 0) + 1
            key = tuple(sorted(exps.items(), key=lambda it: var_key(it[0])))
            out[key] = out.get(key, 0) + c
        return Polynomial(out)


def _require_quantifier_free(f) -> None:
    if not is_quantifier_free(f):
        raise NotNormalizedError("flattening needs a quantifier-free formula; pass the matrix")


def tseitin_quadratic(f, fresh: FreshNames | None = None, precision: int = 50) -> TseitinResult:
    """Flatten a quantifier-free formula into degree <= 2 equations over fresh variables."""
    _require_quantifier_free(f)
    g = push_negations(f)
    fresh = fresh or FreshNames(all_names(f))
    fl = _Flattener(g, fresh)
    eqs = fl.top(g)
    eqs = eqs + fl.side
    red = _DegreeReducer(fresh, fl.defs)
    reduced = [red.reduce(e) for e in eqs]
    reduced = [e for e in reduced + red.equations if not e.is_zero()]
    fresh_names = tuple(d.name for d in fl.defs)
    return TseitinResult(tuple(reduced), fresh_names, fl.defs, precision)


def tseitin_quartic(f, fresh: FreshNames | None = None, precision: int = 50) -> TseitinQuartic:
    """A single polynomial F of degree <= 4 with f(x) iff exists fresh: F = 0."""
    q = tseitin_quadratic(f, fresh, precision)
    F = sum_polys(e * e for e in q.equations)
    return TseitinQuartic(F, q.fresh, q.defs, precision)


def tseitin_equation(f, fresh: FreshNames | None = None, precision: int = 50,
                     copies: bool = True) -> TseitinQuartic:
    """A single polynomial F with f(x) iff exists fresh: F = 0, without degree reduction.

    Same witnesses as tseitin_quadratic but fewer variables and terms; the
    degree is not bounded by 4. copies=False also drops the auxiliary
    variables naming sub-residuals and returns the residual itself (not its
    square): the only fresh variables are the slack and inverse witnesses of
    the atoms, which keeps witness values small.
    """
    _require_quantifier_free(f)
    g = push_negations(f)
    fresh = fresh or FreshNames(all_names(f))
    fl = _Flattener(g, fresh, copies)
    if not copies:
        # one residual already vanishes exactly on the set; no squaring needed
        F = fl.residual(g)
        return TseitinQuartic(F, tuple(d.name for d in fl.defs), fl.defs, precision)
    eqs = [e for e in fl.top(g) + fl.side if not e.is_zero()]
    F = sum_polys(e * e for e in eqs)
    return TseitinQuartic(F, tuple(d.name for d in fl.defs), fl.defs, precision)
