"""Desk-scale semantics: exact evaluation, a lattice truth oracle for small
boxed sentences, sampling of semi-algebraic sets and approximate Hausdorff
distances between point clouds."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np
from scipy.spatial import cKDTree

from .algebra import Polynomial, TowerBound, var_key
from .errors import DimensionMismatchError, OracleError, PreconditionError
from .formula import (
    And, Atom, Not, Or, PrenexSentence, Quantified, Rel, SemiAlgebraicSet,
)
from .normalize import push_negations

# ---------------------------------------------------------------------------
# exact evaluation

def eval_formula(f, point: Mapping) -> bool:
    """Exact truth value of a quantifier-free formula (or a block-free sentence) at a point."""
    if isinstance(f, PrenexSentence):
        if f.blocks:
            raise PreconditionError("eval_formula needs a quantifier-free formula; use oracle_decide")
        return eval_formula(f.matrix, point)
    if isinstance(f, Atom):
        return f.rel.holds(f.poly.evaluate(point))
    if isinstance(f, And):
        return all(eval_formula(c, point) for c in f.children)
    if isinstance(f, Or):
        return any(eval_formula(c, point) for c in f.children)
    if isinstance(f, Not):
        return not eval_formula(f.child, point)
    if isinstance(f, Quantified):
        raise PreconditionError("eval_formula needs a quantifier-free formula; use oracle_decide")
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# grid description

def _pair(box) -> tuple:
    if isinstance(box, (int, Fraction, str)):
        c = Fraction(box)
        return (-c, c)
    lo, hi = box
    return (Fraction(lo), Fraction(hi))


@dataclass(frozen=True)
class GridSpec:
    """Lattice used by the oracle and the samplers.

    boxes maps variable names to [lo, hi]; unnamed variables fall back to
    default_box, then to the half-width of their quantifier block.
    resolution counts cells per axis (resolution + 1 lattice points).
    """

    resolution: int = 16
    margin: Fraction = Fraction(0)
    boxes: tuple = ()
    resolutions: tuple = ()
    default_box: tuple | None = None
    max_points: int = 20_000_000

    def __post_init__(self):
        boxes = self.boxes.items() if isinstance(self.boxes, Mapping) else self.boxes
        norm = []
        for item in boxes:
            k, *rest = item
            norm.append((str(k), *_pair(rest[0] if len(rest) == 1 else rest)))
        norm = tuple(sorted(norm, key=lambda it: var_key(it[0])))
        object.__setattr__(self, "boxes", norm)
        res = self.resolutions.items() if isinstance(self.resolutions, Mapping) else self.resolutions
        object.__setattr__(self, "resolutions", tuple(sorted(((str(k), int(r)) for k, r in res),
                                                             key=lambda it: var_key(it[0]))))
        object.__setattr__(self, "margin", Fraction(self.margin))
        if self.default_box is not None:
            object.__setattr__(self, "default_box", _pair(self.default_box))
        if self.resolution < 2 or any(r < 2 for _, r in self.resolutions):
            raise ValueError("resolution must be at least 2")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")
        for name, lo, hi in self.boxes:
            if not lo < hi:
                raise ValueError(f"empty box for {name}")
        if self.default_box is not None and not self.default_box[0] < self.default_box[1]:
            raise ValueError("empty default box")

    def with_(self, **kw) -> "GridSpec":
        d = {"resolution": self.resolution, "margin": self.margin, "boxes": self.boxes,
             "resolutions": self.resolutions, "default_box": self.default_box,
             "max_points": self.max_points}
        d.update(kw)
        return GridSpec(**d)

    def box_for(self, name: str, half=None) -> tuple:
        for n, lo, hi in self.boxes:
            if n == name:
                return (lo, hi)
        if self.default_box is not None:
            return self.default_box
        if half is None:
            raise OracleError(f"no finite box for variable {name!r}")
        if isinstance(half, TowerBound):
            v = half.try_materialize()
            if v is None:
                raise OracleError(f"box of {name!r} is too large to materialize: {half}")
            half = v
        return (-Fraction(half), Fraction(half))

    def resolution_for(self, name: str) -> int:
        for n, r in self.resolutions:
            if n == name:
                return r
        return self.resolution

    def axis(self, name: str, half=None) -> list:
        lo, hi = self.box_for(name, half)
        r = self.resolution_for(name)
        return [lo + (hi - lo) * i / r for i in range(r + 1)]


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    FRAGILE = "fragile"


@dataclass(frozen=True)
class Hint:
    """A value for a bound variable computed from other variables.

    The oracle does not enumerate a hinted variable; it evaluates fn on the
    float arrays of deps (broadcast over the lattice) and uses that single
    value. Pipelines emit hints for variables fixed by their construction,
    such as flattening witnesses.
    """

    deps: tuple
    fn: Callable


@dataclass(frozen=True)
class Composite:
    """A polynomial given as outer(parts).

    Pipelines register the structure of large atoms (a squared sum of squares,
    say) so the oracle can evaluate the parts first and avoid the cancellation
    of the expanded form. parts is a tuple of (placeholder, Polynomial or Composite).
    """

    outer: Polynomial
    parts: tuple

    def expand(self) -> Polynomial:
        sub = {n: (p.expand() if isinstance(p, Composite) else p) for n, p in self.parts}
        return self.outer.substitute(sub)


# ---------------------------------------------------------------------------
# rational polynomials used inside the oracle

class _Q:
    """Polynomial with Fraction coefficients (pinned values make coefficients rational)."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict):
        self.terms = {m: c for m, c in terms.items() if c != 0}

    @staticmethod
    def of(p: Polynomial) -> "_Q":
        return _Q({m: Fraction(c) for m, c in p.items()})

    @staticmethod
    def const(c) -> "_Q":
        return _Q({(): Fraction(c)})

    @property
    def vars(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def is_constant(self) -> bool:
        return all(m == () for m in self.terms)

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def __add__(self, o: "_Q") -> "_Q":
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, 0) + c
        return _Q(out)

    def __neg__(self) -> "_Q":
        return _Q({m: -c for m, c in self.terms.items()})

    def __sub__(self, o: "_Q") -> "_Q":
        return self + (-o)

    def __mul__(self, o: "_Q") -> "_Q":
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                exps = dict(m1)
                for v, e in m2:
                    exps[v] = exps.get(v, 0) + e
                key = tuple(sorted(exps.items(), key=lambda it: var_key(it[0])))
                out[key] = out.get(key, 0) + c1 * c2
        return _Q(out)

    def scale(self, c: Fraction) -> "_Q":
        return _Q({m: c * x for m, x in self.terms.items()})

    def linear_split(self, v: str):
        """(a, rest) with self = a*v + rest and a constant, or None."""
        a = Fraction(0)
        rest: dict = {}
        for m, c in self.terms.items():
            e = dict(m).get(v, 0)
            if e == 0:
                rest[m] = c
            elif e == 1 and len(m) == 1:
                a += c
            else:
                return None
        if a == 0:
            return None
        return a, _Q(rest)

    def substitute(self, v: str, r: "_Q") -> "_Q":
        if v not in self.vars:
            return self
        out: dict = {}
        if r.is_constant():
            k = r.constant()
            for m, c in self.terms.items():
                e = dict(m).get(v, 0)
                kept = tuple((w, x) for w, x in m if w != v) if e else m
                out[kept] = out.get(kept, 0) + c * k ** e
            return _Q(out)
        powers = {0: _Q.const(1), 1: r}
        for m, c in self.terms.items():
            e = dict(m).get(v, 0)
            if e not in powers:
                acc = powers[1]
                for _ in range(e - 1):
                    acc = acc * r
                powers[e] = acc
            kept = tuple((w, k) for w, k in m if w != v)
            for key, x in (_Q({kept: c}) * powers[e]).terms.items():
                out[key] = out.get(key, 0) + x
        return _Q(out)

    def evaluate(self, point: Mapping) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            t = c
            for v, e in m:
                t *= point[v] ** e
            total += t
        return total

    def float_eval(self, env: Mapping, shape: tuple):
        """Float value and a bound on its rounding error, broadcast to shape."""
        cache: dict = {}
        val = np.zeros(shape)
        mag = np.zeros(shape)
        deg = 0
        for m, c in self.terms.items():
            term = float(c)
            d = 0
            for v, e in m:
                key = (v, e)
                if key not in cache:
                    cache[key] = np.asarray(env[v], dtype=float) ** e
                term = term * cache[key]
                d += e
            deg = max(deg, d)
            val = val + term
            mag = mag + np.abs(term)
        gamma = (len(self.terms) + deg + 4) * 2.0 ** -52
        return val, mag * gamma


# ---------------------------------------------------------------------------
# compiled matrix

@dataclass
class _AtomNode:
    q: _Q
    rel: Rel
    local: tuple = ()            # pushed-down variables
    local_universal: bool = False
    norm: Fraction = Fraction(1)  # margins are measured relative to the largest coefficient
    composite: tuple | None = None  # (outer _Q, [(placeholder, _Q or nested)])


@dataclass
class _BoolNode:
    kind: str                    # "and" | "or"
    children: list


def _compile_composite(c: Composite) -> tuple:
    parts = [(n, _compile_composite(p) if isinstance(p, Composite) else _Q.of(p)) for n, p in c.parts]
    return (_Q.of(c.outer), parts)


def _composite_vars(c: tuple) -> set:
    outer, parts = c
    names = {n for n, _ in parts}
    out = outer.vars - names
    for _, p in parts:
        out |= _composite_vars(p) if isinstance(p, tuple) else p.vars
    return out


def _compile(f, forms: Mapping | None = None):
    if isinstance(f, Atom):
        norm = max((abs(c) for _, c in f.poly.items()), default=1)
        node = _AtomNode(_Q.of(f.poly), f.rel, norm=Fraction(norm))
        if forms and f.poly in forms:
            c = forms[f.poly]
            if c.expand() != f.poly:
                raise OracleError("registered composite does not expand to its atom polynomial")
            node.composite = _compile_composite(c)
        return node
    if isinstance(f, (And, Or)):
        return _BoolNode("and" if isinstance(f, And) else "or", [_compile(c, forms) for c in f.children])
    raise TypeError(f"unexpected node in negation-free matrix: {f!r}")


def _composite_eval(c: tuple, env: Mapping, shape: tuple):
    """Float value and error bound of outer(parts), propagating the parts' errors."""
    outer, parts = c
    vals = dict(env)
    errs: dict = {}
    for name, p in parts:
        v, e = _composite_eval(p, env, shape) if isinstance(p, tuple) else p.float_eval(env, shape)
        vals[name], errs[name] = v, e
    val, err = outer.float_eval(vals, shape)
    spread = np.zeros(shape)
    for m, coef in outer.terms.items():
        if not any(v in errs for v, _ in m):
            continue
        hi = np.full(shape, abs(float(coef)))
        lo = np.full(shape, abs(float(coef)))
        for v, e in m:
            a = np.abs(np.asarray(vals[v], dtype=float))
            lo = lo * a ** e
            hi = hi * (a + errs.get(v, 0.0)) ** e
        spread = spread + (hi - lo)
    return val, err + spread * (1 + 2.0 ** -40)


def _walk_atoms(node):
    if isinstance(node, _AtomNode):
        yield node
    else:
        for c in node.children:
            yield from _walk_atoms(c)


def _substitute_node(node, v: str, r: _Q):
    if isinstance(node, _AtomNode):
        node.q = node.q.substitute(v, r)
    else:
        for c in node.children:
            _substitute_node(c, v, r)


def _box_atoms(r: _Q, lo: Fraction, hi: Fraction) -> list:
    """Atoms stating lo <= r <= hi."""
    return [_AtomNode(r - _Q.const(hi), Rel.LE), _AtomNode(_Q.const(lo) - r, Rel.LE)]


def _outside_atoms(r: _Q, lo: Fraction, hi: Fraction) -> list:
    return [_AtomNode(r - _Q.const(hi), Rel.GT), _AtomNode(_Q.const(lo) - r, Rel.GT)]


# ---------------------------------------------------------------------------
# the oracle

@dataclass
class _Prepared:
    root: object
    blocks: list                 # [(universal, [lattice vars])]
    axes: dict                   # var -> list of Fractions
    pinned: dict                 # var -> _Q over lattice vars
    hints: dict                  # var -> (Hint, box pair, universal, block index)
    local_axes: dict             # pushed var -> list of Fractions
    margin: Fraction


def _alternations(blocks) -> int:
    kinds = [b.quantifier.universal for b in blocks]
    return sum(1 for a, b in zip(kinds, kinds[1:]) if a != b)


def _prepare(s: PrenexSentence, g: GridSpec, hints: Mapping | None, keep: set,
             forms: Mapping | None = None) -> _Prepared:
    hints = dict(hints or {})
    if s.free:
        raise OracleError(f"sentence has free variables {list(s.free)}")
    for b in s.blocks:
        if b.quantifier.exotic:
            raise OracleError("expand exotic quantifiers before calling the oracle")
    if _alternations(s.blocks) > 2:
        raise OracleError("the oracle handles at most two quantifier alternations")

    block_of = {v: i for i, b in enumerate(s.blocks) for v in b.vars}
    half = {v: b.box for b in s.blocks for v in b.vars}
    universal = [b.quantifier.universal for b in s.blocks]
    for h, hint in hints.items():
        if h not in block_of:
            raise OracleError(f"hint for unknown variable {h!r}")
        for d in hint.deps:
            if d in block_of and block_of[d] > block_of[h]:
                raise OracleError(f"hint for {h!r} depends on inner variable {d!r}")

    def real_box(v):
        if half[v] is not None:
            return _pair_from_half(half[v], v)
        return g.box_for(v)

    root = _compile(push_negations(s.matrix), forms)
    if isinstance(root, _AtomNode):
        root = _BoolNode("and", [root])
    pinned: dict = {}

    # pin variables fixed by a linear equation (exists) or excluded by a linear
    # disequation (forall) at the top level of the matrix
    def try_pin(const_only: bool) -> bool:
        top = root.children
        kind = root.kind
        want = Rel.EQ if kind == "and" else Rel.NE
        for a in list(top):
            if not isinstance(a, _AtomNode) or a.rel is not want:
                continue
            for v in sorted(a.q.vars, key=var_key):
                if v in pinned or v in hints or v in keep:
                    continue
                if universal[block_of[v]] != (kind == "or"):
                    continue
                split = a.q.linear_split(v)
                if split is None:
                    continue
                coef, rest = split
                if const_only and not rest.is_constant():
                    continue
                if any(block_of[w] > block_of[v] or w in hints for w in rest.vars):
                    continue
                r = (-rest).scale(1 / coef)
                lo, hi = real_box(v)
                top.remove(a)
                _substitute_node(root, v, r)
                for w in list(pinned):
                    pinned[w] = pinned[w].substitute(v, r)
                pinned[v] = r
                top.extend(_box_atoms(r, lo, hi) if kind == "and" else _outside_atoms(r, lo, hi))
                return True
        return False

    # constants first, so chains of definitions resolve without expansion
    while True:
        if not (try_pin(True) or try_pin(False)):
            break
        if not root.children:
            root.children.append(_AtomNode(_Q.const(0), Rel.EQ if root.kind == "and" else Rel.NE))

    # push variables that occur in a single atom into that atom
    occurrences: dict = {}
    for a in _walk_atoms(root):
        for v in a.q.vars:
            occurrences.setdefault(v, []).append(a)
    hint_deps = {d for h in hints.values() for d in h.deps}
    local_axes: dict = {}
    for a in _walk_atoms(root):
        cands = []
        for v in a.q.vars:
            if v in keep or v in hints or v in pinned or v in hint_deps:
                continue
            if len(occurrences.get(v, ())) != 1:
                continue
            bi = block_of[v]
            if any(block_of.get(w, -1) > bi for w in a.q.vars):
                continue
            cands.append(v)
        if not cands:
            continue
        inner = max(block_of[v] for v in cands)
        group = sorted((v for v in cands if block_of[v] == inner), key=var_key)
        a.local = tuple(group)
        a.local_universal = universal[inner]
        for v in group:
            local_axes[v] = g.axis(v, half[v])

    blocks = []
    axes: dict = {}
    for i, b in enumerate(s.blocks):
        lat = [v for v in b.vars if v not in pinned and v not in hints and v not in local_axes]
        for v in lat:
            axes[v] = g.axis(v, half[v])
        blocks.append((b.quantifier.universal, lat))
    dims = sum(len(l) for _, l in blocks)
    if dims > 6:
        raise OracleError(f"{dims} lattice variables; the oracle handles at most 6")
    npts = math.prod(len(axes[v]) for _, l in blocks for v in l)
    biggest = max((math.prod(len(local_axes[v]) for v in a.local) for a in _walk_atoms(root)), default=1)
    if npts * biggest > g.max_points:
        raise OracleError(f"lattice of {npts * biggest} points exceeds max_points={g.max_points}")

    hint_info = {}
    for h, hint in hints.items():
        hint_info[h] = (hint, real_box(h), universal[block_of[h]], block_of[h])
    return _Prepared(root, blocks, axes, pinned, hint_info, local_axes, g.margin)


def _pair_from_half(half, name):
    if isinstance(half, TowerBound):
        v = half.try_materialize()
        if v is None:
            raise OracleError(f"box of {name!r} is too large to materialize")
        half = v
    return (-Fraction(half), Fraction(half))


class _Evaluator:
    def __init__(self, prep: _Prepared):
        self.prep = prep
        self.order = [v for _, lat in prep.blocks for v in lat]
        self.shape = tuple(len(prep.axes[v]) for v in self.order)
        self.ndim = len(self.shape)
        self.env: dict = {}
        for k, v in enumerate(self.order):
            shp = [1] * self.ndim
            shp[k] = len(prep.axes[v])
            self.env[v] = np.array([float(x) for x in prep.axes[v]]).reshape(shp)
        for v, r in prep.pinned.items():
            if r.is_constant():
                self.env[v] = float(r.constant())
            else:
                val, _ = r.float_eval(self.env, self.shape)
                self.env[v] = val
        self.hint_ok: dict = {}
        for h, (hint, (lo, hi), univ, _) in prep.hints.items():
            val = np.asarray(hint.fn({d: self.env[d] for d in hint.deps}), dtype=float)
            val = np.broadcast_to(val, np.broadcast_shapes(val.shape, (1,) * self.ndim))
            ok = np.isfinite(val) & (val >= float(lo)) & (val <= float(hi))
            self.env[h] = np.where(np.isfinite(val), val, 0.0)
            self.hint_ok[h] = (ok, univ)

    # -- atoms ------------------------------------------------------------
    def _signs(self, a: _AtomNode, thresholds: list):
        """Sign of (value - T) per threshold: -1, 0, 1, or 2 when undecidable."""
        local = a.local
        nd = self.ndim + len(local)
        shape = self.shape + tuple(len(self.prep.local_axes[v]) for v in local)
        env = {}
        names = a.q.vars | (_composite_vars(a.composite) if a.composite else set())
        for v in names:
            if v in local:
                k = self.ndim + local.index(v)
                shp = [1] * nd
                shp[k] = shape[k]
                env[v] = np.array([float(x) for x in self.prep.local_axes[v]]).reshape(shp)
            else:
                x = self.env[v]
                if isinstance(x, np.ndarray):
                    x = x.reshape(x.shape + (1,) * (nd - x.ndim))
                env[v] = x
        if a.composite is not None:
            val, err = _composite_eval(a.composite, env, shape)
        else:
            val, err = a.q.float_eval(env, shape)
        exact_ok = not any(v in self.prep.hints for v in a.q.vars)
        out = []
        for T in thresholds:
            d = val - float(T)
            sign = np.where(d > err, 1, np.where(d < -err, -1, 2)).astype(np.int8)
            if T == 0 and not np.any(err):
                sign = np.sign(d).astype(np.int8)
            unsure = np.argwhere(sign == 2)
            if len(unsure):
                if exact_ok:
                    for idx in unsure:
                        x = a.q.evaluate(self._point(idx, a)) - T
                        sign[tuple(idx)] = (x > 0) - (x < 0)
                elif T == 0 and self.prep.margin == 0:
                    sign[sign == 2] = 0
            out.append(sign)
        return out

    def _point(self, idx, a: _AtomNode) -> dict:
        pt = {}
        for v in a.q.vars:
            if v in a.local:
                pt[v] = self.prep.local_axes[v][idx[self.ndim + a.local.index(v)]]
            else:
                k = self.order.index(v)
                pt[v] = self.prep.axes[v][idx[k]]
        return pt

    def atom(self, a: _AtomNode):
        m = self.prep.margin * a.norm
        rel = a.rel
        if a.q.is_constant():
            x = a.q.constant()
            val = rel.holds(x)
            t, f = np.bool_(val), np.bool_(not val)
            return self._fold(a, t, f)
        if m == 0:
            (s0,) = self._signs(a, [Fraction(0)])
            known = s0 != 2
            tv = {
                Rel.LT: s0 < 0, Rel.LE: s0 <= 0, Rel.EQ: s0 == 0,
                Rel.NE: s0 != 0, Rel.GE: s0 >= 0, Rel.GT: s0 > 0,
            }[rel] & known
            fv = known & ~tv
            return self._fold(a, tv, fv)
        lo, hi = self._signs(a, [-m, m])
        kl, kh = lo != 2, hi != 2
        below = kl & (lo <= 0)          # value <= -m
        above = kh & (hi >= 0)          # value >= m
        outside_lo = kl & (lo > 0)      # value > -m
        inside_hi = kh & (hi < 0)       # value < m
        nonzero = below | above
        near = outside_lo & inside_hi   # |value| < m
        if rel in (Rel.LT, Rel.LE):
            tv, fv = below, above
        elif rel in (Rel.GT, Rel.GE):
            tv, fv = above, below
        elif rel is Rel.EQ:
            tv, fv = np.zeros_like(below), nonzero
        else:
            tv, fv = nonzero, np.zeros_like(below)
        del near
        return self._fold(a, tv, fv)

    def _fold(self, a: _AtomNode, t, f):
        t = np.asarray(t)
        f = np.asarray(f)
        if a.local:
            axes = tuple(range(self.ndim, self.ndim + len(a.local)))
            full = self.shape + tuple(len(self.prep.local_axes[v]) for v in a.local)
            t = np.broadcast_to(t, np.broadcast_shapes(t.shape, full) if t.ndim else full)
            f = np.broadcast_to(f, np.broadcast_shapes(f.shape, full) if f.ndim else full)
            if a.local_universal:
                t, f = t.all(axis=axes), f.any(axis=axes)
            else:
                t, f = t.any(axis=axes), f.all(axis=axes)
        return t, f

    def node(self, n):
        if isinstance(n, _AtomNode):
            return self.atom(n)
        parts = [self.node(c) for c in n.children]
        if n.kind == "and":
            t = np.logical_and.reduce([np.broadcast_to(p[0], self.shape) for p in parts])
            f = np.logical_or.reduce([np.broadcast_to(p[1], self.shape) for p in parts])
        else:
            t = np.logical_or.reduce([np.broadcast_to(p[0], self.shape) for p in parts])
            f = np.logical_and.reduce([np.broadcast_to(p[1], self.shape) for p in parts])
        return t, f

    def matrix(self):
        t, f = self.node(self.prep.root)
        t = np.broadcast_to(t, self.shape).copy()
        f = np.broadcast_to(f, self.shape).copy()
        # hinted values outside their box: the assignment does not exist
        for h, (ok, univ) in self.hint_ok.items():
            ok = np.broadcast_to(ok, self.shape)
            if univ:
                t |= ~ok
                f &= ok
            else:
                t &= ok
                f |= ~ok
        return t, f


def _reduce(t, f, blocks, upto: int, ndim: int):
    """Eliminate the lattice axes of blocks[upto:], innermost first."""
    pos = ndim
    for universal, lat in reversed(blocks[upto:]):
        k = len(lat)
        if not k:
            continue
        axes = tuple(range(pos - k, pos))
        if universal:
            t, f = t.all(axis=axes), f.any(axis=axes)
        else:
            t, f = t.any(axis=axes), f.all(axis=axes)
        pos -= k
    return t, f


def oracle_decide(s: PrenexSentence, g: GridSpec, hints: Mapping | None = None,
                  forms: Mapping | None = None) -> Verdict:
    """Truth of a boxed sentence evaluated over the lattice of g.

    FRAGILE means some atom is within g.margin of flipping (or could not be
    decided exactly), so the lattice verdict is not trusted.
    """
    prep = _prepare(s, g, hints, set(), forms)
    ev = _Evaluator(prep)
    t, f = ev.matrix()
    t, f = _reduce(t, f, prep.blocks, 0, ev.ndim)
    if bool(t):
        return Verdict.TRUE
    if bool(f):
        return Verdict.FALSE
    return Verdict.FRAGILE


@dataclass
class CounterexampleSet:
    """Lattice points of the leading universal block with no witness."""

    vars: tuple
    axes: tuple
    false: np.ndarray            # certainly a counterexample
    unsure: np.ndarray

    @property
    def count(self) -> int:
        return int(self.false.sum())

    def points(self) -> list:
        return [tuple(self.axes[k][i] for k, i in enumerate(idx)) for idx in np.argwhere(self.false)]

    def longest_run(self) -> int:
        """Most consecutive counterexample lattice points along any axis."""
        best = 0
        m = self.false
        for ax in range(m.ndim):
            moved = np.moveaxis(m, ax, -1).reshape(-1, m.shape[ax])
            for row in moved:
                run = 0
                for x in row:
                    run = run + 1 if x else 0
                    best = max(best, run)
        return best

    def isolated(self) -> int:
        """Counterexample points with no counterexample neighbour along any axis."""
        m = self.false
        nb = np.zeros_like(m)
        for ax in range(m.ndim):
            shifted = np.zeros_like(m)
            sl_a = [slice(None)] * m.ndim
            sl_b = [slice(None)] * m.ndim
            sl_a[ax], sl_b[ax] = slice(1, None), slice(None, -1)
            shifted[tuple(sl_a)] |= m[tuple(sl_b)]
            shifted[tuple(sl_b)] |= m[tuple(sl_a)]
            nb |= shifted
        return int((m & ~nb).sum())


def counterexample_lattice(s: PrenexSentence, g: GridSpec, hints: Mapping | None = None,
                           forms: Mapping | None = None) -> CounterexampleSet:
    """Counterexamples of a sentence whose first block is universal, on the lattice."""
    if not s.blocks or not s.blocks[0].quantifier.universal:
        raise PreconditionError("counterexamples need a leading universal block")
    keep = set(s.blocks[0].vars)
    prep = _prepare(s, g, hints, keep, forms)
    if prep.blocks[0][1] != [v for v in s.blocks[0].vars if v in prep.axes]:
        raise OracleError("leading block variables must be enumerated")
    ev = _Evaluator(prep)
    t, f = ev.matrix()
    t, f = _reduce(t, f, prep.blocks, 1, ev.ndim)
    lat = prep.blocks[0][1]
    return CounterexampleSet(tuple(lat), tuple(prep.axes[v] for v in lat), np.asarray(f), np.asarray(~t & ~f))


# ---------------------------------------------------------------------------
# sampling

@dataclass(frozen=True)
class PointCloud:
    ambient_dim: int
    points: tuple
    tolerance: Fraction
    warning: str | None = None

    def __post_init__(self):
        pts = tuple(tuple(Fraction(x) for x in p) for p in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "tolerance", Fraction(self.tolerance))
        if any(len(p) != self.ambient_dim for p in pts):
            raise DimensionMismatchError("point with the wrong number of coordinates")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")

    def __len__(self) -> int:
        return len(self.points)

    def array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, self.ambient_dim))
        return np.array([[float(x) for x in p] for p in self.points])

    @staticmethod
    def from_array(arr, tolerance, warning: str | None = None) -> "PointCloud":
        arr = np.asarray(arr, dtype=float)
        pts = [tuple(Fraction(float(x)) for x in row) for row in arr]
        return PointCloud(arr.shape[1], tuple(pts), tolerance, warning)


def _split_clauses(f) -> list:
    """DNF clauses as (equations, other atoms)."""
    from .normalize import to_dnf
    g = to_dnf(push_negations(f))
    clauses = g.children if isinstance(g, Or) else (g,)
    out = []
    for c in clauses:
        atoms = c.children if isinstance(c, And) else (c,)
        eqs = [a for a in atoms if a.rel is Rel.EQ]
        rest = [a for a in atoms if a.rel is not Rel.EQ]
        out.append((eqs, rest))
    return out


def _grid_env(coords, los, h, counts, offset):
    env = {}
    nd = len(coords)
    for k, v in enumerate(coords):
        shp = [1] * nd
        shp[k] = counts[k]
        env[v] = (float(los[k]) + (np.arange(counts[k]) + offset) * float(h[k])).reshape(shp)
    return env


def _holds_float(atoms, pts: np.ndarray, coords) -> np.ndarray:
    env = {v: pts[:, k] for k, v in enumerate(coords)}
    ok = np.ones(len(pts), dtype=bool)
    for a in atoms:
        val, _ = _Q.of(a.poly).float_eval(env, (len(pts),))
        ok &= {
            Rel.LT: val < 0, Rel.LE: val <= 0, Rel.GT: val > 0, Rel.GE: val >= 0,
            Rel.NE: val != 0, Rel.EQ: val == 0,
        }[a.rel]
    return ok


def sample_set(S: SemiAlgebraicSet, g: GridSpec, bisect_steps: int = 40) -> PointCloud:
    """Point cloud for a set of dimension at most 3.

    Full-dimensional clauses contribute every cell center that satisfies the
    clause exactly. Clauses with equations contribute the roots found by
    bisection along the diagonals (then the edges) of cells whose corners
    show a sign change of the first equation. A coordinate pinned by a linear
    equation in that coordinate alone is set exactly and leaves the lattice.
    """
    n = S.ambient_dim
    if n > 3:
        raise PreconditionError("sampling supports ambient dimension at most 3")
    if S.hidden:
        raise PreconditionError("sampling needs a set without projected variables")
    chunks = []
    tol = Fraction(0)
    for eqs, rest in _split_clauses(S.defining):
        pts, t = _sample_clause(S.coords, eqs, rest, g, bisect_steps)
        if len(pts):
            chunks.append(pts)
        tol = max(tol, t)
    if not chunks:
        hmax = max((g.box_for(v)[1] - g.box_for(v)[0]) / g.resolution_for(v) for v in S.coords)
        return PointCloud(n, (), tol or hmax, "empty sample; the set may be empty or lower-dimensional and missed")
    arr = np.unique(np.vstack(chunks), axis=0)
    return PointCloud.from_array(arr, tol)


def _pinned(a: Atom):
    """(name, value) when the equation is c*v + d = 0."""
    p = a.poly
    if p.total_degree() != 1 or len(p.vars) != 1:
        return None
    v = p.vars[0]
    c = p.terms.get(((v, 1),), 0)
    return v, Fraction(-p.terms.get((), 0), c)


def _pin(p: Polynomial, v: str, x: Fraction) -> Polynomial:
    """b^d * p(v = a/b), d the degree in v: integer coefficients, same sign."""
    d = p.degree_in(v)
    a, b = x.numerator, x.denominator
    out: dict = {}
    for m, c in p.items():
        e = dict(m).get(v, 0)
        rest = tuple(t for t in m if t[0] != v)
        out[rest] = out.get(rest, 0) + c * a ** e * b ** (d - e)
    return Polynomial(out)


_REL_TEST = {Rel.LT: lambda x: x < 0, Rel.LE: lambda x: x <= 0, Rel.GT: lambda x: x > 0,
             Rel.GE: lambda x: x >= 0, Rel.NE: lambda x: x != 0, Rel.EQ: lambda x: x == 0}


def _sample_clause(coords, eqs, rest, g: GridSpec, steps: int) -> tuple:
    pins: dict = {}
    for e in eqs:
        pv = _pinned(e)
        if pv is None:
            continue
        v, x = pv
        if pins.get(v, x) != x:
            return np.zeros((0, len(coords))), Fraction(0)
        pins[v] = x
    if pins:
        for v, x in pins.items():
            lo, hi = g.box_for(v)
            if not lo <= x <= hi:
                return np.zeros((0, len(coords))), Fraction(0)
        eqs2, rest2 = [], []
        for a in [e for e in eqs if _pinned(e) is None] + list(rest):
            p = a.poly
            for v, x in pins.items():
                if p.degree_in(v):
                    p = _pin(p, v, x)
            if p.is_constant():
                if not _REL_TEST[a.rel](p.constant_value()):
                    return np.zeros((0, len(coords))), Fraction(0)
                continue
            (eqs2 if a.rel is Rel.EQ else rest2).append(Atom(p, a.rel))
        free = tuple(v for v in coords if v not in pins)
        if free:
            sub, tol = _sample_clause(free, eqs2, rest2, g, steps)
        else:
            sub, tol = np.zeros((1, 0)), Fraction(0)
        out = np.zeros((len(sub), len(coords)))
        for k, v in enumerate(coords):
            out[:, k] = float(pins[v]) if v in pins else sub[:, free.index(v)]
        return out, tol
    n = len(coords)
    boxes = [g.box_for(v) for v in coords]
    res = [g.resolution_for(v) for v in coords]
    los = [b[0] for b in boxes]
    h = [(b[1] - b[0]) / r for b, r in zip(boxes, res)]
    hmax = max(h)
    if not eqs:
        return _cell_centers(coords, rest, los, h, res), hmax * Fraction(math.isqrt(n * 10**8) + 1, 10**4) / 2
    return (_curve_points(coords, eqs, rest, los, h, res, steps),
            hmax * Fraction(math.isqrt(n * 10**8) + 1, 10**4))


def _cell_centers(coords, atoms, los, h, res) -> np.ndarray:
    """Centers satisfying the conjunction of atoms, decided exactly where floats are unsure."""
    nd = len(coords)
    counts = res
    env = _grid_env(coords, los, h, counts, 0.5)
    shape = tuple(counts)
    ok = np.ones(shape, dtype=bool)
    for a in atoms:
        q = _Q.of(a.poly)
        val, err = q.float_eval(env, shape)
        sign = np.where(val > err, 1, np.where(val < -err, -1, 2)).astype(np.int8)
        for idx in np.argwhere(sign == 2):
            pt = {v: los[k] + (int(idx[k]) + Fraction(1, 2)) * h[k] for k, v in enumerate(coords)}
            x = q.evaluate(pt)
            sign[tuple(idx)] = (x > 0) - (x < 0)
        ok &= {
            Rel.LT: sign < 0, Rel.LE: sign <= 0, Rel.GT: sign > 0, Rel.GE: sign >= 0,
            Rel.NE: sign != 0,
        }[a.rel]
    idx = np.argwhere(ok)
    if not len(idx):
        return np.zeros((0, nd))
    return np.array([[float(los[k] + (int(i[k]) + Fraction(1, 2)) * h[k]) for k in range(nd)] for i in idx])


def _curve_points(coords, eqs, rest, los, h, res, steps) -> np.ndarray:
    nd = len(coords)
    counts = [r + 1 for r in res]
    env = _grid_env(coords, los, h, counts, 0.0)
    q = _Q.of(eqs[0].poly)
    shape = tuple(counts)
    val, _ = q.float_eval(env, shape)
    sgn = np.sign(val)
    corners = [tuple(c) for c in np.ndindex(*(2,) * nd)]
    # corner sign arrays per cell
    cells = tuple(r for r in res)

    def corner(c):
        sl = tuple(slice(c[k], c[k] + cells[k]) for k in range(nd))
        return sgn[sl]

    csigns = {c: corner(c) for c in corners}
    found = []
    # exact zeros at lattice points
    zi = np.argwhere(val == 0)
    if len(zi):
        found.append(np.array([[float(los[k]) + int(i[k]) * float(h[k]) for k in range(nd)] for i in zi]))
    diagonals = [(c, tuple(1 - x for x in c)) for c in corners if c[0] == 0]
    edges = [(c, tuple(c[j] if j != k else 1 for j in range(nd)))
             for c in corners for k in range(nd) if c[k] == 0]
    pos = np.ones(cells, dtype=bool)
    hit_diag = np.zeros(cells, dtype=bool)
    for group in (diagonals, edges):
        for c0, c1 in group:
            mask = (csigns[c0] * csigns[c1]) < 0
            if group is edges:
                mask &= ~hit_diag
            else:
                hit_diag |= mask
            idx = np.argwhere(mask & pos)
            if not len(idx):
                continue
            base = np.array([[float(los[k]) + int(i[k]) * float(h[k]) for k in range(nd)] for i in idx])
            p0 = base + np.array(c0, dtype=float) * np.array([float(x) for x in h])
            p1 = base + np.array(c1, dtype=float) * np.array([float(x) for x in h])
            found.append(_bisect(q, coords, p0, p1, steps))
    if not found:
        return np.zeros((0, nd))
    pts = np.vstack(found)
    keep = np.ones(len(pts), dtype=bool)
    for e in eqs[1:]:
        env2 = {v: pts[:, k] for k, v in enumerate(coords)}
        v2, _ = _Q.of(e.poly).float_eval(env2, (len(pts),))
        keep &= np.abs(v2) <= 1e-6 * (1 + np.abs(v2).max())
    if rest:
        keep &= _holds_float(rest, pts, coords)
    return pts[keep]


def _bisect(q: _Q, coords, p0: np.ndarray, p1: np.ndarray, steps: int) -> np.ndarray:
    def value(p):
        env = {v: p[:, k] for k, v in enumerate(coords)}
        return q.float_eval(env, (len(p),))[0]

    s0 = np.sign(value(p0))
    for _ in range(steps):
        mid = (p0 + p1) / 2
        sm = np.sign(value(mid))
        left = sm == s0
        p0 = np.where(left[:, None], mid, p0)
        p1 = np.where(left[:, None], p1, mid)
    return (p0 + p1) / 2


# ---------------------------------------------------------------------------
# distances

@dataclass(frozen=True)
class DistanceResult:
    distance: float
    error: float
    witness: tuple | None = None     # (p, q) realizing the maximum, as float tuples

    def __iter__(self):
        return iter((self.distance, self.error))


def directed_hausdorff(P: PointCloud, Q: PointCloud) -> DistanceResult:
    """max over p in P of the distance to the nearest q in Q, with additive error bound."""
    if P.ambient_dim != Q.ambient_dim:
        raise DimensionMismatchError("clouds live in different dimensions")
    if not len(P) or not len(Q):
        raise PreconditionError("directed Hausdorff distance of an empty cloud")
    a, b = P.array(), Q.array()
    tree = cKDTree(b)
    d, j = tree.query(a, k=1)
    dmax = float(d.max())
    # ties broken by lexicographic order of the points of P
    cand = np.flatnonzero(d == dmax)
    i = min(cand, key=lambda k: P.points[k])
    err = float(P.tolerance + Q.tolerance)
    if dmax == 0.0:
        qs = set(Q.points)
        missing = [p for p in P.points if p not in qs]
        if missing:
            best = 0.0
            for p in missing:
                dd = min(sum((x - y) ** 2 for x, y in zip(p, qq)) for qq in Q.points)
                best = max(best, math.sqrt(dd))
            dmax = best
    # float rounding of the coordinates and the distance itself
    scale = float(np.abs(a).max(initial=0) + np.abs(b).max(initial=0))
    err += 8 * np.finfo(float).eps * (scale + dmax)
    return DistanceResult(dmax, float(err), (tuple(float(x) for x in a[i]), tuple(float(x) for x in b[j[i]])))


def hausdorff(P: PointCloud, Q: PointCloud) -> DistanceResult:
    """max of both directed distances; the witness comes from the larger direction."""
    ab = directed_hausdorff(P, Q)
    ba = directed_hausdorff(Q, P)
    if ab.distance >= ba.distance:
        return ab
    w = ba.witness
    return DistanceResult(ba.distance, ba.error, (w[1], w[0]) if w else None)


# ---------------------------------------------------------------------------
# Newton refinement of an extremal pair

@dataclass(frozen=True)
class RefinedPair:
    a: tuple
    b: tuple
    distance: float
    residual: float
    converged: bool
    iterations: int


def refine_extremal_pair(fA: Polynomial, fB: Polynomial, seed_a, seed_b, coords=None,
                         tol: float = 1e-10, max_iter: int = 100) -> RefinedPair:
    """Damped Newton on f(a) = 0, g(b) = 0, a - b = l grad f(a), a - b = m grad g(b).

    The last two conditions say the segment ab is orthogonal to both level
    sets. On divergence (or a degenerate pair with a = b) the seed pair is
    returned with converged = False.
    """
    if coords is None:
        coords = sorted(set(fA.vars) | set(fB.vars), key=var_key)
    coords = list(coords)
    n = len(coords)
    a0 = np.array(seed_a, dtype=float)
    b0 = np.array(seed_b, dtype=float)
    if a0.shape != (n,) or b0.shape != (n,):
        raise DimensionMismatchError("seed points do not match the coordinates")
    qa, qb = _Q.of(fA), _Q.of(fB)
    grad_a = [_Q.of(fA.derivative(v)) for v in coords]
    grad_b = [_Q.of(fB.derivative(v)) for v in coords]
    hess_a = [[_Q.of(fA.derivative(v).derivative(w)) for w in coords] for v in coords]
    hess_b = [[_Q.of(fB.derivative(v).derivative(w)) for w in coords] for v in coords]

    def ev(q, x):
        return float(q.float_eval({v: x[k] for k, v in enumerate(coords)}, ())[0])

    def system(z):
        a, b, l, m = z[:n], z[n:2 * n], z[2 * n], z[2 * n + 1]
        ga = np.array([ev(q, a) for q in grad_a])
        gb = np.array([ev(q, b) for q in grad_b])
        F = np.concatenate([[ev(qa, a), ev(qb, b)], a - b - l * ga, a - b - m * gb])
        J = np.zeros((2 * n + 2, 2 * n + 2))
        J[0, :n] = ga
        J[1, n:2 * n] = gb
        Ha = np.array([[ev(hess_a[i][j], a) for j in range(n)] for i in range(n)])
        Hb = np.array([[ev(hess_b[i][j], b) for j in range(n)] for i in range(n)])
        eye = np.eye(n)
        J[2:2 + n, :n] = eye - l * Ha
        J[2:2 + n, n:2 * n] = -eye
        J[2:2 + n, 2 * n] = -ga
        J[2 + n:, :n] = eye
        J[2 + n:, n:2 * n] = -eye - m * Hb
        J[2 + n:, 2 * n + 1] = -gb
        return F, J

    d = a0 - b0
    ga0 = np.array([ev(q, a0) for q in grad_a])
    gb0 = np.array([ev(q, b0) for q in grad_b])
    l0 = float(d @ ga0 / (ga0 @ ga0)) if ga0 @ ga0 > 0 else 0.0
    m0 = float(d @ gb0 / (gb0 @ gb0)) if gb0 @ gb0 > 0 else 0.0
    z = np.concatenate([a0, b0, [l0, m0]])
    F, J = system(z)
    res = float(np.linalg.norm(F))
    it = 0
    for it in range(1, max_iter + 1):
        if res < tol:
            break
        try:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        t = 1.0
        while t > 1e-6:
            z2 = z + t * step
            F2, J2 = system(z2)
            r2 = float(np.linalg.norm(F2))
            if r2 < res or r2 < tol:
                break
            t /= 2
        else:
            break
        z, F, J, res = z2, F2, J2, r2
    a, b = z[:n], z[n:2 * n]
    dist = float(np.linalg.norm(a - b))
    converged = res < tol and dist > 1e-12
    if not converged:
        return RefinedPair(tuple(map(float, a0)), tuple(map(float, b0)), float(np.linalg.norm(a0 - b0)), res, False, it)
    return RefinedPair(tuple(map(float, a)), tuple(map(float, b)), dist, res, True, it)
