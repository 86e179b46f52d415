"""Formula AST, parser, printer and the symbol-count length measure."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Union

from .algebra import Polynomial, TowerBound, materialize_budget, var_key
from .errors import NotNormalizedError, ParseError, PreconditionError, DimensionMismatchError


class Rel(enum.Enum):
    LT = "<"
    LE = "<="
    EQ = "="
    NE = "!="
    GE = ">="
    GT = ">"

    def holds(self, value) -> bool:
        if self is Rel.LT:
            return value < 0
        if self is Rel.LE:
            return value <= 0
        if self is Rel.EQ:
            return value == 0
        if self is Rel.NE:
            return value != 0
        if self is Rel.GE:
            return value >= 0
        return value > 0

    def complement(self) -> "Rel":
        return _COMPLEMENT[self]

    def mirror(self) -> "Rel":
        """Relation r' with (P r 0) iff (-P r' 0)."""
        return _MIRROR[self]

    @property
    def strict(self) -> bool:
        return self in (Rel.LT, Rel.GT, Rel.NE)


_COMPLEMENT = {Rel.LT: Rel.GE, Rel.LE: Rel.GT, Rel.EQ: Rel.NE, Rel.NE: Rel.EQ, Rel.GE: Rel.LT, Rel.GT: Rel.LE}
_MIRROR = {Rel.LT: Rel.GT, Rel.LE: Rel.GE, Rel.EQ: Rel.EQ, Rel.NE: Rel.NE, Rel.GE: Rel.LE, Rel.GT: Rel.LT}


class Quantifier(enum.Enum):
    FORALL = "forall"
    EXISTS = "exists"
    FORALL_STAR = "forall*"
    EXISTS_STAR = "exists*"

    @property
    def exotic(self) -> bool:
        return self in (Quantifier.FORALL_STAR, Quantifier.EXISTS_STAR)

    @property
    def universal(self) -> bool:
        return self in (Quantifier.FORALL, Quantifier.FORALL_STAR)

    def dual(self) -> "Quantifier":
        return {
            Quantifier.FORALL: Quantifier.EXISTS,
            Quantifier.EXISTS: Quantifier.FORALL,
            Quantifier.FORALL_STAR: Quantifier.EXISTS_STAR,
            Quantifier.EXISTS_STAR: Quantifier.FORALL_STAR,
        }[self]


@dataclass(frozen=True)
class Atom:
    poly: Polynomial
    rel: Rel


@dataclass(frozen=True)
class And:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("And needs at least one child")


@dataclass(frozen=True)
class Or:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("Or needs at least one child")


@dataclass(frozen=True)
class Not:
    child: object


Box = Union[Fraction, TowerBound, None]


def normalize_box(box) -> Box:
    """Boxes are [-c, c]; c is kept as a Fraction whenever it fits the materialization budget."""
    if box is None:
        return None
    if isinstance(box, TowerBound):
        v = box.try_materialize()
        return Fraction(v) if v is not None else box
    c = Fraction(box)
    if c <= 0:
        raise ValueError("box half-width must be positive")
    return c


@dataclass(frozen=True)
class QuantifierBlock:
    quantifier: Quantifier
    vars: tuple
    box: Box = None

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if not self.vars:
            raise ValueError("a quantifier block needs at least one variable")
        if len(set(self.vars)) != len(self.vars):
            raise ValueError(f"repeated variable in block {self.vars}")
        object.__setattr__(self, "box", normalize_box(self.box))

    def with_vars(self, names) -> "QuantifierBlock":
        return QuantifierBlock(self.quantifier, tuple(names), self.box)


@dataclass(frozen=True)
class Quantified:
    """A quantifier block applied to a sub-formula (used before prenexing)."""

    block: QuantifierBlock
    body: object


Formula = Union[Atom, And, Or, Not, Quantified]


@dataclass(frozen=True)
class PrenexSentence:
    blocks: tuple
    matrix: object
    free: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "free", tuple(self.free))
        seen: set = set(self.free)
        for b in self.blocks:
            for v in b.vars:
                if v in seen:
                    raise ValueError(f"variable {v!r} bound twice")
                seen.add(v)
        if not is_quantifier_free(self.matrix):
            raise ValueError("prenex matrix must be quantifier-free")
        missing = formula_vars(self.matrix) - seen
        if missing:
            raise ValueError(f"unbound variables {sorted(missing, key=var_key)}")

    @property
    def bound_vars(self) -> tuple:
        return tuple(v for b in self.blocks for v in b.vars)


@dataclass(frozen=True)
class SemiAlgebraicSet:
    """{x : exists hidden . defining(x, hidden)}; hidden is empty for plain sets."""

    coords: tuple
    defining: object
    hidden: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if not self.coords:
            raise ValueError("ambient dimension must be positive")
        if len(set(self.coords + self.hidden)) != len(self.coords) + len(self.hidden):
            raise ValueError("repeated coordinate name")
        if not is_quantifier_free(self.defining):
            raise ValueError("defining formula must be quantifier-free")
        extra = formula_vars(self.defining) - set(self.coords) - set(self.hidden)
        if extra:
            raise ValueError(f"defining formula uses non-coordinate variables {sorted(extra)}")

    @property
    def ambient_dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class HausdorffInstance:
    A: SemiAlgebraicSet
    B: SemiAlgebraicSet
    t: Fraction
    directed: bool = True
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "t", Fraction(self.t))
        if self.A.ambient_dim != self.B.ambient_dim:
            raise DimensionMismatchError(
                f"ambient dimensions differ: {self.A.ambient_dim} vs {self.B.ambient_dim}")
        if self.t < 0:
            raise ValueError("threshold must be non-negative")

    @property
    def n(self) -> int:
        return self.A.ambient_dim


# ---------------------------------------------------------------------------
# traversal helpers

def atom(poly: Polynomial | int, rel: Rel | str) -> Atom:
    if isinstance(poly, int):
        poly = Polynomial.const(poly)
    return Atom(poly, rel if isinstance(rel, Rel) else Rel(rel))


def conj(*parts) -> object:
    flat: list = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.children)
        else:
            flat.append(p)
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts) -> object:
    flat: list = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.children)
        else:
            flat.append(p)
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def iter_atoms(f) -> Iterable[Atom]:
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            yield g
        elif isinstance(g, (And, Or)):
            stack.extend(reversed(g.children))
        elif isinstance(g, Not):
            stack.append(g.child)
        elif isinstance(g, Quantified):
            stack.append(g.body)
        elif isinstance(g, PrenexSentence):
            stack.append(g.matrix)
        else:
            raise TypeError(f"not a formula: {g!r}")


def formula_vars(f) -> set:
    """Variables occurring in atoms (bound or free)."""
    out: set = set()
    for a in iter_atoms(f):
        out.update(a.poly.vars)
    return out


def free_vars(f) -> set:
    if isinstance(f, PrenexSentence):
        return formula_vars(f.matrix) - set(f.bound_vars)
    if isinstance(f, Atom):
        return set(f.poly.vars)
    if isinstance(f, (And, Or)):
        out: set = set()
        for c in f.children:
            out |= free_vars(c)
        return out
    if isinstance(f, Not):
        return free_vars(f.child)
    if isinstance(f, Quantified):
        return free_vars(f.body) - set(f.block.vars)
    raise TypeError(f"not a formula: {f!r}")


def all_names(f) -> set:
    """Every variable name used anywhere, including quantified names with no occurrence."""
    out = formula_vars(f)
    if isinstance(f, PrenexSentence):
        out.update(f.bound_vars)
        out.update(f.free)
        return out
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Quantified):
            out.update(g.block.vars)
            stack.append(g.body)
        elif isinstance(g, (And, Or)):
            stack.extend(g.children)
        elif isinstance(g, Not):
            stack.append(g.child)
    return out


def is_quantifier_free(f) -> bool:
    if isinstance(f, Atom):
        return True
    if isinstance(f, (And, Or)):
        return all(is_quantifier_free(c) for c in f.children)
    if isinstance(f, Not):
        return is_quantifier_free(f.child)
    if isinstance(f, Quantified):
        return False
    if isinstance(f, PrenexSentence):
        return not f.blocks and is_quantifier_free(f.matrix)
    raise TypeError(f"not a formula: {f!r}")


def contains_not(f) -> bool:
    if isinstance(f, Atom):
        return False
    if isinstance(f, (And, Or)):
        return any(contains_not(c) for c in f.children)
    if isinstance(f, Not):
        return True
    if isinstance(f, Quantified):
        return contains_not(f.body)
    if isinstance(f, PrenexSentence):
        return contains_not(f.matrix)
    raise TypeError(f"not a formula: {f!r}")


def map_atoms(f, fn: Callable[[Atom], object]):
    """Rebuild f with each atom replaced by fn(atom) (which may be any formula)."""
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, And):
        return And(tuple(map_atoms(c, fn) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(map_atoms(c, fn) for c in f.children))
    if isinstance(f, Not):
        return Not(map_atoms(f.child, fn))
    if isinstance(f, Quantified):
        return Quantified(f.block, map_atoms(f.body, fn))
    raise TypeError(f"not a formula: {f!r}")


def substitute_formula(f, mapping: dict):
    """Substitute polynomials for variables in every atom."""
    return map_atoms(f, lambda a: Atom(a.poly.substitute(mapping), a.rel))


def rename_formula(f, mapping: dict):
    if isinstance(f, PrenexSentence):
        blocks = tuple(b.with_vars(mapping.get(v, v) for v in b.vars) for b in f.blocks)
        return PrenexSentence(blocks, rename_formula(f.matrix, mapping), tuple(mapping.get(v, v) for v in f.free))
    if isinstance(f, Quantified):
        return Quantified(f.block.with_vars(mapping.get(v, v) for v in f.block.vars), rename_formula(f.body, mapping))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(rename_formula(c, mapping) for c in f.children))
    if isinstance(f, Not):
        return Not(rename_formula(f.child, mapping))
    return Atom(f.poly.rename(mapping), f.rel)


def max_degree(f) -> int:
    return max((a.poly.total_degree() for a in iter_atoms(f)), default=0)


def count_atoms(f) -> int:
    return sum(1 for _ in iter_atoms(f))


class FreshNames:
    """Deterministic fresh variable names with the reserved prefix "_t".

    Each generator carries its own counter and the set of names to avoid.
    """

    def __init__(self, avoid: Iterable[str] = (), prefix: str = "_t"):
        self.used = set(avoid)
        self.prefix = prefix
        self.counters: dict = {}

    def new(self, tag: str = "") -> str:
        i = self.counters.get(tag, 0)
        while True:
            name = f"{self.prefix}{tag}{i}"
            i += 1
            if name not in self.used:
                break
        self.counters[tag] = i
        self.used.add(name)
        return name

    def many(self, tag: str, count: int) -> list:
        return [self.new(tag) for _ in range(count)]

    def reserve(self, names: Iterable[str]) -> None:
        self.used.update(names)


# ---------------------------------------------------------------------------
# classification

class FormulaClass(enum.Enum):
    QFF = "QFF"
    QFF_STRICT = "QFF_strict"
    QFF_NONSTRICT = "QFF_nonstrict"


def classify(f) -> FormulaClass:
    if not is_quantifier_free(f):
        raise PreconditionError("classify expects a quantifier-free formula")
    if contains_not(f):
        return FormulaClass.QFF
    rels = {a.rel for a in iter_atoms(f)}
    if all(r.strict for r in rels):
        return FormulaClass.QFF_STRICT
    if all(not r.strict for r in rels):
        return FormulaClass.QFF_NONSTRICT
    return FormulaClass.QFF


def is_forall_strict(s: PrenexSentence) -> bool:
    if contains_not(s.matrix):
        raise NotNormalizedError("matrix contains a negation")
    universal = {v for b in s.blocks if b.quantifier.universal for v in b.vars}
    for a in iter_atoms(s.matrix):
        if universal.intersection(a.poly.vars) and not a.rel.strict:
            return False
    return True


# ---------------------------------------------------------------------------
# length measure

def _var_cost(k: int) -> int:
    return max(1, math.ceil(math.log2(k + 1)))


def poly_length(p: Polynomial, k: int) -> int:
    if p.is_zero():
        return 1
    vc = _var_cost(k)
    total = 0
    terms = p.sorted_terms()
    for m, c in terms:
        total += abs(c).bit_length()
        total += vc * sum(e for _, e in m)
    total += len(terms) - 1
    if terms[0][1] < 0:
        total += 1
    return total


def _rational_cost(c: Fraction) -> int:
    cost = abs(c.numerator).bit_length() or 1
    if c.denominator != 1:
        cost += 1 + c.denominator.bit_length()
    return cost


def _tower_cost(t: TowerBound) -> int:
    if t.op == "lit":
        return t.args[0].bit_length()
    return 1 + sum(_tower_cost(a) for a in t.args)


def _box_cost(box: Box) -> int:
    if box is None:
        return 0
    end = _tower_cost(box) if isinstance(box, TowerBound) else _rational_cost(box)
    return 2 + 2 * end


def _length(f, k: int) -> int:
    if isinstance(f, Atom):
        return poly_length(f.poly, k) + 2
    if isinstance(f, (And, Or)):
        return sum(_length(c, k) for c in f.children) + len(f.children) - 1 + 2
    if isinstance(f, Not):
        return 1 + _length(f.child, k)
    if isinstance(f, Quantified):
        return _block_length(f.block, k) + _length(f.body, k)
    raise TypeError(f"not a formula: {f!r}")


def _block_length(b: QuantifierBlock, k: int) -> int:
    return 1 + _var_cost(k) * len(b.vars) + _box_cost(b.box)


def formula_length(f) -> int:
    """Symbol count: fixed symbols 1, coefficients in binary, exponents in unary,
    each variable occurrence ceil(log2(k+1)) for k distinct variables."""
    k = len(all_names(f))
    if isinstance(f, PrenexSentence):
        return sum(_block_length(b, k) for b in f.blocks) + _length(f.matrix, k)
    return _length(f, k)


# ---------------------------------------------------------------------------
# printer

def format_rational(c: Fraction) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_box(box: Box) -> str:
    if isinstance(box, TowerBound):
        return f"[-{box}, {box}]"
    return f"[-{format_rational(box)}, {format_rational(box)}]"


def format_block(b: QuantifierBlock) -> str:
    text = f"{b.quantifier.value} {', '.join(b.vars)}"
    if b.box is not None:
        text += f" in {format_box(b.box)}"
    return text


def print_formula(f) -> str:
    if isinstance(f, PrenexSentence):
        if not f.blocks:
            return _print(f.matrix, top=True)
        prefix = " . ".join(format_block(b) for b in f.blocks)
        return f"{prefix} : {_print(f.matrix, top=True)}"
    return _print(f, top=True)


def _print(f, top: bool = False) -> str:
    if isinstance(f, Atom):
        return f"{f.poly} {f.rel.value} 0"
    if isinstance(f, And):
        return " & ".join(_child(c) for c in f.children)
    if isinstance(f, Or):
        return " | ".join(_child(c) for c in f.children)
    if isinstance(f, Not):
        return f"!({_print(f.child)})"
    if isinstance(f, Quantified):
        body = f"{format_block(f.block)} : {_print(f.body, top=True)}"
        return body if top else f"({body})"
    raise TypeError(f"not a formula: {f!r}")


def _child(c) -> str:
    if isinstance(c, Not):
        return _print(c)
    return f"({_print(c, top=True)})"


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<kw>(?:forall|exists)\*?)(?![A-Za-z0-9_])
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|->|<|>|=|\+|-|\*|\^|/|\(|\)|\[|\]|,|\.|:|!|&|\|)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"in"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        for i, ch in enumerate(chunk):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Backtrack(Exception):
    pass


class _Parser:
    def __init__(self, text: str, allow_reserved: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.allow_reserved = allow_reserved

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "kw") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in _KEYWORDS:
            raise self.error(f"expected a variable name, found {t.text or 'end of input'!r}")
        if t.text.startswith("_") and not self.allow_reserved:
            raise self.error(f"variable names starting with '_' are reserved: {t.text!r}")
        self.i += 1
        return t.text

    # sentence := block* ":" formula | formula
    def sentence(self):
        blocks = []
        while self.tok.kind == "kw":
            blocks.append(self.block())
            self.accept(".")
        if blocks:
            self.expect(":")
        body = self.formula()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return blocks, body

    def block(self) -> tuple:
        kw = self.tok
        self.i += 1
        q = Quantifier(kw.text)
        names = [self.ident()]
        while self.accept(","):
            names.append(self.ident())
        if len(set(names)) != len(names):
            raise self.error("duplicate quantified variable", kw)
        box = None
        if self.tok.kind == "ident" and self.tok.text == "in":
            self.i += 1
            box = self.box()
        return QuantifierBlock(q, tuple(names), box), kw

    def box(self):
        start = self.tok
        self.expect("[")
        lo = self.endpoint()
        self.expect(",")
        hi = self.endpoint()
        self.expect("]")
        lo_neg, lo_val = lo
        hi_neg, hi_val = hi
        if hi_neg or not lo_neg or lo_val != hi_val:
            raise self.error("quantifier ranges must be symmetric boxes [-c, c] with c > 0", start)
        return hi_val

    def endpoint(self):
        neg = False
        while self.tok.text in ("-", "+") and self.tok.kind == "op":
            if self.tok.text == "-":
                neg = not neg
            self.i += 1
        return neg, self.tower_expr()

    # endpoints: products/quotients of powers of integers, towers allowed
    def tower_expr(self):
        value = self.tower_power()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            rhs = self.tower_power()
            if op == "*":
                value = _tmul(value, rhs)
            else:
                if isinstance(value, TowerBound) or isinstance(rhs, TowerBound):
                    raise self.error("division of tower expressions is not supported")
                value = Fraction(value) / Fraction(rhs)
        return value

    def tower_power(self):
        base = self.tower_atom()
        if self.accept("^"):
            exp = self.tower_power()
            return _tpow(base, exp, self)
        return base

    def tower_atom(self):
        if self.accept("("):
            v = self.tower_expr()
            self.expect(")")
            return v
        t = self.tok
        if t.kind != "num":
            raise self.error(f"expected a number, found {t.text or 'end of input'!r}")
        self.i += 1
        return Fraction(int(t.text))

    # formula := disj
    def formula(self):
        left = self.disj()
        if self.accept("->"):
            right = self.formula()
            return disj(Not(left), right)
        return left

    def disj(self):
        parts = [self.conj()]
        while self.accept("|"):
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self):
        parts = [self.unit()]
        while self.accept("&"):
            parts.append(self.unit())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unit(self):
        if self.accept("!"):
            return Not(self.unit())
        if self.tok.kind == "op" and self.tok.text == "(":
            save = self.i
            try:
                return self.atom()
            except (_Backtrack, ParseError):
                self.i = save
            self.expect("(")
            if self.tok.kind == "kw":
                blocks = []
                while self.tok.kind == "kw":
                    blocks.append(self.block())
                    self.accept(".")
                self.expect(":")
                body = self.formula()
                self.expect(")")
                for b, _ in reversed(blocks):
                    body = Quantified(b, body)
                return body
            inner = self.formula()
            self.expect(")")
            return inner
        return self.atom()

    def atom(self):
        lhs = self.expr()
        t = self.tok
        if t.kind != "op" or t.text not in ("<", "<=", "=", "!=", ">=", ">"):
            raise self.error(f"expected a relation, found {t.text or 'end of input'!r}")
        self.i += 1
        rhs = self.expr()
        # rational constants: clear the (positive) common denominator
        return Atom((lhs - rhs).numerator_poly(), Rel(t.text))

    def expr(self) -> "_RPoly":
        sign = 1
        if self.tok.kind == "op" and self.tok.text in ("-", "+"):
            sign = -1 if self.tok.text == "-" else 1
            self.i += 1
        value = self.term() * sign
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> "_RPoly":
        value = self.factor()
        while True:
            if self.accept("*"):
                value = value * self.factor()
            elif self.tok.kind == "op" and self.tok.text == "/":
                self.i += 1
                t = self.tok
                if t.kind != "num" or int(t.text) == 0:
                    raise self.error("division only by a non-zero integer literal")
                self.i += 1
                value = value.divide(int(t.text))
            elif self.tok.kind in ("ident", "num") or (self.tok.kind == "op" and self.tok.text == "("):
                # implicit product only right after a number literal: 2x, 3(x+1)
                if not self._prev_was_number():
                    break
                value = value * self.factor()
            else:
                break
        return value

    def _prev_was_number(self) -> bool:
        return self.i > 0 and self.toks[self.i - 1].kind == "num"

    def factor(self) -> "_RPoly":
        base = self.primary()
        if self.accept("^"):
            t = self.tok
            if t.kind != "num":
                raise self.error("exponent must be a non-negative integer literal")
            self.i += 1
            return base ** int(t.text)
        return base

    def primary(self) -> "_RPoly":
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return _RPoly(Polynomial.const(int(t.text)))
        if t.kind == "ident" and t.text not in _KEYWORDS:
            return _RPoly(Polynomial.var(self.ident()))
        if self.accept("("):
            inner = self.expr()
            if not self.accept(")"):
                raise _Backtrack()
            return inner
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            return -self.primary()
        raise self.error(f"unexpected {t.text or 'end of input'!r} in polynomial")


class _RPoly:
    """Integer polynomial over a positive integer denominator (parser only)."""

    __slots__ = ("poly", "den")

    def __init__(self, poly: Polynomial, den: int = 1):
        self.poly = poly
        self.den = den

    def _lift(self, o):
        return o if isinstance(o, _RPoly) else _RPoly(Polynomial.const(o))

    def __add__(self, o):
        o = self._lift(o)
        return _RPoly(self.poly * o.den + o.poly * self.den, self.den * o.den).reduced()

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __neg__(self):
        return _RPoly(-self.poly, self.den)

    def __mul__(self, o):
        o = self._lift(o)
        return _RPoly(self.poly * o.poly, self.den * o.den).reduced()

    def __pow__(self, e: int):
        return _RPoly(self.poly ** e, self.den ** e)

    def divide(self, k: int):
        if k < 0:
            return _RPoly(-self.poly, -k * self.den).reduced()
        return _RPoly(self.poly, k * self.den).reduced()

    def reduced(self):
        if self.den == 1:
            return self
        g = self.den
        for _, c in self.poly.items():
            g = math.gcd(g, c)
            if g == 1:
                return self
        return _RPoly(Polynomial({m: c // g for m, c in self.poly.items()}), self.den // g)

    def numerator_poly(self) -> Polynomial:
        return self.poly


def _tmul(a, b):
    if isinstance(a, TowerBound) or isinstance(b, TowerBound):
        return TowerBound.mul(_as_int_tower(a), _as_int_tower(b))
    return Fraction(a) * Fraction(b)


def _as_int_tower(v):
    if isinstance(v, TowerBound):
        return v
    v = Fraction(v)
    if v.denominator != 1 or v < 1:
        raise ValueError("tower operands must be positive integers")
    return TowerBound.lit(int(v))


def _tpow(base, exp, parser: _Parser):
    if isinstance(exp, Fraction) and exp.denominator != 1:
        raise parser.error("exponents in ranges must be integers")
    if isinstance(base, Fraction) and isinstance(exp, Fraction):
        e = int(exp)
        budget = materialize_budget()
        if base == 2 and e + 1 > budget:
            return TowerBound.exp2(TowerBound.lit(e))
        if base.denominator == 1 and base > 1 and (int(base).bit_length() - 1) * e > budget:
            return TowerBound.pow(TowerBound.lit(int(base)), TowerBound.lit(e))
        return base ** e
    b = _as_int_tower(base)
    if b == TowerBound.lit(2):
        return TowerBound.exp2(_as_int_tower(exp))
    return TowerBound.pow(b, _as_int_tower(exp))


def parse_formula(text: str, free: Iterable[str] | None = None, allow_reserved: bool = False):
    """Parse formula text.

    Returns a PrenexSentence when the input starts with quantifier blocks and the
    matrix is quantifier-free, otherwise a Formula (possibly with nested quantifiers).
    """
    p = _Parser(text, allow_reserved)
    blocks, body = p.sentence()
    if not blocks:
        return body
    seen: set = set()
    for b, tok in blocks:
        for v in b.vars:
            if v in seen:
                raise ParseError(f"variable {v!r} quantified twice", tok.line, tok.col)
            seen.add(v)
    if not is_quantifier_free(body):
        for b, _ in reversed(blocks):
            body = Quantified(b, body)
        return body
    allowed = seen | set(free or ())
    unbound = formula_vars(body) - allowed
    if unbound:
        raise ParseError(f"unbound variables {sorted(unbound, key=var_key)}", 1, 1)
    return PrenexSentence(tuple(b for b, _ in blocks), body, tuple(sorted(set(free or ()) - seen, key=var_key)))


def parse_sentence(text: str, **kw) -> PrenexSentence:
    out = parse_formula(text, **kw)
    if not isinstance(out, PrenexSentence):
        raise ParseError("expected a prenex sentence", 1, 1)
    return out


def parse_polynomial(text: str, allow_reserved: bool = True) -> Polynomial:
    p = _Parser(text, allow_reserved)
    poly = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    if poly.den != 1:
        raise p.error("polynomials have integer coefficients")
    return poly.poly


# ---------------------------------------------------------------------------
# instance serialization

def set_from_formula(f, coords: Iterable[str] | None = None) -> SemiAlgebraicSet:
    if coords is None:
        coords = sorted(formula_vars(f), key=var_key)
    return SemiAlgebraicSet(tuple(coords), f)


def instance_to_dict(h: HausdorffInstance) -> dict:
    meta = dict(h.meta)
    meta["coordsA"] = list(h.A.coords)
    meta["coordsB"] = list(h.B.coords)
    if h.A.hidden:
        meta["hiddenA"] = list(h.A.hidden)
    if h.B.hidden:
        meta["hiddenB"] = list(h.B.hidden)
    return {
        "n": h.n,
        "phiA": print_formula(h.A.defining),
        "phiB": print_formula(h.B.defining),
        "t": {"num": str(h.t.numerator), "den": str(h.t.denominator)},
        "directed": h.directed,
        "meta": _jsonable(meta),
    }


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, TowerBound):
        return str(v)
    if isinstance(v, enum.Enum):
        return v.value
    return v


def instance_from_dict(d: dict) -> HausdorffInstance:
    n = int(d["n"])
    meta = dict(d.get("meta", {}))
    fa = parse_formula(d["phiA"], allow_reserved=True)
    fb = parse_formula(d["phiB"], allow_reserved=True)
    shared = meta.get("coords")
    ca = meta.get("coordsA", shared)
    cb = meta.get("coordsB", shared)
    if ca is None or cb is None:
        names = sorted(formula_vars(fa) | formula_vars(fb), key=var_key)
        if len(names) != n:
            raise DimensionMismatchError(
                f"cannot infer {n} coordinates from variables {names}; give meta.coords")
        ca = ca or names
        cb = cb or names
    t = d.get("t", 0)
    if isinstance(t, dict):
        t = Fraction(int(t["num"]), int(t["den"]))
    else:
        t = Fraction(str(t))
    A = SemiAlgebraicSet(tuple(ca), fa, tuple(meta.get("hiddenA", ())))
    B = SemiAlgebraicSet(tuple(cb), fb, tuple(meta.get("hiddenB", ())))
    if A.ambient_dim != n or B.ambient_dim != n:
        raise DimensionMismatchError(f"declared n={n} does not match coordinates")
    return HausdorffInstance(A, B, t, bool(d.get("directed", True)), meta)
