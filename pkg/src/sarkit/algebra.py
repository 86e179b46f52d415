"""Exact arithmetic: sparse integer polynomials and symbolic tower integers."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import BudgetExceededError, MissingAssignmentError

Rational = Fraction
Number = Union[int, Fraction]

# A monomial is a tuple of (variable, exponent) pairs sorted by var_key, exponents >= 1.
Monomial = tuple

_DIGITS = re.compile(r"(\d+)")


@lru_cache(maxsize=None)
def var_key(name: str) -> tuple:
    """Natural sort key, so that u2 sorts before u10."""
    parts = _DIGITS.split(name)
    return tuple((1, int(p)) if p.isdigit() else (0, p) for p in parts if p != "")


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    # merge of two sorted tuples
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        va, vb = a[i][0], b[j][0]
        if va == vb:
            out.append((va, a[i][1] + b[j][1]))
            i += 1
            j += 1
        elif var_key(va) < var_key(vb):
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


class Polynomial:
    """Sparse multivariate polynomial with integer coefficients.

    Stored canonically: zero coefficients and zero exponents are dropped and
    monomials are sorted, so equal polynomials are structurally equal.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, int] | Iterable[tuple[Monomial, int]] = ()):
        acc: dict[Monomial, int] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for mono, c in items:
            if not isinstance(c, int):
                raise TypeError(f"coefficient must be an int, got {type(c).__name__}")
            exps: dict = {}
            for v, e in mono:
                if e < 0:
                    raise ValueError("negative exponent")
                exps[v] = exps.get(v, 0) + e
            key = tuple(sorted(((v, e) for v, e in exps.items() if e != 0), key=lambda it: var_key(it[0])))
            acc[key] = acc.get(key, 0) + c
        self._terms = {m: c for m, c in acc.items() if c != 0}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p._terms = {m: c for m, c in terms.items() if c != 0}
        p._hash = None
        return p

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls._raw({((name, 1),): 1})

    @classmethod
    def const(cls, c: int) -> "Polynomial":
        return cls._raw({(): int(c)})

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls._raw({})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def vars(self) -> tuple:
        names = {v for m in self._terms for v, _ in m}
        return tuple(sorted(names, key=var_key))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_value(self) -> int:
        return self._terms.get((), 0)

    def total_degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def degree_in(self, name: str) -> int:
        best = 0
        for m in self._terms:
            for v, e in m:
                if v == name and e > best:
                    best = e
        return best

    def max_coeff_bits(self) -> int:
        return max((abs(c).bit_length() for c in self._terms.values()), default=0)

    # ring operations

    @staticmethod
    def _lift(other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, int):
            return Polynomial.const(other)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for m, c in o._terms.items():
            out[m] = out.get(m, 0) + c
        return Polynomial._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if o.is_constant():
            k = o.constant_value()
            return Polynomial._raw({m: c * k for m, c in self._terms.items()})
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in o._terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Polynomial._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # evaluation and substitution

    def evaluate(self, point: Mapping[str, Number]) -> Fraction:
        total = Fraction(0)
        for m, c in self._terms.items():
            val = Fraction(c)
            for v, e in m:
                try:
                    x = point[v]
                except KeyError:
                    raise MissingAssignmentError(v) from None
                val *= Fraction(x) ** e
            total += val
        return total

    def substitute(self, mapping: Mapping[str, "Polynomial | int"]) -> "Polynomial":
        """Replace variables by polynomials; unmapped variables stay."""
        if not mapping:
            return self
        subs = {v: self._lift(p) for v, p in mapping.items()}
        cache: dict = {}

        def power(v: str, e: int) -> Polynomial:
            key = (v, e)
            if key not in cache:
                cache[key] = subs[v] ** e
            return cache[key]

        out: dict = {}
        for m, c in self._terms.items():
            kept = tuple((v, e) for v, e in m if v not in subs)
            term = Polynomial._raw({kept: c})
            for v, e in m:
                if v in subs:
                    term = term * power(v, e)
            for tm, tc in term._terms.items():
                out[tm] = out.get(tm, 0) + tc
        return Polynomial._raw(out)

    def rename(self, mapping: Mapping[str, str]) -> "Polynomial":
        if not mapping:
            return self
        return Polynomial((tuple((mapping.get(v, v), e) for v, e in m), c) for m, c in self._terms.items())

    def derivative(self, name: str) -> "Polynomial":
        out: dict = {}
        for m, c in self._terms.items():
            exps = dict(m)
            e = exps.get(name, 0)
            if e == 0:
                continue
            if e == 1:
                del exps[name]
            else:
                exps[name] = e - 1
            key = tuple(sorted(exps.items(), key=lambda it: var_key(it[0])))
            out[key] = out.get(key, 0) + c * e
        return Polynomial._raw(out)

    def sorted_terms(self) -> list:
        """Terms in printing order: higher total degree first, then by variable order."""
        def key(item):
            m = item[0]
            return (-_mono_degree(m), tuple((var_key(v), -e) for v, e in m))
        return sorted(self._terms.items(), key=key)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            factors = [v if e == 1 else f"{v}^{e}" for v, e in m]
            if a != 1 or not factors:
                factors.insert(0, str(a))
            body = "*".join(factors)
            if i == 0:
                parts.append(("-" if sign == "-" else "") + body)
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def __repr__(self) -> str:
        return f"Polynomial({str(self)!r})"


def eval_float(p: Polynomial, values: Mapping):
    """Floating-point value; works elementwise when values are numpy arrays."""
    total = 0.0
    for m, c in p.items():
        t = float(c)
        for v, e in m:
            t = t * values[v] ** e
        total = total + t
    return total


def poly_eval(p: Polynomial, point: Mapping[str, Number]) -> Fraction:
    return p.evaluate(point)


def poly_total_degree(p: Polynomial) -> int:
    return p.total_degree()


def sum_polys(polys: Iterable[Polynomial]) -> Polynomial:
    out: dict = {}
    for p in polys:
        for m, c in p.items():
            out[m] = out.get(m, 0) + c
    return Polynomial._raw(out)


def product_polys(polys: Iterable[Polynomial]) -> Polynomial:
    out = Polynomial.const(1)
    for p in polys:
        out = out * p
    return out


# ---------------------------------------------------------------------------
# Tower integers

def materialize_budget() -> int:
    """Largest bit length a tower may be expanded to (env SAR_MATERIALIZE_BUDGET)."""
    raw = os.environ.get("SAR_MATERIALIZE_BUDGET")
    if raw is None:
        return 64
    value = int(raw)
    if value < 1:
        raise ValueError("SAR_MATERIALIZE_BUDGET must be positive")
    return value


@dataclass(frozen=True)
class TowerBound:
    """A positive integer held as an expression tree.

    op is one of "lit", "exp2", "mul", "pow", "logc" (ceil of log2).
    """

    op: str
    args: tuple

    def __post_init__(self):
        if self.op == "lit":
            if not (len(self.args) == 1 and isinstance(self.args[0], int) and self.args[0] >= 1):
                raise ValueError("tower literal must be a positive integer")
        elif self.op in ("exp2", "logc"):
            if len(self.args) != 1:
                raise ValueError(f"{self.op} takes one argument")
        elif self.op in ("mul", "pow"):
            if len(self.args) != 2:
                raise ValueError(f"{self.op} takes two arguments")
        else:
            raise ValueError(f"unknown tower op {self.op!r}")

    @staticmethod
    def lit(n: int) -> "TowerBound":
        return TowerBound("lit", (int(n),))

    @staticmethod
    def exp2(t: "TowerBound | int") -> "TowerBound":
        return TowerBound("exp2", (as_tower(t),))

    @staticmethod
    def mul(a, b) -> "TowerBound":
        return TowerBound("mul", (as_tower(a), as_tower(b)))

    @staticmethod
    def pow(a, e) -> "TowerBound":
        return TowerBound("pow", (as_tower(a), as_tower(e)))

    @staticmethod
    def logc(a) -> "TowerBound":
        return TowerBound("logc", (as_tower(a),))

    def materialize(self, budget_bits: int | None = None) -> int:
        budget = materialize_budget() if budget_bits is None else budget_bits
        value = _materialize(self, budget)
        if value is None:
            raise BudgetExceededError(f"{self} exceeds the {budget}-bit materialization budget")
        return value

    def try_materialize(self, budget_bits: int | None = None) -> int | None:
        budget = materialize_budget() if budget_bits is None else budget_bits
        return _materialize(self, budget)

    def __str__(self) -> str:
        if self.op == "lit":
            return str(self.args[0])
        if self.op == "exp2":
            return f"2^({self.args[0]})"
        if self.op == "mul":
            return f"({self.args[0]})*({self.args[1]})"
        if self.op == "pow":
            return f"({self.args[0]})^({self.args[1]})"
        return f"clog2({self.args[0]})"

    def __le__(self, other) -> bool:
        return tower_le(self, as_tower(other))

    def __ge__(self, other) -> bool:
        return tower_le(as_tower(other), self)

    def __lt__(self, other) -> bool:
        return not tower_le(as_tower(other), self)

    def __gt__(self, other) -> bool:
        return not tower_le(self, as_tower(other))


def double_exp(n: int) -> TowerBound:
    """The tower 2^(2^n)."""
    if n < 0:
        raise ValueError("tower exponent must be non-negative")
    inner = TowerBound.lit(1) if n == 0 else TowerBound.exp2(TowerBound.lit(n))
    return TowerBound.exp2(inner)


TowerBound.double_exp = staticmethod(double_exp)  # type: ignore[attr-defined]


def as_tower(x) -> TowerBound:
    if isinstance(x, TowerBound):
        return x
    if isinstance(x, int):
        return TowerBound.lit(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a tower")


def _materialize(t: TowerBound, budget: int) -> int | None:
    op = t.op
    if op == "lit":
        v = t.args[0]
        return v if v.bit_length() <= budget else None
    if op == "exp2":
        e = _materialize(t.args[0], budget)
        if e is None or e + 1 > budget:
            return None
        return 1 << e
    if op == "mul":
        a = _materialize(t.args[0], budget)
        b = _materialize(t.args[1], budget)
        if a is None or b is None or a.bit_length() + b.bit_length() - 1 > budget:
            return None
        v = a * b
        return v if v.bit_length() <= budget else None
    if op == "pow":
        a = _materialize(t.args[0], budget)
        e = _materialize(t.args[1], budget)
        if a is None or e is None:
            return None
        if a == 1:
            return 1
        if (a.bit_length() - 1) * e > budget:
            return None
        v = a ** e
        return v if v.bit_length() <= budget else None
    # logc: ceil(log2 v) for v >= 1; never larger than v itself
    v = _materialize(t.args[0], budget)
    if v is None:
        inner = _materialize_log_of(t.args[0], budget)
        return inner
    return max((v - 1).bit_length(), 1) if v > 1 else 1


def _materialize_log_of(t: TowerBound, budget: int) -> int | None:
    """ceil(log2 t) without expanding t, when t is an exact power of two."""
    if t.op == "exp2":
        return _materialize(t.args[0], budget)
    return None


# Magnitude intervals. ilog(t, h) bounds the h-fold iterated log2 of the value.
_INF = math.inf


def _widen(lo: float, hi: float) -> tuple:
    lo = math.nextafter(lo, -_INF) if math.isfinite(lo) else lo
    hi = math.nextafter(hi, _INF) if math.isfinite(hi) else hi
    lo = lo - abs(lo) * 1e-12
    hi = hi + abs(hi) * 1e-12
    return (lo, hi)


def _log2_interval(iv):
    if iv is None:
        return None
    lo, hi = iv
    if lo <= 0:
        return None
    nlo = math.log2(lo) if math.isfinite(lo) else _INF
    nhi = math.log2(hi) if math.isfinite(hi) else _INF
    return _widen(nlo, nhi)


def _exp2_interval(iv):
    if iv is None:
        return None
    lo, hi = iv

    def e2(x):
        if x == _INF:
            return _INF
        try:
            return 2.0 ** x
        except OverflowError:
            return _INF

    return _widen(e2(lo), e2(hi))


class _LogOf:
    """Internal node standing for log2 of a tower (used for powers)."""

    __slots__ = ("inner",)

    def __init__(self, inner):
        self.inner = inner


def _ilog(t, h: int):
    """Interval (lo, hi) for the h-fold iterated log2 of t, or None if unavailable."""
    if isinstance(t, _LogOf):
        return _ilog(t.inner, h + 1)
    op = t.op
    if op == "lit":
        x = t.args[0]
        if h == 0:
            try:
                f = float(x)
            except OverflowError:
                f = _INF
            return _widen(f, f)
        val = math.log2(x)
        iv = _widen(val, val)
        for _ in range(h - 1):
            iv = _log2_interval(iv)
            if iv is None:
                return None
        return iv
    if op == "exp2":
        if h == 0:
            return _exp2_interval(_ilog(t.args[0], 0))
        return _ilog(t.args[0], h - 1)
    if op == "mul":
        return _ilog_mul(t.args[0], t.args[1], h)
    if op == "pow":
        a, e = t.args
        if h == 0:
            return _exp2_interval(_ilog_mul(e, _LogOf(a), 0))
        return _ilog_mul(e, _LogOf(a), h - 1)
    # logc: log2 v <= ceil(log2 v) < log2 v + 1
    inner = _ilog(t.args[0], h + 1)
    if inner is None:
        return None
    lo, hi = inner
    if h == 0:
        return (max(lo, 0.0), hi + 1)
    return (lo, hi + 1)


def _ilog_mul(a, b, h: int):
    if h == 0:
        ia, ib = _ilog(a, 0), _ilog(b, 0)
        if ia is None or ib is None:
            return None
        return _widen(ia[0] * ib[0], ia[1] * ib[1])
    if h == 1:
        ia, ib = _ilog(a, 1), _ilog(b, 1)
        if ia is None or ib is None:
            return None
        return _widen(ia[0] + ib[0], ia[1] + ib[1])
    # log of a sum of two non-negative level-(h-1) values lies in [max, max + 1]
    ia, ib = _ilog(a, h), _ilog(b, h)
    if ia is None and ib is None:
        return None
    if ia is None:
        lo, hi = ib
    elif ib is None:
        lo, hi = ia
    else:
        lo, hi = max(ia[0], ib[0]), max(ia[1], ib[1])
    if lo < 0:
        return None
    return _widen(lo, hi + 1)


_MAX_LEVEL = 8


def _base_two(t: TowerBound) -> TowerBound:
    """Rewrite 2^e given as a power into exp2 form so exponents can be compared."""
    if t.op == "pow" and t.args[0] == TowerBound.lit(2):
        return TowerBound.exp2(t.args[1])
    return t


def tower_le(a: TowerBound, b: TowerBound, budget_bits: int | None = None) -> bool:
    """a <= b, decided exactly when both fit the budget, else by magnitude intervals."""
    a, b = _base_two(as_tower(a)), _base_two(as_tower(b))
    budget = materialize_budget() if budget_bits is None else budget_bits
    va, vb = _materialize(a, budget), _materialize(b, budget)
    if va is not None and vb is not None:
        return va <= vb
    if a == b:
        return True
    if a.op == "exp2" and b.op == "exp2":
        # 2^x is strictly increasing, so compare exponents exactly
        return tower_le(a.args[0], b.args[0], budget)
    if va is not None and vb is None:
        # b does not fit the budget, so it exceeds 2^budget > a
        if _certainly_large(b, budget):
            return True
    if vb is not None and va is None:
        if _certainly_large(a, budget):
            return False
    for h in range(_MAX_LEVEL + 1):
        ia, ib = _ilog(a, h), _ilog(b, h)
        if ia is None or ib is None:
            continue
        if ia[1] < ib[0] and math.isfinite(ia[1]):
            return True
        if ib[1] < ia[0] and math.isfinite(ib[1]):
            return False
    raise BudgetExceededError(f"cannot order {a} and {b} without materializing beyond {budget} bits")


def _certainly_large(t: TowerBound, budget: int) -> bool:
    """True when t provably exceeds every integer of at most `budget` bits."""
    for h in range(1, _MAX_LEVEL + 1):
        iv = _ilog(t, h)
        if iv is None:
            continue
        # threshold: log2 applied h times to 2^budget
        thr = float(budget)
        ok = True
        for _ in range(h - 1):
            if thr <= 0:
                ok = False
                break
            thr = math.log2(thr)
        if ok and iv[0] > thr:
            return True
    return False


def tower_max(*ts: TowerBound) -> TowerBound:
    best = as_tower(ts[0])
    for t in ts[1:]:
        t = as_tower(t)
        if not tower_le(t, best):
            best = t
    return best
