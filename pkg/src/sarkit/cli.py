"""Command line front end: `sar <subcommand> ...`.

Inputs are formula text files or JSON Hausdorff instances ("-" reads stdin).
Exit codes: 0 success, 2 input error, 3 fragile oracle verdict under
--require-robust.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from fractions import Fraction

import numpy as np

from . import bounds as bd
from .algebra import Polynomial, TowerBound, var_key
from .bounds import BoundConfig, DeskScale
from .decide import (
    GridSpec, PointCloud, Verdict, directed_hausdorff, hausdorff, oracle_decide,
    refine_extremal_pair, sample_set,
)
from .errors import PreconditionError, SarError
from .formula import (
    And, Atom, HausdorffInstance, Not, Or, PrenexSentence, Quantified, Rel, SemiAlgebraicSet,
    formula_length, formula_vars, instance_from_dict, instance_to_dict, parse_formula,
    print_formula,
)
from .gadgets import chi, tseitin_quadratic, tseitin_quartic
from .normalize import eliminate_relations, to_dnf, to_nnf, to_prenex
from .reductions import (
    encode_directed_hausdorff, encode_hardness, encode_hardness_simple, encode_membership,
    erd_to_hausdorff, exotic_to_strict, expand_counterexamples, expand_exotic,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FRAGILE = 3


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# SMT-LIB2 export

def _smt_rational(c: Fraction) -> str:
    c = Fraction(c)
    num = f"{abs(c.numerator)}.0" if c.denominator == 1 else f"(/ {abs(c.numerator)}.0 {c.denominator}.0)"
    return f"(- {num})" if c < 0 else num


def _smt_poly(p: Polynomial) -> str:
    terms = []
    for mono, c in p.sorted_terms():
        factors = [v for v, e in mono for _ in range(e)]
        if not factors:
            terms.append(_smt_rational(Fraction(c)))
        elif c == 1:
            terms.append(factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})")
        else:
            terms.append(f"(* {_smt_rational(Fraction(c))} {' '.join(factors)})")
    if not terms:
        return "0.0"
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


_SMT_REL = {Rel.LT: "<", Rel.LE: "<=", Rel.EQ: "=", Rel.GE: ">=", Rel.GT: ">"}


def _smt_formula(f) -> str:
    if isinstance(f, Atom):
        lhs = _smt_poly(f.poly)
        if f.rel is Rel.NE:
            return f"(not (= {lhs} 0.0))"
        return f"({_SMT_REL[f.rel]} {lhs} 0.0)"
    if isinstance(f, And):
        return f"(and {' '.join(_smt_formula(c) for c in f.children)})"
    if isinstance(f, Or):
        return f"(or {' '.join(_smt_formula(c) for c in f.children)})"
    if isinstance(f, Not):
        return f"(not {_smt_formula(f.child)})"
    raise PreconditionError(f"cannot export {type(f).__name__} inside a matrix")


def _smt_box(v: str, box) -> str | None:
    if box is None:
        return None
    if isinstance(box, TowerBound):
        raise PreconditionError(f"box of {v} is too large to write out: {box}")
    c = _smt_rational(Fraction(box))
    return f"(<= (- {c}) {v}) (<= {v} {c})"


def export_smt2(s: PrenexSentence) -> str:
    """SMT-LIB2 script asserting the sentence itself: sat iff it is true.

    Boxed blocks become guarded quantifiers. Exotic quantifiers must be
    expanded first.
    """
    if isinstance(s, Quantified):
        s = to_prenex(s)
    if not isinstance(s, PrenexSentence):
        s = PrenexSentence((), s, tuple(sorted(formula_vars(s), key=var_key)))
    for b in s.blocks:
        if b.quantifier.exotic:
            raise PreconditionError("exotic quantifier present; run exotic-expand first")
    body = _smt_formula(s.matrix)
    for b in reversed(s.blocks):
        guards = " ".join(g for g in (_smt_box(v, b.box) for v in b.vars) if g)
        decl = " ".join(f"({v} Real)" for v in b.vars)
        if b.quantifier.universal:
            inner = f"(=> (and {guards}) {body})" if guards else body
            body = f"(forall ({decl}) {inner})"
        else:
            inner = f"(and {guards} {body})" if guards else body
            body = f"(exists ({decl}) {inner})"
    lines = ["; sat iff the asserted sentence holds over the reals", "(set-logic NRA)"]
    lines += [f"(declare-fun {v} () Real)" for v in s.free]
    lines += [f"(assert {body})", "(check-sat)", "(exit)"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# point clouds and plots

def cloud_to_csv(P: PointCloud) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for p in P.points:
        w.writerow([_decimal(x) for x in p])
    return buf.getvalue()


def _decimal(x: Fraction) -> str:
    """Exact decimal string; every float-derived Fraction has a finite expansion."""
    x = Fraction(x)
    sign = "-" if x < 0 else ""
    x = abs(x)
    den = x.denominator
    k = 0
    while den % 2 == 0:
        den //= 2
        k += 1
    while den % 5 == 0:
        den //= 5
        k += 1
    if den != 1:
        raise ValueError("value has no finite decimal expansion")
    scaled = x.numerator * 10 ** k // x.denominator
    digits = str(scaled).rjust(k + 1, "0")
    whole, frac = (digits[:-k], digits[-k:]) if k else (digits, "")
    frac = frac.rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def cloud_from_csv(text: str, tolerance: Fraction = Fraction(0)) -> PointCloud:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise InputError("empty point cloud")
    return PointCloud(len(rows[0]), tuple(tuple(Fraction(x) for x in r) for r in rows), tolerance)


def polylines(P: PointCloud, gap: float) -> list:
    """Greedy nearest-neighbour chains through a curve sample, split at jumps above gap."""
    from scipy.spatial import cKDTree
    pts = P.array()
    if not len(pts):
        return []
    tree = cKDTree(pts)
    used = np.zeros(len(pts), dtype=bool)
    lines = []
    k = min(8, len(pts))
    for start in np.lexsort(pts.T[::-1]):
        if used[start]:
            continue
        line = [start]
        used[start] = True
        cur = start
        while True:
            d, idx = tree.query(pts[cur], k=k)
            nxt = next((j for dj, j in zip(np.atleast_1d(d), np.atleast_1d(idx))
                        if not used[j] and dj <= gap), None)
            if nxt is None:
                break
            used[nxt] = True
            line.append(nxt)
            cur = nxt
        lines.append(pts[line])
    return lines


def render_svg(clouds: list, box: tuple, witness=None, size: int = 600, gap: float | None = None) -> str:
    """clouds: list of (PointCloud, colour). Curves become polylines; the witness segment is drawn on top."""
    (x0, x1), (y0, y1) = box
    sx, sy = size / (x1 - x0), size / (y1 - y0)

    def tx(p):
        return f"{(p[0] - x0) * sx:.3f},{(y1 - p[1]) * sy:.3f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    for P, colour in clouds:
        g = gap if gap is not None else 3 * float(P.tolerance) + 1e-9
        for line in polylines(P, g):
            if len(line) == 1:
                out.append(f'<circle cx="{tx(line[0]).split(",")[0]}" cy="{tx(line[0]).split(",")[1]}" '
                           f'r="1" fill="{colour}"/>')
                continue
            pts = " ".join(tx(p) for p in line)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
    if witness is not None:
        a, b = witness
        (ax, ay), (bx, by) = tx(a).split(","), tx(b).split(",")
        out.append(f'<line class="witness" x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" '
                   f'stroke="red" stroke-width="3"/>')
        for cx, cy in ((ax, ay), (bx, by)):
            out.append(f'<circle class="witness" cx="{cx}" cy="{cy}" r="4" fill="red"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# input helpers

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e


def _formula(path: str):
    return parse_formula(_read(path))


def _sentence(path: str) -> PrenexSentence:
    f = _formula(path)
    if isinstance(f, Quantified):
        f = to_prenex(f)
    if not isinstance(f, PrenexSentence):
        raise InputError("expected a sentence with quantifier blocks")
    return f


def _instance(path: str) -> HausdorffInstance:
    try:
        d = json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON in {path}: {e}") from e
    try:
        return instance_from_dict(d)
    except (KeyError, TypeError) as e:
        raise InputError(f"malformed instance in {path}: missing or bad field {e}") from e


def _set(path: str, coords: str | None) -> SemiAlgebraicSet:
    f = _formula(path)
    if isinstance(f, (PrenexSentence, Quantified)):
        raise InputError("a set is given by a quantifier-free formula")
    names = tuple(coords.split(",")) if coords else tuple(sorted(formula_vars(f), key=var_key))
    return SemiAlgebraicSet(names, f)


def _parse_box(text: str) -> tuple:
    lo, hi = text.split(",")
    return Fraction(lo), Fraction(hi)


def _grid(args, margin=None) -> GridSpec:
    boxes, default = {}, None
    for item in args.box or ():
        if "=" in item:
            name, rng = item.split("=", 1)
            boxes[name] = _parse_box(rng)
        else:
            default = _parse_box(item)
    res = {}
    for item in getattr(args, "var_resolution", None) or ():
        name, r = item.split("=", 1)
        res[name] = int(r)
    m = Fraction(args.margin) if margin is None else margin
    return GridSpec(resolution=args.resolution, margin=m, boxes=boxes, resolutions=res, default_box=default)


def _cfg(args, desk: DeskScale | None = None) -> BoundConfig:
    return BoundConfig(alpha=args.alpha, beta=args.beta, desk=desk)


def _desk(args, base: BoundConfig) -> DeskScale | None:
    if not getattr(args, "desk", False):
        return None
    d = base.desk
    radius = getattr(args, "radius", None)
    if radius is not None:
        d = DeskScale(d.universal, d.existential, d.poly, d.threshold, radius, d.degree)
    return d


def _equation(S: SemiAlgebraicSet) -> Polynomial:
    f = S.defining
    if not (isinstance(f, Atom) and f.rel is Rel.EQ):
        raise InputError("refinement needs each set given by a single equation P = 0")
    return f.poly


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(","))


# ---------------------------------------------------------------------------
# subcommands (each returns (text, exit code))

def _ast(f, indent: int = 0) -> list:
    pad = "  " * indent
    if isinstance(f, PrenexSentence):
        lines = [f"{pad}Sentence free={list(f.free)}"]
        for b in f.blocks:
            box = "" if b.box is None else f" box={b.box}"
            lines.append(f"{pad}  Block {b.quantifier.value} {list(b.vars)}{box}")
        return lines + _ast(f.matrix, indent + 1)
    if isinstance(f, Atom):
        return [f"{pad}Atom ({f.poly}) {f.rel.value} 0"]
    if isinstance(f, (And, Or)):
        lines = [f"{pad}{type(f).__name__}"]
        for c in f.children:
            lines += _ast(c, indent + 1)
        return lines
    if isinstance(f, Not):
        return [f"{pad}Not"] + _ast(f.child, indent + 1)
    if isinstance(f, Quantified):
        b = f.block
        return [f"{pad}Quantified {b.quantifier.value} {list(b.vars)}"] + _ast(f.body, indent + 1)
    raise TypeError(f"not a formula: {f!r}")


def cmd_parse(args):
    return "\n".join(_ast(_formula(args.file))) + "\n", EXIT_OK


def cmd_fmt(args):
    return print_formula(_formula(args.file)) + "\n", EXIT_OK


def cmd_normalize(args):
    return print_formula(eliminate_relations(_formula(args.file))) + "\n", EXIT_OK


def cmd_nnf(args):
    return print_formula(to_nnf(eliminate_relations(_formula(args.file)))) + "\n", EXIT_OK


def cmd_prenex(args):
    return print_formula(to_prenex(_formula(args.file))) + "\n", EXIT_OK


def cmd_dnf(args):
    return print_formula(to_dnf(to_nnf(eliminate_relations(_formula(args.file))), args.limit)) + "\n", EXIT_OK


def cmd_chi(args):
    if args.N < 0:
        raise InputError("N must be non-negative")
    return print_formula(chi(args.N)) + "\n", EXIT_OK


def cmd_tseitin(args):
    f = _formula(args.file)
    if args.quartic:
        res = tseitin_quartic(f)
        text = print_formula(res.formula)
    else:
        res = tseitin_quadratic(f)
        text = "\n".join(f"{e} = 0" for e in res.equations)
    return f"# fresh: {', '.join(res.fresh)}\n{text}\n", EXIT_OK


def cmd_bounds(args):
    s = _sentence(args.file)
    n = len(s.blocks[0].vars)
    m = sum(len(b.vars) for b in s.blocks[1:]) or 1
    L = max(2, formula_length(s))
    cfg = _cfg(args)
    rec = bd.bounds_table(n, m, L, cfg)
    rec["K"] = max(rec["N"], rec["M"])
    rec["threshold"] = bd.threshold_exponent(L, n, m, cfg)
    width = max(len(k) for k in rec)
    table = "\n".join(f"{k.ljust(width)}  {v}" for k, v in rec.items())
    return f"{table}\n{json.dumps(rec, sort_keys=True)}\n", EXIT_OK


def cmd_expand(args):
    from .desk import EXPAND_CFG
    cfg = _cfg(args, _desk(args, EXPAND_CFG))
    return print_formula(expand_counterexamples(_sentence(args.file), cfg)) + "\n", EXIT_OK


def cmd_encode_hardness(args):
    from .desk import EXPAND_CFG
    desk = _desk(args, EXPAND_CFG)
    if desk is not None and desk.radius is None:
        desk = DeskScale(desk.universal, desk.existential, desk.poly, desk.threshold, 3, desk.degree)
    cfg = _cfg(args, desk)
    s = _sentence(args.file)
    if args.quadratic or args.quartic:
        variant = "quadratic-system" if args.quadratic else "single-quartic"
        h = encode_hardness_simple(s, variant, cfg, args.directed)
    else:
        h = encode_hardness(s, cfg, args.directed)
    return json.dumps(instance_to_dict(h), indent=2) + "\n", EXIT_OK


def cmd_encode_hausdorff(args):
    h = _instance(args.file)
    if args.directed and not h.directed:
        h = HausdorffInstance(h.A, h.B, h.t, True, h.meta)
    return print_formula(encode_directed_hausdorff(h)) + "\n", EXIT_OK


def cmd_encode_membership(args):
    from .desk import MEMBERSHIP_CFG
    cfg = _cfg(args, _desk(args, MEMBERSHIP_CFG))
    return print_formula(encode_membership(_instance(args.file), cfg)) + "\n", EXIT_OK


def cmd_exotic_expand(args):
    return print_formula(expand_exotic(_sentence(args.file), squared=not args.plain)) + "\n", EXIT_OK


def cmd_exotic_to_strict(args):
    from .desk import EXOTIC_CFG
    cfg = _cfg(args, _desk(args, EXOTIC_CFG))
    return print_formula(exotic_to_strict(_sentence(args.file), cfg)) + "\n", EXIT_OK


def cmd_erd(args):
    A = _set(args.a, args.coords)
    B = _set(args.b, args.coords)
    return json.dumps(instance_to_dict(erd_to_hausdorff(A, B)), indent=2) + "\n", EXIT_OK


def cmd_oracle(args):
    v = oracle_decide(_sentence(args.file), _grid(args))
    code = EXIT_FRAGILE if v is Verdict.FRAGILE and args.require_robust else EXIT_OK
    return v.value + "\n", code


def cmd_sample(args):
    S = _set(args.file, args.coords)
    P = sample_set(S, _grid(args))
    if P.warning:
        print(f"warning: {P.warning}", file=sys.stderr)
    return f"# tolerance {float(P.tolerance):.6g}\n" + cloud_to_csv(P), EXIT_OK


def _instance_clouds(h: HausdorffInstance, args):
    g = _grid(args)
    return sample_set(h.A, g), sample_set(h.B, g)


def _refine(h: HausdorffInstance, a, b):
    fA, fB = _equation(h.A), _equation(h.B)
    if h.A.coords != h.B.coords:
        fB = fB.rename(dict(zip(h.B.coords, h.A.coords)))
    return refine_extremal_pair(fA, fB, a, b, coords=h.A.coords)


def cmd_approx(args):
    h = _instance(args.file)
    P, Q = _instance_clouds(h, args)
    for c in (P, Q):
        if c.warning:
            raise InputError(c.warning)
    directed = args.directed or h.directed
    r = directed_hausdorff(P, Q) if directed else hausdorff(P, Q)
    kind = "directed" if directed else "hausdorff"
    lines = [f"{r.distance:.6f} +- {r.error:.2g} ({kind}, resolution {args.resolution})"]
    a, b = r.witness
    lines.append(f"a {' '.join(f'{x:.6f}' for x in a)}")
    lines.append(f"b {' '.join(f'{x:.6f}' for x in b)}")
    if args.refine:
        rp = _refine(h, a, b)
        lines.append(f"refined {rp.distance:.6f} converged={rp.converged} residual={rp.residual:.2e}")
        lines.append(f"a {' '.join(f'{x:.6f}' for x in rp.a)}")
        lines.append(f"b {' '.join(f'{x:.6f}' for x in rp.b)}")
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_refine(args):
    h = _instance(args.file)
    rp = _refine(h, _floats(args.seed_a), _floats(args.seed_b))
    lines = [f"{rp.distance:.6f} converged={rp.converged} residual={rp.residual:.2e} iterations={rp.iterations}",
             f"a {' '.join(f'{x:.6f}' for x in rp.a)}",
             f"b {' '.join(f'{x:.6f}' for x in rp.b)}"]
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_export(args):
    return export_smt2(_formula(args.file)), EXIT_OK


def cmd_plot(args):
    h = _instance(args.file)
    if h.n != 2:
        raise InputError("plots are for planar instances")
    P, Q = _instance_clouds(h, args)
    witness = None
    if len(P) and len(Q):
        r = hausdorff(P, Q) if not h.directed else directed_hausdorff(P, Q)
        witness = r.witness
        if args.refine:
            rp = _refine(h, *witness)
            witness = (rp.a, rp.b)
    g = _grid(args)
    box = tuple(tuple(float(x) for x in g.box_for(v)) for v in h.A.coords)
    return render_svg([(P, "#1f5fbf"), (Q, "#2a9d3a")], box, witness), EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--out", default=S, help="write output to this path instead of stdout")
    p.add_argument("--seed", type=int, default=S, help="seed for randomized steps")
    p.add_argument("--alpha", type=int, default=S, help="elimination size constant")
    p.add_argument("--beta", type=int, default=S, help="epsilon floor constant")
    p.add_argument("--require-robust", action="store_true", default=S,
                   help="exit 3 when the oracle verdict is fragile")
    return p


def _grid_args(p: argparse.ArgumentParser, resolution: int = 64) -> None:
    p.add_argument("--resolution", type=int, default=resolution)
    p.add_argument("--box", action="append", metavar="[NAME=]LO,HI",
                   help="box for one variable, or the default box without NAME")
    p.add_argument("--var-resolution", action="append", metavar="NAME=R")
    p.add_argument("--margin", default="0")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="sar", parents=[common],
                                 description="Strict and exotic sentences, reductions and desk-scale checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(fn=fn)
        return p

    for name, fn, h in (("parse", cmd_parse, "print the syntax tree"),
                        ("fmt", cmd_fmt, "pretty-print"),
                        ("normalize", cmd_normalize, "rewrite atoms to < and <="),
                        ("nnf", cmd_nnf, "negation normal form"),
                        ("prenex", cmd_prenex, "prenex form"),
                        ("export-smt2", cmd_export, "SMT-LIB2 script"),
                        ("exotic-expand", cmd_exotic_expand, "replace exotic quantifiers by classical ones")):
        p = add(name, fn, h)
        p.add_argument("file")
        if name == "exotic-expand":
            p.add_argument("--plain", action="store_true", help="use |x - x'| < eps instead of the squared form")
    p = add("dnf", cmd_dnf, "disjunctive normal form")
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=10_000)
    p = add("chi", cmd_chi, "the squaring-chain formula")
    p.add_argument("N", type=int)
    p = add("tseitin", cmd_tseitin, "flatten to equations")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--quadratic", action="store_true", help="system of degree-2 equations (default)")
    g.add_argument("--quartic", action="store_true", help="single degree-4 equation")
    p = add("bounds", cmd_bounds, "range exponents and tower bounds")
    p.add_argument("file")
    for name, fn, h in (("expand-counterexamples", cmd_expand, "fatten counterexamples"),
                        ("exotic-to-strict", cmd_exotic_to_strict, "exotic sentence to a strict sentence")):
        p = add(name, fn, h)
        p.add_argument("file")
        p.add_argument("--desk", action="store_true", help="use the desk-scale exponents")
    p = add("encode-hardness", cmd_encode_hardness, "Hausdorff instance from a strict sentence")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--quadratic", action="store_true")
    g.add_argument("--quartic", action="store_true")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--desk", action="store_true")
    p.add_argument("--radius", type=int, default=None, help="chain length override (with --desk)")
    p = add("encode-hausdorff", cmd_encode_hausdorff, "sentence for d_H(A, B) <= t")
    p.add_argument("file")
    p.add_argument("--directed", action="store_true")
    p = add("encode-membership", cmd_encode_membership, "strict universal sentence for an instance")
    p.add_argument("file")
    p.add_argument("--desk", action="store_true")
    p = add("erd-to-hausdorff", cmd_erd, "lift an A in closure(B) question to a directed instance")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--coords", default=None, help="comma-separated coordinate names")
    p = add("oracle-decide", cmd_oracle, "lattice truth value of a boxed sentence")
    p.add_argument("file")
    _grid_args(p, 16)
    p = add("sample-set", cmd_sample, "sample a set as CSV")
    p.add_argument("file")
    p.add_argument("--coords", default=None)
    _grid_args(p)
    p = add("approx-hausdorff", cmd_approx, "sampled Hausdorff distance of an instance")
    p.add_argument("file")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--refine", action="store_true", help="refine the extremal pair by Newton steps")
    _grid_args(p, 512)
    p = add("refine-pair", cmd_refine, "Newton refinement of a seed pair")
    p.add_argument("file")
    p.add_argument("--seed-a", required=True, metavar="X,Y")
    p.add_argument("--seed-b", required=True, metavar="X,Y")
    p = add("plot", cmd_plot, "SVG of a planar instance with its witness segment")
    p.add_argument("file")
    p.add_argument("--refine", action="store_true")
    _grid_args(p, 256)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    for name, default in (("out", None), ("seed", 0), ("alpha", 8), ("beta", 32), ("require_robust", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    random.seed(args.seed)
    np.random.seed(args.seed)
    try:
        text, code = args.fn(args)
    except (InputError, SarError, ValueError, ZeroDivisionError) as e:
        print(f"sar {args.command}: {e}", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as e:
            print(f"sar: cannot write {args.out}: {e.strerror}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
