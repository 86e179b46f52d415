"""Source-to-source pipelines between sentence classes and Hausdorff instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import Polynomial, double_exp, sum_polys
from .bounds import (
    DEFAULT, BoundConfig, compact_poly_bound_exponent, existential_range_exponent,
    hardness_exponent, threshold_exponent, universal_range_exponent,
)
from .decide import Composite, Hint
from .errors import (
    DimensionMismatchError, NotNormalizedError, PreconditionError, SizeExceededError,
    UnsupportedPositionError, WrongRelationError,
)
from .formula import (
    Atom, FormulaClass, FreshNames, HausdorffInstance, PrenexSentence, Quantifier,
    QuantifierBlock, Rel, SemiAlgebraicSet, all_names, classify, conj, contains_not, disj,
    formula_length, is_forall_strict, iter_atoms, map_atoms, rename_formula, substitute_formula,
)
from .gadgets import (
    chi, not_chi, scale_block, scale_polynomial, scaled_degree, strengthen_atom,
    tseitin_equation, tseitin_quadratic, tseitin_quartic, witness_float,
)
from .normalize import eliminate_relations, push_negations

FORALL, EXISTS = Quantifier.FORALL, Quantifier.EXISTS


@dataclass
class Trace:
    """Intermediate stages of a pipeline plus values for desk-scale checking.

    hints maps output variables to oracle Hints (values fixed by the
    construction, e.g. flattening witnesses); forms maps large atom
    polynomials to their Composite structure.
    """

    stages: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    hints: dict = field(default_factory=dict)
    forms: dict = field(default_factory=dict)

    def stage(self, name: str, obj) -> None:
        self.stages.append((name, obj))

    def names(self) -> list:
        return [n for n, _ in self.stages]


def expansion_envelope(L: int, K: int) -> int:
    """Recorded polynomial bound on output length in input length L and chain length K."""
    return 64 * (L + K + 4) ** 3


def _var(name: str) -> Polynomial:
    return Polynomial.var(name)


def _sq_norm(xs, ys) -> Polynomial:
    return sum_polys((_var(a) - _var(b)) * (_var(a) - _var(b)) for a, b in zip(xs, ys))


# ---------------------------------------------------------------------------
# counterexample expansion

def _check_forall_exists_strict(s: PrenexSentence) -> tuple:
    if s.free:
        raise PreconditionError(f"sentence has free variables {list(s.free)}")
    b = s.blocks
    if not b or b[0].quantifier is not FORALL or len(b) > 2 or (len(b) == 2 and b[1].quantifier is not EXISTS):
        raise PreconditionError("expected a sentence of shape forall X exists Y")
    if any(x.box is not None for x in b):
        raise PreconditionError("input blocks must range over all reals")
    if contains_not(s.matrix):
        raise NotNormalizedError("matrix contains negations; push them into the atoms first")
    for a in iter_atoms(s.matrix):
        if not a.rel.strict:
            raise WrongRelationError(f"non-strict atom {a.rel.value} in a strict sentence")
    X = b[0].vars
    Y = b[1].vars if len(b) == 2 else ()
    return X, Y


def expand_counterexamples(s: PrenexSentence, cfg: BoundConfig = DEFAULT,
                           trace: Trace | None = None) -> PrenexSentence:
    """Equivalent sentence on [-1,1] boxes whose counterexample set, if non-empty,
    contains an open ball."""
    X, Y = _check_forall_exists_strict(s)
    trace = trace if trace is not None else Trace()
    fresh = FreshNames(all_names(s))
    zs: list = []

    def strengthen(a: Atom):
        out, z = strengthen_atom(a, fresh)
        zs.append(z)
        return out

    phi = map_atoms(eliminate_relations(s.matrix), strengthen)
    E = tuple(zs) + tuple(Y)
    s1 = PrenexSentence((QuantifierBlock(FORALL, X), QuantifierBlock(EXISTS, E)), phi)
    trace.stage("strengthened", s1)

    n, m = len(X), len(E)
    N = cfg.pick("universal", universal_range_exponent(n, m, formula_length(s1), cfg))
    s2 = PrenexSentence((QuantifierBlock(FORALL, X, double_exp(N)), QuantifierBlock(EXISTS, E)), phi)
    trace.stage("universal-range", s2)
    M = cfg.pick("existential", existential_range_exponent(n, m, N, formula_length(s2), cfg))
    s3 = PrenexSentence((QuantifierBlock(FORALL, X, double_exp(N)),
                         QuantifierBlock(EXISTS, E, double_exp(M))), phi)
    trace.stage("existential-range", s3)

    K = cfg.check_chain(max(N, M), "counterexample expansion")
    u = [fresh.new("u") for _ in range(K + 1)]
    s4 = PrenexSentence((s3.blocks[0], s3.blocks[1], QuantifierBlock(EXISTS, u, 1)),
                        conj(chi(K, names=u), phi))
    s4 = scale_block(s4, 0, K, N)
    s4 = scale_block(s4, 1, K, M)
    out = PrenexSentence((QuantifierBlock(FORALL, X, 1), QuantifierBlock(EXISTS, E + tuple(u), 1)), s4.matrix)
    trace.stage("scaled", out)

    L_in, L_out = formula_length(s), formula_length(out)
    if L_out > expansion_envelope(L_in, K):
        raise SizeExceededError(f"output length {L_out} exceeds the envelope for input length {L_in}")
    trace.info.update({"N": N, "M": M, "K": K, "strengthening": list(zs), "chain": list(u),
                       "input_length": L_in, "output_length": L_out})
    return out


# ---------------------------------------------------------------------------
# hardness instance

def encode_hardness(s: PrenexSentence, cfg: BoundConfig = DEFAULT, directed: bool = False,
                    extra_levels: int = 0, trace: Trace | None = None) -> HausdorffInstance:
    """Hausdorff instance (A, B, t = m) with d_H(A, B) <= t iff s is true.

    directed=True returns the instance for the directed distance from the
    slab B to A, which is equivalent as well. extra_levels lengthens the chain
    to widen the gap in the false case.
    """
    trace = trace if trace is not None else Trace()
    psi_s = expand_counterexamples(s, cfg, trace)
    X = psi_s.blocks[0].vars
    Y = psi_s.blocks[1].vars
    n, m = len(X), len(Y)
    zero = conj(*[Atom(_var(x), Rel.EQ) for x in X])
    psi = disj(psi_s.matrix, zero)
    trace.stage("with-origin", PrenexSentence(psi_s.blocks, psi))

    L = formula_length(psi)
    N = cfg.pick("radius", hardness_exponent(L, n, m, cfg)) + extra_levels
    cfg.check_chain(N, "hardness instance")
    fresh = FreshNames(all_names(psi_s))
    U = [fresh.new("c") for _ in range(N + 1)]
    uN = _var(U[N])
    chain = chi(N, names=U)
    xbox = [Atom(sgn * uN * _var(x) - 1, Rel.LE) for x in X for sgn in (1, -1)]
    ybox = [Atom(sgn * _var(y) - 1, Rel.LE) for y in Y for sgn in (1, -1)]
    psi_scaled = substitute_formula(psi, {x: uN * _var(x) for x in X})
    coords = tuple(X) + tuple(Y) + tuple(U)
    A = SemiAlgebraicSet(coords, conj(chain, *xbox, *ybox, psi_scaled))
    B = SemiAlgebraicSet(coords, conj(chain, *xbox, *[Atom(_var(y), Rel.EQ) for y in Y]))
    meta = {"reduction": "hardness", "N": N, "C": f"2^(2^{N})", "chain": list(U),
            "chain_encoding": "chi-constraints", "n": n, "m": m, "length": L}
    trace.info.update({"hardness_N": N, "hardness_chain": list(U)})
    if directed:
        return HausdorffInstance(B, A, Fraction(m), True, meta)
    return HausdorffInstance(A, B, Fraction(m), False, meta)


def encode_hardness_simple(s: PrenexSentence, variant: str = "quadratic-system", cfg: BoundConfig = DEFAULT,
                           directed: bool = False, trace: Trace | None = None) -> HausdorffInstance:
    """encode_hardness with A described by quadratic equations or one quartic equation."""
    if variant not in ("quadratic-system", "single-quartic"):
        raise ValueError(f"unknown variant {variant!r}")
    h = encode_hardness(s, cfg, directed, trace=trace)
    A, B = (h.B, h.A) if directed else (h.A, h.B)
    fresh = FreshNames(all_names(A.defining) | set(A.coords))
    if variant == "quadratic-system":
        res = tseitin_quadratic(A.defining, fresh)
        if any(e.total_degree() > 2 for e in res.equations):
            raise AssertionError("quadratic flattening produced a degree > 2 equation")
        defining = res.formula
    else:
        res = tseitin_quartic(A.defining, fresh)
        if res.poly.total_degree() > 4:
            raise AssertionError("quartic flattening produced degree > 4")
        defining = res.formula
    A2 = SemiAlgebraicSet(A.coords, defining, A.hidden + tuple(res.fresh))
    if any(a.poly.total_degree() > 2 for a in iter_atoms(B.defining)):
        raise AssertionError("slab formula has degree > 2")
    meta = dict(h.meta, variant=variant)
    if directed:
        return HausdorffInstance(B, A2, h.t, True, meta)
    return HausdorffInstance(A2, B, h.t, False, meta)


# ---------------------------------------------------------------------------
# Hausdorff sentences

def _rename_set(S: SemiAlgebraicSet, coords: list, hidden: list):
    mapping = dict(zip(S.coords, coords))
    mapping.update(zip(S.hidden, hidden))
    return rename_formula(S.defining, mapping)


def _direction_names(h: HausdorffInstance, suffix: str, taken: set) -> dict:
    def pick(base: str) -> str:
        name = base + suffix
        k = 1
        while name in taken:
            name = f"{base}{suffix}_{k}"
            k += 1
        taken.add(name)
        return name

    n = h.n
    return {
        "eps": pick("e"),
        "a": [pick(f"a{i + 1}") for i in range(n)],
        "b": [pick(f"b{i + 1}") for i in range(n)],
        "ha": [pick(f"ha{i + 1}") for i in range(len(h.A.hidden))],
        "hb": [pick(f"hb{i + 1}") for i in range(len(h.B.hidden))],
    }


def _directed_parts(A: SemiAlgebraicSet, B: SemiAlgebraicSet, t: Fraction, nm: dict):
    """(universal vars, existential vars, matrix) for d(A, B) <= t in the strict form."""
    t = Fraction(t)
    p, q = t.numerator, t.denominator
    phiA = _rename_set(A, nm["a"], nm["ha"])
    phiB = _rename_set(B, nm["b"], nm["hb"])
    e = _var(nm["eps"])
    close = q * q * _sq_norm(nm["a"], nm["b"]) - p * p - q * q * e
    matrix = disj(Atom(e, Rel.LE), push_negations(phiA, True), conj(phiB, Atom(close, Rel.LT)))
    univ = [nm["eps"]] + nm["a"] + nm["ha"]
    exist = nm["b"] + nm["hb"]
    return univ, exist, matrix


def encode_directed_hausdorff(h: HausdorffInstance) -> PrenexSentence:
    """forall eps, a exists b: eps <= 0 or not A(a) or (B(b) and |a-b|^2 < t^2 + eps).

    Undirected instances give the conjunction of both directions."""
    if h.A.ambient_dim != h.B.ambient_dim:
        raise DimensionMismatchError("ambient dimensions differ")
    taken: set = set()
    nm = _direction_names(h, "", taken)
    U, E, M = _directed_parts(h.A, h.B, h.t, nm)
    if not h.directed:
        nm2 = _swap_hidden(_direction_names(h, "_r", taken))
        U2, E2, M2 = _directed_parts(h.B, h.A, h.t, nm2)
        U, E, M = U + U2, E + E2, conj(M, M2)
    blocks = [QuantifierBlock(FORALL, U)]
    if E:
        blocks.append(QuantifierBlock(EXISTS, E))
    return PrenexSentence(tuple(blocks), M)


def _swap_hidden(nm: dict) -> dict:
    """Names for the reverse direction: B plays the role of A."""
    return {"eps": nm["eps"], "a": nm["a"], "b": nm["b"], "ha": nm["hb"], "hb": nm["ha"]}


# ---------------------------------------------------------------------------
# epsilon pipeline shared by the membership reductions

@dataclass
class _EpsProblem:
    """forall eps > 0, X exists Y: [F != 0 or] (G = 0 and P < eps).

    F and G are polynomials; F is None when absent. Witness callbacks give
    hints in original coordinates from float arrays.
    """

    univ: list
    exist: list
    F: Polynomial | None
    G: Polynomial
    P: Polynomial
    eps: str
    univ_hints: dict = field(default_factory=dict)    # var -> (deps, fn) in original coordinates
    exist_hints: dict = field(default_factory=dict)


def _scaled_hint(deps: tuple, fn, levels: dict, u_vals: list, target_level: int) -> Hint:
    """Hint over scaled coordinates built from one in original coordinates."""
    def g(env, deps=deps, fn=fn):
        orig = {d: env[d] / u_vals[levels[d]] for d in deps}
        return fn(orig) * u_vals[target_level]
    return Hint(tuple(deps), g)


def _eps_pipeline(prob: _EpsProblem, cfg: BoundConfig, fresh: FreshNames, trace: Trace, tag: str):
    """Turn an epsilon problem into a bounded forall-strict sentence.

    Returns (universal vars, existential vars, matrix)."""
    e = prob.eps
    dl = fresh.new("d")
    E, D = _var(e), _var(dl)
    pos = Atom((D * D * E - 1) * (D * D * E - 1), Rel.GT)
    lead = [pos] + ([Atom(prob.F * prob.F, Rel.GT)] if prob.F is not None else [])
    univ = [e, dl] + list(prob.univ)
    exist = list(prob.exist)
    core = disj(*lead, conj(Atom(prob.G, Rel.EQ), Atom(prob.P - E, Rel.LT)))
    blocks = [QuantifierBlock(FORALL, univ)] + ([QuantifierBlock(EXISTS, exist)] if exist else [])
    s1 = PrenexSentence(tuple(blocks), core)
    trace.stage(f"{tag}:positive-eps", s1)

    n, m = len(univ), max(1, len(exist))
    N = cfg.pick("universal", universal_range_exponent(n, m, formula_length(s1), cfg))
    M = cfg.pick("existential", existential_range_exponent(n, m, N, formula_length(s1), cfg))
    b = fresh.new("b")
    Bv = _var(b)
    slack = prob.P - E + Bv * Bv
    pe = prob.P - E
    K = cfg.pick("poly", compact_poly_bound_exponent(pe, max(N, M), max(1, len(pe.vars)), cfg))
    H_parts = (prob.G, slack)
    H = prob.G * prob.G + slack * slack
    s3 = PrenexSentence((QuantifierBlock(FORALL, univ, double_exp(N)),
                         QuantifierBlock(EXISTS, exist + [b], double_exp(max(M, K)))),
                        disj(*lead, Atom(H, Rel.EQ)))
    trace.stage(f"{tag}:slack", s3)

    S = cfg.check_chain(max(N, M, K), "epsilon pipeline")
    u = [fresh.new("u") for _ in range(S + 1)]
    levels = {v: N for v in univ}
    levels.update({v: M for v in exist})
    levels[b] = K
    d0 = scaled_degree(disj(*lead, Atom(H, Rel.EQ)), levels)
    d = cfg.pick("degree", d0)
    if d < d0:
        raise PreconditionError(f"scaling degree override {d} is below the needed {d0}")
    d += d % 2
    scaled_lead = [Atom(scale_polynomial(a.poly, levels, S, d, u), a.rel) for a in lead]
    half_parts = [scale_polynomial(p, levels, S, d // 2, u) for p in H_parts]
    Hs = scale_polynomial(H, levels, S, d, u)
    trace.stage(f"{tag}:scaled", PrenexSentence(
        (QuantifierBlock(FORALL, univ + u, 1), QuantifierBlock(EXISTS, exist + [b], 1)),
        disj(not_chi(S, names=u), *scaled_lead, Atom(Hs, Rel.EQ))))

    L4 = formula_length(disj(not_chi(S, names=u), *scaled_lead, Atom(Hs, Rel.EQ)))
    N2 = cfg.pick("threshold", threshold_exponent(L4, len(univ) + len(u), len(exist) + 1, cfg))
    cfg.check_chain(N2, "threshold chain")
    v = [fresh.new("v") for _ in range(N2 + 1)]
    final_poly = Hs * Hs - _var(v[N2])
    h_name, g_name, s_name = "_h", "_g", "_s"
    trace.forms[final_poly] = Composite(
        _var(h_name) * _var(h_name) - _var(v[N2]),
        ((h_name, Composite(_var(g_name) * _var(g_name) + _var(s_name) * _var(s_name),
                            ((g_name, half_parts[0]), (s_name, half_parts[1])))),))
    matrix = disj(not_chi(N2, names=v), not_chi(S, names=u), *scaled_lead, Atom(final_poly, Rel.LT))
    U_all = univ + u + v
    E_all = exist + [b]

    # hints: values fixed by the construction, in scaled coordinates
    u_vals = [float(Fraction(1, 1 << (1 << i))) for i in range(S + 1)]
    hints: dict = {}
    uN = u_vals[N]
    hints[e] = Hint((dl,), lambda env, dl=dl: np.where(env[dl] != 0, uN ** 3 / np.where(env[dl] != 0, env[dl], 1.0) ** 2, np.inf))
    for var_, (deps, fn) in prob.univ_hints.items():
        hints[var_] = _scaled_hint(deps, fn, levels, u_vals, levels[var_])
    for var_, (deps, fn) in prob.exist_hints.items():
        hints[var_] = _scaled_hint(deps, fn, levels, u_vals, levels[var_])
    pvars = tuple(sorted(set(prob.P.vars) - {e}))
    Pp = prob.P

    def slack_fn(orig, Pp=Pp, e=e):
        val = eval_float_poly(Pp, orig)
        return np.sqrt(np.maximum(orig[e] - val, 0.0))
    hints[b] = _scaled_hint((e,) + pvars, slack_fn, levels, u_vals, K)
    trace.hints.update(hints)
    trace.info.setdefault("eps", []).append({"tag": tag, "delta": dl, "N": N, "M": M, "K": K, "S": S, "d": d, "threshold": N2})
    return U_all, E_all, matrix


def eval_float_poly(p: Polynomial, values) -> np.ndarray:
    from .algebra import eval_float
    return np.asarray(eval_float(p, values), dtype=float)


def _finish(U: list, E: list, matrix) -> PrenexSentence:
    blocks = [QuantifierBlock(FORALL, U, 1)]
    if E:
        blocks.append(QuantifierBlock(EXISTS, E, 1))
    out = PrenexSentence(tuple(blocks), matrix)
    if classify(out.matrix) is not FormulaClass.QFF_STRICT or not is_forall_strict(out):
        raise AssertionError("pipeline output is not a strict forall-exists sentence")
    return out


def _flatten(f, fresh: FreshNames):
    res = tseitin_equation(f, fresh, copies=False)
    defs = res.defs

    def maker(name):
        def fn(orig, name=name):
            return witness_float(defs, orig)[name]
        return fn
    return res.poly, list(res.fresh), maker


def _membership_direction(A: SemiAlgebraicSet, B: SemiAlgebraicSet, t: Fraction, nm: dict,
                          cfg: BoundConfig, fresh: FreshNames, trace: Trace, tag: str):
    t = Fraction(t)
    p, q = t.numerator, t.denominator
    phiA = _rename_set(A, nm["a"], nm["ha"])
    phiB = _rename_set(B, nm["b"], nm["hb"])
    FA, WA, mkA = _flatten(phiA, fresh)
    FB, WB, mkB = _flatten(phiB, fresh)
    # eps absorbs the factor q^2: |a-b|^2 < t^2 + eps  iff  q^2|a-b|^2 - p^2 < q^2 eps
    P = q * q * _sq_norm(nm["a"], nm["b"]) - p * p
    univ = nm["a"] + nm["ha"] + WA
    exist = nm["b"] + nm["hb"] + WB
    deps_a = tuple(nm["a"] + nm["ha"])
    deps_b = tuple(nm["b"] + nm["hb"])
    prob = _EpsProblem(univ, exist, FA, FB, P, nm["eps"],
                       univ_hints={w: (deps_a, mkA(w)) for w in WA} if not nm["ha"] else {},
                       exist_hints={w: (deps_b, mkB(w)) for w in WB} if not nm["hb"] else {})
    return _eps_pipeline(prob, cfg, fresh, trace, tag)


def encode_membership(h: HausdorffInstance, cfg: BoundConfig = DEFAULT,
                      trace: Trace | None = None) -> PrenexSentence:
    """Bounded forall-strict sentence equivalent to d(A, B) <= t (both directions if undirected)."""
    trace = trace if trace is not None else Trace()
    taken: set = set()
    nm = _direction_names(h, "", taken)
    fresh = FreshNames(taken)
    trace.stage("hausdorff-sentence", encode_directed_hausdorff(h))
    U, E, M = _membership_direction(h.A, h.B, h.t, nm, cfg, fresh, trace, "ab")
    if not h.directed:
        nm2 = _swap_hidden(_direction_names(h, "_r", taken))
        fresh.reserve(taken)
        U2, E2, M2 = _membership_direction(h.B, h.A, h.t, nm2, cfg, fresh, trace, "ba")
        U, E, M = U + U2, E + E2, conj(M, M2)
    out = _finish(U, E, M)
    trace.stage("strict", out)
    return out


# ---------------------------------------------------------------------------
# exotic quantifiers

def _copy_names(names, taken: set, suffix: str) -> list:
    out = []
    for x in names:
        k, name = 0, f"{x}{suffix}"
        while name in taken:
            k += 1
            name = f"{x}{suffix}{k}"
        taken.add(name)
        out.append(name)
    return out


def expand_exotic(s: PrenexSentence, squared: bool = True) -> PrenexSentence:
    """Replace a leading forall* / exists* block by classical quantifiers.

    forall* X: phi  becomes  forall eps, X exists X~: eps <= 0 or (|X - X~|^2 < r and phi(X~))
    exists* X: phi  becomes  exists eps, X forall X~: eps > 0 and (|X - X~|^2 >= r or phi(X~))
    with r = eps^2 (squared) or eps.
    """
    if not s.blocks or not s.blocks[0].quantifier.exotic:
        raise PreconditionError("the leading block must use forall* or exists*")
    for b in s.blocks[1:]:
        if b.quantifier.exotic:
            raise UnsupportedPositionError("exotic quantifiers are supported only in the leading block")
    lead = s.blocks[0]
    taken = set(all_names(s))
    X = list(lead.vars)
    Xt = _copy_names(X, taken, "_n")
    eps = _copy_names(["eps"], taken, "")[0]
    e = _var(eps)
    r = e * e if squared else e
    dist = _sq_norm(X, Xt) - r
    moved = rename_formula(s.matrix, dict(zip(X, Xt)))
    if lead.quantifier is Quantifier.FORALL_STAR:
        outer_q, inner_q = FORALL, EXISTS
        matrix = disj(Atom(e, Rel.LE), conj(Atom(dist, Rel.LT), moved))
    else:
        outer_q, inner_q = EXISTS, FORALL
        matrix = conj(Atom(e, Rel.GT), disj(Atom(dist, Rel.GE), moved))
    if lead.box is None:
        blocks = [QuantifierBlock(outer_q, [eps] + X)]
    else:
        blocks = [QuantifierBlock(outer_q, [eps]), QuantifierBlock(outer_q, X, lead.box)]
    rest = list(s.blocks[1:])
    if rest and rest[0].quantifier is inner_q and rest[0].box == lead.box:
        rest[0] = QuantifierBlock(inner_q, Xt + list(rest[0].vars), lead.box)
    else:
        rest.insert(0, QuantifierBlock(inner_q, Xt, lead.box))
    return PrenexSentence(tuple(blocks + rest), matrix, s.free)


def exotic_to_strict(s: PrenexSentence, cfg: BoundConfig = DEFAULT,
                     trace: Trace | None = None) -> PrenexSentence:
    """Bounded forall-strict sentence equivalent to forall* X exists Y: phi."""
    trace = trace if trace is not None else Trace()
    b = s.blocks
    if s.free:
        raise PreconditionError("sentence has free variables")
    if not b or b[0].quantifier is not Quantifier.FORALL_STAR or len(b) > 2 \
            or (len(b) == 2 and b[1].quantifier is not EXISTS):
        raise PreconditionError("expected a sentence of shape forall* X exists Y")
    if any(x.box is not None for x in b):
        raise PreconditionError("input blocks must range over all reals")
    trace.stage("expanded", expand_exotic(s, squared=False))
    X = list(b[0].vars)
    Y = list(b[1].vars) if len(b) == 2 else []
    taken = set(all_names(s))
    X0 = _copy_names(X, taken, "_n")
    eps = _copy_names(["eps"], taken, "")[0]
    fresh = FreshNames(taken)
    phi0 = rename_formula(s.matrix, dict(zip(X, X0)))
    G, W, mk = _flatten(phi0, fresh)
    P = _sq_norm(X, X0)
    deps = tuple(X0 + Y)
    prob = _EpsProblem(X, X0 + Y + W, None, G, P, eps, exist_hints={w: (deps, mk(w)) for w in W})
    U, E, M = _eps_pipeline(prob, cfg, fresh, trace, "exotic")
    out = _finish(U, E, M)
    trace.stage("strict", out)
    return out


# ---------------------------------------------------------------------------
# existential-closure distance to Hausdorff

def erd_to_hausdorff(A: SemiAlgebraicSet, B: SemiAlgebraicSet) -> HausdorffInstance:
    """Lift A to height 0 and B to height 1: the closure question becomes d(A', B') <= 1."""
    if A.ambient_dim != B.ambient_dim:
        raise DimensionMismatchError(f"ambient dimensions differ: {A.ambient_dim} vs {B.ambient_dim}")
    taken = set(A.coords) | set(A.hidden) | set(B.coords) | set(B.hidden)
    lift = _copy_names(["h"], taken, "")[0]
    A2 = SemiAlgebraicSet(A.coords + (lift,), conj(A.defining, Atom(_var(lift), Rel.EQ)), A.hidden)
    B2 = SemiAlgebraicSet(B.coords + (lift,), conj(B.defining, Atom(_var(lift) - 1, Rel.EQ)), B.hidden)
    return HausdorffInstance(A2, B2, Fraction(1), True, {"reduction": "erd", "lift": lift})
