"""Matched desk-scale configurations and lattices.

Each check evaluates a reference sentence and a pipeline output on lattices
that contain the same points in original coordinates, so the two verdicts are
comparable. The reference runs with a robustness margin; the pipeline output
runs exactly, using the witnesses fixed by its construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bounds import BoundConfig, DeskScale
from .decide import GridSpec, Verdict, counterexample_lattice, oracle_decide
from .formula import HausdorffInstance, PrenexSentence, Quantifier, QuantifierBlock
from .reductions import (
    Trace, encode_directed_hausdorff, encode_membership, exotic_to_strict,
    expand_counterexamples, expand_exotic,
)

F = Fraction

EXPAND_CFG = BoundConfig(desk=DeskScale(universal=1, existential=2))
# H^2 < v_N becomes H_orig^2 < 2^-32 with chain length 2: 2^(N) = 8 d + 32
MEMBERSHIP_CFG = BoundConfig(desk=DeskScale(universal=1, existential=2, poly=2, degree=12, threshold=7))
EXOTIC_CFG = BoundConfig(desk=DeskScale(universal=1, existential=2, poly=2, degree=28, threshold=8))
MARGIN = F(1, 100)

# original-coordinate ranges matching the desk chain (C = 4, D = 16)
UNIVERSAL_HALF = 4
EXISTENTIAL_HALF = 16


@dataclass(frozen=True)
class DeskCheck:
    reference: Verdict
    pipeline: Verdict

    @property
    def agrees(self) -> bool:
        return self.reference is self.pipeline


def bounded_reference(s: PrenexSentence) -> PrenexSentence:
    """The input sentence with the desk ranges [-C, C] and [-D, D]."""
    blocks = [QuantifierBlock(b.quantifier, b.vars, UNIVERSAL_HALF if b.quantifier.universal else EXISTENTIAL_HALF)
              for b in s.blocks]
    return PrenexSentence(tuple(blocks), s.matrix)


def expand_grids(s: PrenexSentence, x_res: int = 16, y_res: int = 64) -> tuple:
    """(reference grid, pipeline grid) for counterexample expansion."""
    X = s.blocks[0].vars
    ref = GridSpec(resolution=y_res, margin=MARGIN, resolutions={x: x_res for x in X})
    out = GridSpec(resolution=y_res, resolutions={x: x_res for x in X})
    return ref, out


def check_expand(s: PrenexSentence) -> DeskCheck:
    ref_g, out_g = expand_grids(s)
    ref = oracle_decide(bounded_reference(s), ref_g)
    out = expand_counterexamples(s, EXPAND_CFG)
    return DeskCheck(ref, oracle_decide(out, out_g))


def zoomed_counterexamples(s: PrenexSentence, width: Fraction = F(1, 64), res: int = 16,
                           min_run: int = 3, max_zoom: int = 6):
    """Counterexample lattice of the expanded sentence around its middle coarse counterexample.

    The window shrinks by 4 (at most max_zoom times) until some axis shows
    min_run consecutive counterexamples. Returns None when the coarse lattice
    has no counterexample.
    """
    out = expand_counterexamples(s, EXPAND_CFG)
    _, g = expand_grids(s)
    coarse = counterexample_lattice(out, g)
    pts = coarse.points()
    if not pts:
        return None
    c = pts[len(pts) // 2]
    fine = None
    for _ in range(max_zoom + 1):
        boxes = {v: (x - width, x + width) for v, x in zip(coarse.vars, c)}
        fine = counterexample_lattice(out, g.with_(boxes=boxes, resolutions={v: res for v in coarse.vars}))
        if fine.longest_run() >= min_run:
            break
        width /= 4
    return fine


def check_exotic(s: PrenexSentence, y_half: Fraction = F(2), margin: Fraction = MARGIN) -> DeskCheck:
    """forall* x exists Y: phi with one leading variable.

    y_half is the half-width of the existential lattice in original coordinates.
    """
    X = s.blocks[0].vars
    if len(X) != 1:
        raise ValueError("the matched exotic lattice is set up for one leading variable")
    x = X[0]
    Y = s.blocks[1].vars if len(s.blocks) > 1 else ()
    y_res = 16 if len(Y) <= 1 else 8
    ex = expand_exotic(s, squared=True)
    xn = ex.blocks[1].vars[0]
    y_half = F(y_half)
    ref_g = GridSpec(resolution=16, margin=margin,
                     boxes={"eps": (F(1, 4), F(1, 2)), x: (F(-17, 16), F(15, 16)), xn: (-2, 2),
                            **{y: (-y_half, y_half) for y in Y}},
                     resolutions={"eps": 2, xn: 32, **{y: y_res for y in Y}})
    ref = oracle_decide(ex, ref_g)
    tr = Trace()
    out = exotic_to_strict(s, EXOTIC_CFG, tr)
    delta = tr.info["eps"][0]["delta"]
    out_g = GridSpec(resolution=16,
                     boxes={delta: (-1, 1), x: (F(-17, 64), F(15, 64)), xn: (F(-1, 8), F(1, 8)),
                            **{y: (-y_half / EXISTENTIAL_HALF, y_half / EXISTENTIAL_HALF) for y in Y}},
                     resolutions={xn: 32, **{y: y_res for y in Y}})
    return DeskCheck(ref, oracle_decide(out, out_g, tr.hints, tr.forms))


def check_membership(h: HausdorffInstance, margin: Fraction = MARGIN) -> DeskCheck:
    """Directed one-dimensional instances with sets inside [-2, 2]."""
    if not h.directed or h.n != 1 or h.A.hidden or h.B.hidden:
        raise ValueError("the matched membership lattice is set up for directed plain 1-D instances")
    ref_s = encode_directed_hausdorff(h)
    ref_g = GridSpec(resolution=32, margin=margin,
                     boxes={"e": (F(1, 16), F(1, 4)), "a1": (-2, 2), "b1": (-2, 2)},
                     resolutions={"e": 3})
    ref = oracle_decide(ref_s, ref_g)
    tr = Trace()
    out = encode_membership(h, MEMBERSHIP_CFG, tr)
    delta = tr.info["eps"][0]["delta"]
    out_g = GridSpec(resolution=32,
                     boxes={delta: (-1, 1), "a1": (F(-1, 2), F(1, 2)), "b1": (F(-1, 8), F(1, 8))},
                     resolutions={delta: 16})
    return DeskCheck(ref, oracle_decide(out, out_g, tr.hints, tr.forms))


def exotic_reading(s: PrenexSentence) -> PrenexSentence:
    """The same sentence with its leading forall read as forall*."""
    b0 = s.blocks[0]
    blocks = (QuantifierBlock(Quantifier.FORALL_STAR, b0.vars, b0.box),) + tuple(s.blocks[1:])
    return PrenexSentence(blocks, s.matrix)


@dataclass(frozen=True)
class CorpusResult:
    id: int
    expand: bool
    exotic: bool
    membership: bool
    run: int | None          # longest zoomed counterexample run, false rows only
    raw_isolated: int | None  # isolated counterexamples of the raw input, false rows only

    @property
    def preserved(self) -> bool:
        return self.expand and self.exotic and self.membership


def raw_counterexamples(s: PrenexSentence):
    """Counterexample lattice of the input itself on the reference grid, without margin."""
    ref, _ = expand_grids(s)
    return counterexample_lattice(bounded_reference(s), ref.with_(margin=F(0)))


def check_corpus_row(row: dict) -> CorpusResult:
    """All desk checks for one corpus row (sentence plus its Hausdorff companion)."""
    from .formula import instance_from_dict, parse_sentence

    s = parse_sentence(row["sentence"])
    ex = check_expand(s)
    ot = check_exotic(exotic_reading(s))
    mb = check_membership(instance_from_dict(row["hausdorff"]))
    run = iso = None
    if row["expected"] == Verdict.FALSE.value:
        z = zoomed_counterexamples(s)
        run = z.longest_run() if z is not None else 0
        iso = raw_counterexamples(s).isolated()
    return CorpusResult(
        row["id"],
        ex.agrees and ex.reference.value == row["expected"],
        ot.agrees and ot.reference.value == row["exotic_expected"],
        mb.agrees and mb.reference.value == row["hausdorff_expected"],
        run,
        iso,
    )
