"""Quantitative bounds: elimination output size, ball radius, epsilon floor and
the range exponents N, M, K."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .algebra import Polynomial, TowerBound
from .errors import PreconditionError, SizeExceededError


@dataclass(frozen=True)
class DeskScale:
    """Explicit small exponents that replace the proof-sized ones for runs at desk scale.

    None keeps the value computed from the bound formulas.
    """

    universal: int | None = None
    existential: int | None = None
    poly: int | None = None
    threshold: int | None = None
    radius: int | None = None
    degree: int | None = None


@dataclass(frozen=True)
class BoundConfig:
    alpha: int = 8
    beta: int = 32
    desk: DeskScale | None = None
    max_chain: int = 10_000

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be a positive integer")
        if self.beta < max(32, self.alpha):
            raise ValueError("beta must be at least max(32, alpha)")

    def pick(self, field_name: str, computed: int) -> int:
        """The desk override for field_name if set, else the computed exponent."""
        if self.desk is not None:
            v = getattr(self.desk, field_name)
            if v is not None:
                return v
        return computed

    def check_chain(self, K: int, what: str) -> int:
        if K > self.max_chain:
            raise SizeExceededError(
                f"{what} needs a squaring chain of length {K} > max_chain={self.max_chain}; "
                "use a DeskScale override or raise max_chain")
        return K


DEFAULT = BoundConfig()


def clog2(L: int) -> int:
    """ceil(log2 L) for L >= 1."""
    if L < 1:
        raise ValueError("log of a non-positive number")
    return (L - 1).bit_length()


def qe_size_bound(L: int, block_sizes, m: int, cfg: BoundConfig = DEFAULT) -> TowerBound:
    """L^(alpha^(k+1) * n_1 ... n_k * m)."""
    sizes = list(block_sizes)
    if L < 2 or m < 1 or any(n < 1 for n in sizes):
        raise PreconditionError("need L >= 2 and all block sizes >= 1")
    exponent = cfg.alpha ** (len(sizes) + 1) * math.prod(sizes) * m
    return TowerBound.pow(TowerBound.lit(L), TowerBound.lit(exponent))


def qe_size_log2(L: int, block_sizes, m: int, cfg: BoundConfig = DEFAULT) -> int:
    """An integer upper bound for log2 of qe_size_bound."""
    sizes = list(block_sizes)
    return cfg.alpha ** (len(sizes) + 1) * math.prod(sizes) * m * clog2(L)


def ball_radius_bound(L: int, n: int) -> TowerBound:
    """2^(L^(8n))."""
    if L < 4:
        raise PreconditionError("the ball bound needs complexity L >= 4")
    if n < 1:
        raise PreconditionError("dimension must be positive")
    return TowerBound.exp2(TowerBound.pow(TowerBound.lit(L), TowerBound.lit(8 * n)))


def epsilon_lower_bound(L: int, block_sizes, cfg: BoundConfig = DEFAULT) -> TowerBound:
    """Denominator 2^(L^(beta^(k+2) n_1 ... n_k)); the guaranteed epsilon is its reciprocal."""
    sizes = list(block_sizes)
    if L < 2 or not sizes or any(n < 1 for n in sizes):
        raise PreconditionError("need L >= 2 and k >= 1 positive block sizes")
    exponent = cfg.beta ** (len(sizes) + 2) * math.prod(sizes)
    return TowerBound.exp2(TowerBound.pow(TowerBound.lit(L), TowerBound.lit(exponent)))


def epsilon_exponent(L: int, block_sizes, cfg: BoundConfig = DEFAULT) -> int:
    """e with epsilon_lower_bound = 2^(L^e)."""
    sizes = list(block_sizes)
    return cfg.beta ** (len(sizes) + 2) * math.prod(sizes)


def universal_range_exponent(n: int, m: int, L: int, cfg: BoundConfig = DEFAULT) -> int:
    """N = ceil(8 alpha^2 log(L) n^2 m)."""
    if n < 1 or m < 1 or L < 2:
        raise PreconditionError("need n, m >= 1 and L >= 2")
    return 8 * cfg.alpha ** 2 * clog2(L) * n * n * m


def existential_range_exponent(n: int, m: int, N: int, L: int, cfg: BoundConfig = DEFAULT) -> int:
    """M = ceil(8 alpha^3 log(L) n (n + N + 1) m)."""
    if n < 1 or m < 1 or L < 2 or N < 0:
        raise PreconditionError("need n, m >= 1, N >= 0 and L >= 2")
    return 8 * cfg.alpha ** 3 * clog2(L) * n * (n + N + 1) * m


def constant_bound_exponent(c: int) -> int:
    """Smallest K with 2^(2^K) >= |c|."""
    c = abs(c)
    K = 0
    while (1 << (1 << K)) < c:
        K += 1
    return K


def compact_poly_bound_exponent(p: Polynomial, N: int, n: int, cfg: BoundConfig = DEFAULT,
                                L: int | None = None) -> int:
    """K such that |p| <= 2^(2^K) on [-2^(2^N), 2^(2^N)]^n.

    Constants are bounded directly. Otherwise K = ceil(8 log|psi| alpha^3 n (N+1)),
    with log|psi| taken from the elimination size bound for a formula of length L
    (the caller passes the measured length; default uses a crude length of p).
    """
    if p.is_constant():
        return constant_bound_exponent(p.constant_value())
    if L is None:
        from .formula import poly_length
        L = max(4, poly_length(p, max(1, len(p.vars))) + 2)
    log_psi = qe_size_log2(L, [1, n], N + 1, cfg)
    return 8 * log_psi * cfg.alpha ** 3 * n * (N + 1)


def interval_bound_exponent(p: Polynomial, N: int) -> int:
    """Smallest K with sum |c| * C^deg <= 2^(2^K), where C = 2^(2^N): a direct sup bound."""
    total = sum(abs(c) for _, c in p.items())
    if total == 0:
        return 0
    deg = p.total_degree()
    log_bound = clog2(total) + deg * (1 << N)
    K = 0
    while (1 << K) < log_bound:
        K += 1
    return K


def interval_sup(p: Polynomial, box: Fraction) -> Fraction:
    """Upper bound on |p| over [-box, box]^n by the triangle inequality."""
    box = Fraction(box)
    return sum((abs(Fraction(c)) * box ** sum(e for _, e in m) for m, c in p.items()), Fraction(0))


def hardness_exponent(L: int, n: int, m: int, cfg: BoundConfig = DEFAULT) -> int:
    """Smallest-by-construction N with 2^(2^N) > m * 2^(L^e), e = beta^4 n (n+m)."""
    e = epsilon_exponent(L, [n, n + m], cfg)
    return e * clog2(L) + 1 + max(0, clog2(max(1, m)))


def threshold_exponent(L: int, n: int, m: int, cfg: BoundConfig = DEFAULT) -> int:
    """Smallest-by-construction N with 2^(-2^N) < 2^(-L^(beta^4 n m))."""
    if n < 1 or m < 1 or L < 2:
        raise PreconditionError("need n, m >= 1 and L >= 2")
    return cfg.beta ** 4 * n * m * clog2(L) + 1


def bounds_table(n: int, m: int, L: int, cfg: BoundConfig = DEFAULT) -> dict:
    """Key quantities for a sentence with n universal and m existential variables."""
    N = universal_range_exponent(n, m, L, cfg)
    M = existential_range_exponent(n, m, N, L, cfg)
    out = {
        "n": n, "m": m, "L": L, "alpha": cfg.alpha, "beta": cfg.beta,
        "N": N, "M": M,
        "C": f"2^(2^{N})", "D": f"2^(2^{M})",
        "qe_size": str(qe_size_bound(L, [n], m, cfg)),
        "epsilon_inverse": str(epsilon_lower_bound(L, [n, n + m], cfg)),
    }
    if L >= 4:
        out["ball_radius"] = str(ball_radius_bound(L, n + m))
    return out
