"""Strict and exotic sentences over the reals, reductions to Hausdorff distance
questions, and desk-scale checking tools."""

from __future__ import annotations

from .algebra import Polynomial, TowerBound
from .bounds import BoundConfig, DeskScale
from .decide import GridSpec, PointCloud, Verdict, hausdorff, oracle_decide, sample_set
from .formula import (
    HausdorffInstance, PrenexSentence, SemiAlgebraicSet, parse_formula, parse_sentence,
    print_formula,
)

__all__ = [
    "BoundConfig", "DeskScale", "GridSpec", "HausdorffInstance", "PointCloud", "Polynomial",
    "PrenexSentence", "SemiAlgebraicSet", "TowerBound", "Verdict", "hausdorff", "oracle_decide",
    "parse_formula", "parse_sentence", "print_formula", "sample_set",
]
__version__ = "0.1.0"
