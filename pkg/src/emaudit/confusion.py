"""Confusion-matrix accumulation for entity matching.

In single mode a legitimate pair counts once per side that belongs to the
audited group, so a pair whose two records are both in the group adds 2 to
its outcome cell. In pairwise mode the pair itself is the unit and counts
once. The overall matrix counts every pair exactly once.

Accumulation runs over a columnar ``PairTable`` (numpy arrays of group
bitmasks and outcome codes). Plain correspondence lists are converted on the
fly; callers auditing many targets should build the table once.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from emaudit.dataset import Correspondence, Label
from emaudit.errors import LengthMismatch, MissingDecision, MissingScore
from emaudit.groups import GroupEncoding
from emaudit.matchers import DEFAULT_MATCH_THRESHOLD, score_match


class Outcome(enum.IntEnum):
    TP = 0
    FP = 1
    FN = 2
    TN = 3


def classify(decision: Label | None, truth: Label | None) -> Outcome:
    if decision is None:
        raise MissingDecision("correspondence has no decision")
    if truth is None:
        raise ValueError("correspondence has no ground-truth label")
    predicted = decision is Label.MATCH
    actual = truth is Label.MATCH
    return Outcome(2 * (not predicted) + (not actual))


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    @classmethod
    def from_counts(cls, counts) -> ConfusionMatrix:
        tp, fp, fn, tn = (int(x) for x in counts)
        return cls(tp, fp, fn, tn)

    def as_dict(self) -> dict[str, int]:
        return {"TP": self.tp, "FP": self.fp, "FN": self.fn, "TN": self.tn}


def _ratio(num: int, den: int) -> Fraction | None:
    return Fraction(num, den) if den else None


@dataclass(frozen=True)
class RateSet:
    """Empirical rates; ``None`` marks a zero denominator. Values are exact rationals."""

    tpr: Fraction | None = None
    fpr: Fraction | None = None
    fnr: Fraction | None = None
    tnr: Fraction | None = None
    ppv: Fraction | None = None
    npv: Fraction | None = None
    fdr: Fraction | None = None
    forr: Fraction | None = None
    accuracy: Fraction | None = None
    positive_rate: Fraction | None = None
    precision: Fraction | None = None
    recall: Fraction | None = None
    f1: Fraction | None = None

    def as_floats(self) -> dict[str, float | None]:
        return {
            f.name: None if getattr(self, f.name) is None else float(getattr(self, f.name))
            for f in fields(self)
        }


def rates(m: ConfusionMatrix) -> RateSet:
    tp, fp, fn, tn = m.tp, m.fp, m.fn, m.tn
    tpr = _ratio(tp, tp + fn)
    ppv = _ratio(tp, tp + fp)
    return RateSet(
        tpr=tpr,
        fpr=_ratio(fp, fp + tn),
        fnr=_ratio(fn, tp + fn),
        tnr=_ratio(tn, fp + tn),
        ppv=ppv,
        npv=_ratio(tn, tn + fn),
        fdr=_ratio(fp, tp + fp),
        forr=_ratio(fn, tn + fn),
        accuracy=_ratio(tp + tn, m.total),
        positive_rate=_ratio(tp + fp, m.total),
        precision=ppv,
        recall=tpr,
        f1=_ratio(2 * tp, 2 * tp + fp + fn),
    )


# -- columnar accumulation --------------------------------------------------


def _mask_dtype(width: int):
    return np.int64 if width < 63 else object


class PairTable:
    """Column view of a correspondence list: group masks, scores, outcome codes."""

    __slots__ = ("width", "left", "right", "truth", "decision", "score", "outcome")

    def __init__(self, width, left, right, truth, decision, score):
        self.width = width
        self.left = left
        self.right = right
        self.truth = truth  # bool array, True = Match
        self.decision = decision  # bool array or None when unresolved
        self.score = score  # float array with NaN for missing, or None
        if decision is None:
            self.outcome = None
        else:
            self.outcome = (2 * (~decision).astype(np.int8) + (~truth).astype(np.int8))

    def __len__(self) -> int:
        return len(self.truth)

    @classmethod
    def from_correspondences(
        cls, cs: Sequence[Correspondence], threshold: float | None = None, *, width: int | None = None
    ) -> PairTable:
        """Build the table, resolving decisions.

        A present decision is used unless ``threshold`` is given, in which
        case every decision is recomputed from the score. Rows with a score
        but no decision fall back to ``score > 0.5``.
        """
        if width is None:
            width = cs[0].groups_left.width if cs else 0
        dtype = _mask_dtype(width)
        n = len(cs)
        left = np.empty(n, dtype=dtype)
        right = np.empty(n, dtype=dtype)
        truth = np.empty(n, dtype=bool)
        score = np.full(n, np.nan)
        for i, c in enumerate(cs):
            left[i] = c.groups_left.bits
            right[i] = c.groups_right.bits
            truth[i] = c.truth is Label.MATCH
            if c.score is not None:
                score[i] = c.score
        decision = np.empty(n, dtype=bool)
        for i, c in enumerate(cs):
            decision[i] = resolve_decision(c, threshold) is Label.MATCH
        return cls(width, left, right, truth, decision, score)

    def at_threshold(self, threshold: float) -> PairTable:
        """Same pairs with decisions recomputed as ``score > threshold``."""
        if self.score is None or np.isnan(self.score).any():
            raise MissingScore("every correspondence needs a score to re-threshold")
        if not 0.0 <= threshold <= 1.0:
            raise ValueError(f"threshold {threshold} outside [0, 1]")
        return PairTable(
            self.width, self.left, self.right, self.truth, self.score > threshold, self.score
        )

    def swapped(self) -> PairTable:
        return PairTable(self.width, self.right, self.left, self.truth, self.decision, self.score)

    def members(self, group: GroupEncoding, side: str) -> np.ndarray:
        masks = self.left if side == "left" else self.right
        if group.width != self.width and len(self):
            raise LengthMismatch(f"group width {group.width} != table width {self.width}")
        g = group.bits
        if masks.dtype == object:
            return np.fromiter(((int(m) & g) == g for m in masks), dtype=bool, count=len(masks))
        return (masks & g) == g

    def count(self, weights: np.ndarray | None = None) -> ConfusionMatrix:
        if self.outcome is None:
            raise MissingDecision("pair table has unresolved decisions")
        counts = np.bincount(self.outcome, weights=weights, minlength=4)
        return ConfusionMatrix.from_counts(np.rint(counts).astype(np.int64))


def resolve_decision(c: Correspondence, threshold: float | None = None) -> Label:
    if threshold is None and c.decision is not None:
        return c.decision
    if c.score is None:
        if threshold is not None:
            raise MissingScore(
                f"({c.id_left}, {c.id_right}) has no score to apply threshold {threshold}"
            )
        raise MissingDecision(f"({c.id_left}, {c.id_right}) has no decision or score")
    return score_match(c.score, DEFAULT_MATCH_THRESHOLD if threshold is None else threshold)


def as_table(cs: Sequence[Correspondence] | PairTable, threshold: float | None = None) -> PairTable:
    if isinstance(cs, PairTable):
        return cs if threshold is None else cs.at_threshold(threshold)
    return PairTable.from_correspondences(cs, threshold)


def accumulate_single(cs, g: GroupEncoding) -> ConfusionMatrix:
    table = as_table(cs)
    if not len(table):
        return ConfusionMatrix()
    weight = table.members(g, "left").astype(np.int64) + table.members(g, "right")
    return table.count(weight)


def accumulate_pairwise(cs, pair: tuple[GroupEncoding, GroupEncoding]) -> ConfusionMatrix:
    table = as_table(cs)
    if not len(table):
        return ConfusionMatrix()
    return table.count(pairwise_mask(table, pair).astype(np.int64))


def pairwise_mask(table: PairTable, pair: tuple[GroupEncoding, GroupEncoding]) -> np.ndarray:
    s, t = pair
    return (table.members(s, "left") & table.members(t, "right")) | (
        table.members(t, "left") & table.members(s, "right")
    )


def overall_matrix(cs) -> ConfusionMatrix:
    table = as_table(cs)
    if not len(table):
        return ConfusionMatrix()
    return table.count()
