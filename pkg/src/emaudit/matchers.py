"""String similarity features and the two built-in baseline matchers.

``rule_match`` evaluates a disjunction of conjunctive similarity predicates.
``score_match`` thresholds a confidence score; a pair is a match only when
the score is strictly greater than the threshold.
"""

from __future__ import annotations

import enum
import math
import operator
import string
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from emaudit.dataset import Correspondence, Label
from emaudit.errors import MissingAttribute

DEFAULT_MATCH_THRESHOLD = 0.5

_PUNCT = str.maketrans("", "", string.punctuation)


class Feature(str, enum.Enum):
    EXACT = "exact"
    LEVENSHTEIN = "levenshtein"
    JACCARD = "jaccard"
    COSINE = "cosine"


class Comparator(str, enum.Enum):
    GT = "gt"
    GE = "ge"
    EQ = "eq"
    LT = "lt"
    LE = "le"

    def __call__(self, value: float, threshold: float) -> bool:
        return _OPS[self](value, threshold)


_OPS = {
    Comparator.GT: operator.gt,
    Comparator.GE: operator.ge,
    Comparator.EQ: operator.eq,
    Comparator.LT: operator.lt,
    Comparator.LE: operator.le,
}


def levenshtein_distance(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def tokenize(text: str) -> list[str]:
    return text.translate(_PUNCT).split()


def similarity(feature: Feature | str, a: str, b: str, *, lowercase: bool = True) -> float:
    feature = Feature(feature)
    if lowercase:
        a, b = a.lower(), b.lower()
    if feature is Feature.EXACT:
        return 1.0 if a == b else 0.0
    if feature is Feature.LEVENSHTEIN:
        longest = max(len(a), len(b))
        if longest == 0:
            return 1.0
        return 1.0 - levenshtein_distance(a, b) / longest
    ta, tb = tokenize(a), tokenize(b)
    if feature is Feature.JACCARD:
        sa, sb = set(ta), set(tb)
        if not sa and not sb:
            return 1.0
        return len(sa & sb) / len(sa | sb)
    # cosine over token-count vectors
    ca, cb = Counter(ta), Counter(tb)
    if not ca and not cb:
        return 1.0
    if not ca or not cb:
        return 0.0
    dot = sum(n * cb[t] for t, n in ca.items())
    na = sum(n * n for n in ca.values())
    nb = sum(n * n for n in cb.values())
    return min(1.0, dot / math.sqrt(na * nb))


@dataclass(frozen=True)
class SimilarityPredicate:
    attribute: str
    feature: Feature
    comparator: Comparator = Comparator.GT
    threshold: float = DEFAULT_MATCH_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "feature", Feature(self.feature))
        object.__setattr__(self, "comparator", Comparator(self.comparator))
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"predicate threshold {self.threshold} outside [0, 1]")

    def value(self, left: Mapping[str, str], right: Mapping[str, str], lowercase=True) -> float:
        for record in (left, right):
            if self.attribute not in record:
                raise MissingAttribute(self.attribute)
        return similarity(
            self.feature, left[self.attribute] or "", right[self.attribute] or "",
            lowercase=lowercase,
        )

    def holds(self, left, right, lowercase=True) -> bool:
        return self.comparator(self.value(left, right, lowercase), self.threshold)


@dataclass(frozen=True)
class RuleSet:
    """Outer disjunction of clauses; each clause is a conjunction of predicates."""

    clauses: tuple[tuple[SimilarityPredicate, ...], ...]
    lowercase: bool = True

    def __post_init__(self):
        clauses = tuple(tuple(c) for c in self.clauses)
        if not clauses:
            raise ValueError("a rule set needs at least one clause")
        if any(not c for c in clauses):
            raise ValueError("rule clauses must be non-empty")
        object.__setattr__(self, "clauses", clauses)


def rule_match(rules: RuleSet, left: Mapping[str, str], right: Mapping[str, str]) -> Label:
    for clause in rules.clauses:
        if all(p.holds(left, right, rules.lowercase) for p in clause):
            return Label.MATCH
    return Label.NON_MATCH


def rule_score(rules: RuleSet, left: Mapping[str, str], right: Mapping[str, str]) -> float:
    """Max over clauses of the min predicate similarity.

    When every predicate is ``GT t`` for a shared ``t``, ``rule_match`` agrees
    with ``score_match(rule_score(...), t)``, which is what lets a rule-based
    matcher take part in threshold sweeps.
    """
    return max(
        min(p.value(left, right, rules.lowercase) for p in clause)
        for clause in rules.clauses
    )


def score_match(score: float, threshold: float = DEFAULT_MATCH_THRESHOLD) -> Label:
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    return Label.MATCH if score > threshold else Label.NON_MATCH


@dataclass(frozen=True)
class WeightedScorer:
    """Weighted mean of per-attribute similarity features."""

    features: tuple[tuple[str, Feature, float], ...]
    lowercase: bool = True

    def __post_init__(self):
        feats = tuple((a, Feature(f), float(w)) for a, f, w in self.features)
        if not feats:
            raise ValueError("scorer needs at least one feature")
        if any(w < 0 for _, _, w in feats):
            raise ValueError("scorer weights must be non-negative")
        if sum(w for _, _, w in feats) <= 0:
            raise ValueError("scorer weights must sum to a positive value")
        object.__setattr__(self, "features", feats)

    def __call__(self, left: Mapping[str, str], right: Mapping[str, str]) -> float:
        total = sum(w for _, _, w in self.features)
        acc = 0.0
        for attribute, feature, weight in self.features:
            if attribute not in left or attribute not in right:
                raise MissingAttribute(attribute)
            acc += weight * similarity(
                feature, left[attribute] or "", right[attribute] or "",
                lowercase=self.lowercase,
            )
        return min(1.0, max(0.0, acc / total))


def _index(table: Mapping[str, Mapping[str, str]] | Sequence[Mapping[str, str]]):
    if isinstance(table, Mapping):
        return table
    return {row["id"]: row for row in table}


def _lookup(index, key):
    try:
        return index[key]
    except KeyError:
        raise MissingAttribute(f"id={key}") from None


def score_correspondences(left_table, right_table, pairing: Iterable, scorer: WeightedScorer) -> list[Correspondence]:
    """Attach scorer confidences to candidate pairs; decisions stay empty.

    ``pairing`` items need ``id_left``, ``id_right``, ``groups_left``,
    ``groups_right`` and ``truth`` (e.g. rows from ``iter_pair_rows``).
    """
    left, right = _index(left_table), _index(right_table)
    return [
        Correspondence(
            p.id_left,
            p.id_right,
            p.groups_left,
            p.groups_right,
            p.truth,
            score=scorer(_lookup(left, p.id_left), _lookup(right, p.id_right)),
        )
        for p in pairing
    ]


def apply_rules(left_table, right_table, pairing: Iterable, rules: RuleSet) -> list[Correspondence]:
    """Rule-based decisions plus the sweepable ``rule_score`` for each pair."""
    left, right = _index(left_table), _index(right_table)
    out = []
    for p in pairing:
        lrec, rrec = _lookup(left, p.id_left), _lookup(right, p.id_right)
        out.append(
            Correspondence(
                p.id_left,
                p.id_right,
                p.groups_left,
                p.groups_right,
                p.truth,
                score=rule_score(rules, lrec, rrec),
                decision=rule_match(rules, lrec, rrec),
            )
        )
    return out
