"""Disparity computation and the group-fairness audit procedure.

Two disparity conventions are supported:

* ``Convention.EQUATION`` compares a group's probability with a baseline and
  clamps at zero, so a group that does better than the baseline is never
  unfair. Subtraction is ``baseline - group`` (operands swapped for
  lower-is-better measures); division is ``1 - group / baseline`` (swapped
  likewise).
* ``Convention.TABLE`` reports a signed gap between a protected group and
  the other group: ``other - protected`` or ``other / protected - 1`` for
  higher-is-better measures, swapped for lower-is-better. Negative values mean
  the protected group is advantaged. This is the arithmetic behind published
  group-vs-group comparison tables and is normally paired with the
  complement baseline.
"""

from __future__ import annotations

import enum
import logging
import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from emaudit.confusion import (
    ConfusionMatrix,
    PairTable,
    RateSet,
    as_table,
    pairwise_mask,
    rates,
)
from emaudit.dataset import AuditMode, AuditTarget
from emaudit.errors import UndefinedRatio
from emaudit.groups import GroupEncoding, GroupUniverse
from emaudit.measures import (
    EO_COMPONENTS,
    Direction,
    Measure,
    applicability,
    measure_value,
)

log = logging.getLogger(__name__)


class DisparityOp(str, enum.Enum):
    SUB = "sub"
    DIV = "div"


class Convention(str, enum.Enum):
    EQUATION = "eq"
    TABLE = "table"


class Baseline(str, enum.Enum):
    OVERALL = "overall"
    COMPLEMENT = "complement"


@dataclass(frozen=True)
class DisparityConfig:
    tau: float = 0.2
    op: DisparityOp = DisparityOp.SUB
    convention: Convention = Convention.EQUATION
    baseline: Baseline = Baseline.OVERALL

    def __post_init__(self):
        object.__setattr__(self, "op", DisparityOp(self.op))
        object.__setattr__(self, "convention", Convention(self.convention))
        object.__setattr__(self, "baseline", Baseline(self.baseline))
        if not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")

    @property
    def exact_tau(self) -> Fraction:
        # via the decimal string so that tau=0.2 means exactly 1/5
        return Fraction(str(self.tau))

    def as_dict(self) -> dict:
        d = asdict(self)
        return {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in d.items()}


def disparity_sub(baseline_p, group_p, direction: Direction):
    direction = Direction(direction)
    if direction is Direction.HIGHER_BETTER:
        return max(0, baseline_p - group_p)
    if direction is Direction.LOWER_BETTER:
        return max(0, group_p - baseline_p)
    if direction is Direction.SYMMETRIC:
        return abs(baseline_p - group_p)
    raise ValueError(f"no scalar disparity for direction {direction}")


def disparity_div(baseline_p, group_p, direction: Direction):
    """Ratio disparity; ``None`` when the denominator is zero."""
    direction = Direction(direction)
    if direction is Direction.HIGHER_BETTER:
        return None if baseline_p == 0 else max(0, 1 - group_p / baseline_p)
    if direction is Direction.LOWER_BETTER:
        return None if group_p == 0 else max(0, 1 - baseline_p / group_p)
    if direction is Direction.SYMMETRIC:
        return None if baseline_p == 0 else abs(1 - group_p / baseline_p)
    raise ValueError(f"no scalar disparity for direction {direction}")


def pair_gap(protected_p, other_p, direction: Direction, op: DisparityOp):
    """Signed protected-vs-other gap; raises UndefinedRatio on a zero denominator."""
    direction, op = Direction(direction), DisparityOp(op)
    if direction is Direction.COMPOSITE:
        raise ValueError("no scalar gap for a composite measure")
    if op is DisparityOp.SUB:
        if direction is Direction.HIGHER_BETTER:
            return other_p - protected_p
        if direction is Direction.LOWER_BETTER:
            return protected_p - other_p
        return abs(protected_p - other_p)
    if direction is Direction.HIGHER_BETTER:
        num, den = other_p, protected_p
    else:
        num, den = protected_p, other_p
    if den == 0:
        raise UndefinedRatio(f"zero denominator in {num}/{den}")
    gap = num / den - 1
    return abs(gap) if direction is Direction.SYMMETRIC else gap


@dataclass(frozen=True)
class DisparityRecord:
    target: AuditTarget
    measure: Measure
    group_value: object
    baseline_value: object
    disparity: object
    unfair: bool
    applicable: bool


@dataclass
class AuditReport:
    config: DisparityConfig
    records: list[DisparityRecord]
    discriminated_single: list[GroupEncoding]
    discriminated_pairwise: list[tuple[GroupEncoding, GroupEncoding]]
    overall_rates: RateSet
    overall_matrix: ConfusionMatrix
    targets: list[AuditTarget] = field(default_factory=list)
    measures: list[Measure] = field(default_factory=list)
    matrices: dict[AuditTarget, ConfusionMatrix] = field(default_factory=dict)
    baseline_matrices: dict[AuditTarget, ConfusionMatrix] = field(default_factory=dict)
    threshold: float | None = None

    def record(self, target: AuditTarget, measure: Measure) -> DisparityRecord:
        for r in self.records:
            if r.target == target and r.measure is measure:
                return r
        raise KeyError((target, measure))

    def flagged(self, measure: Measure | None = None) -> list[AuditTarget]:
        seen = []
        for r in self.records:
            if r.unfair and (measure is None or r.measure is measure) and r.target not in seen:
                seen.append(r.target)
        return seen

    @property
    def any_unfair(self) -> bool:
        return any(r.unfair for r in self.records)


def _thread_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("EMAUDIT_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _check_complement(targets: Sequence[AuditTarget], universe: GroupUniverse) -> None:
    for t in targets:
        groups = [t.single_group] if t.mode is AuditMode.SINGLE else list(t.pair)
        for g in groups:
            if g.popcount() != 1 or not universe.attribute_of(
                universe.names(g)[0]
            ).exclusive:
                raise ValueError(
                    f"complement baseline needs single values of exclusive attributes, "
                    f"got {t.label(universe)!r}"
                )


class _Evaluator:
    def __init__(self, table: PairTable, cfg: DisparityConfig, measures, overall: ConfusionMatrix):
        self.table = table
        self.cfg = cfg
        self.tau = cfg.exact_tau
        self.measures = measures
        self.overall = overall
        self.overall_rates = rates(overall)

    def matrices(self, target: AuditTarget) -> tuple[ConfusionMatrix, ConfusionMatrix]:
        t = self.table
        if not len(t):
            return ConfusionMatrix(), ConfusionMatrix()
        complement = self.cfg.baseline is Baseline.COMPLEMENT
        if target.mode is AuditMode.SINGLE:
            in_l = t.members(target.single_group, "left")
            in_r = t.members(target.single_group, "right")
            group = t.count(in_l.astype(np.int64) + in_r)
            if complement:
                base = t.count((~in_l).astype(np.int64) + ~in_r)
            else:
                base = self.overall
        else:
            legit = pairwise_mask(t, target.pair)
            group = t.count(legit.astype(np.int64))
            base = t.count((~legit).astype(np.int64)) if complement else self.overall
        return group, base

    def disparity(self, group_p, base_p, direction: Direction):
        cfg = self.cfg
        if cfg.convention is Convention.EQUATION:
            if cfg.op is DisparityOp.SUB:
                return disparity_sub(base_p, group_p, direction)
            return disparity_div(base_p, group_p, direction)
        try:
            return pair_gap(group_p, base_p, direction, cfg.op)
        except UndefinedRatio:
            return None

    def scalar(self, target, measure, g_rates, b_rates, overlapping) -> DisparityRecord:
        g = measure_value(measure, g_rates)
        b = measure_value(measure, b_rates)
        applicable = (
            applicability(measure, target.mode, overlapping) and g is not None and b is not None
        )
        disparity = self.disparity(g, b, measure.direction) if applicable else None
        unfair = applicable and disparity is not None and disparity > self.tau
        return DisparityRecord(target, measure, g, b, disparity, bool(unfair), applicable)

    def evaluate(self, target: AuditTarget):
        group, base = self.matrices(target)
        g_rates, b_rates = rates(group), rates(base)
        overlapping = False
        if target.mode is AuditMode.PAIRWISE:
            s, t = target.pair
            overlapping = bool(s.bits & t.bits) or group.tp + group.fn > 0
        if group.total == 0:
            log.debug("no legitimate correspondences for %s", target)
        cache = {}

        def get(measure):
            if measure not in cache:
                cache[measure] = self.scalar(target, measure, g_rates, b_rates, overlapping)
            return cache[measure]

        records = []
        for measure in self.measures:
            if measure is Measure.EO:
                parts = [get(m) for m in EO_COMPONENTS]
                disparities = [p.disparity for p in parts if p.applicable and p.disparity is not None]
                records.append(
                    DisparityRecord(
                        target,
                        Measure.EO,
                        tuple(p.group_value for p in parts),
                        tuple(p.baseline_value for p in parts),
                        max(disparities) if disparities else None,
                        any(p.unfair for p in parts),
                        any(p.applicable for p in parts),
                    )
                )
            else:
                records.append(get(measure))
        return group, base, records


def run_audit(
    cs,
    targets: Sequence[AuditTarget],
    measures: Sequence[Measure],
    cfg: DisparityConfig = DisparityConfig(),
    *,
    threshold: float | None = None,
    universe: GroupUniverse | None = None,
    workers: int | None = None,
) -> AuditReport:
    """Audit ``targets`` under every measure in ``measures``.

    ``cs`` is a correspondence list or a prebuilt ``PairTable``. When
    ``threshold`` is given, decisions are recomputed from scores. Records
    come out in target-then-measure order regardless of ``workers``.
    """
    measures = [Measure(m) for m in measures]
    targets = list(targets)
    if cfg.baseline is Baseline.COMPLEMENT and universe is not None:
        _check_complement(targets, universe)
    table = as_table(cs, threshold)
    overall = table.count() if len(table) else ConfusionMatrix()
    ev = _Evaluator(table, cfg, measures, overall)

    n_workers = _thread_count(workers)
    if n_workers > 1 and len(targets) > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            results = list(pool.map(ev.evaluate, targets))
    else:
        results = [ev.evaluate(t) for t in targets]

    records, matrices, bases = [], {}, {}
    single, pairwise = [], []
    for target, (group, base, recs) in zip(targets, results):
        matrices[target] = group
        bases[target] = base
        records.extend(recs)
        if any(r.unfair for r in recs):
            if target.mode is AuditMode.SINGLE:
                single.append(target.single_group)
            else:
                pairwise.append(target.pair)
    return AuditReport(
        config=cfg,
        records=records,
        discriminated_single=single,
        discriminated_pairwise=pairwise,
        overall_rates=ev.overall_rates,
        overall_matrix=overall,
        targets=targets,
        measures=measures,
        matrices=matrices,
        baseline_matrices=bases,
        threshold=threshold,
    )


def single_targets(groups: Sequence[GroupEncoding]) -> list[AuditTarget]:
    return [AuditTarget.single(g) for g in groups]


def pairwise_targets(groups: Sequence[GroupEncoding]) -> list[AuditTarget]:
    """Unordered pairs with repetition, in input order: (g0,g0), (g0,g1), ..."""
    out = []
    for i, a in enumerate(groups):
        for b in groups[i:]:
            out.append(AuditTarget.pairwise(a, b))
    return out
