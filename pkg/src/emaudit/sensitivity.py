"""Matching-threshold sweeps and the threshold-sensitivity score."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from emaudit.audit import AuditReport, DisparityConfig, run_audit
from emaudit.confusion import PairTable, as_table
from emaudit.dataset import AuditTarget
from emaudit.errors import MissingScore, TooFewThresholds
from emaudit.measures import Measure, measure_value

# 0.30, 0.35, ..., 0.90
DEFAULT_THRESHOLDS: tuple[float, ...] = tuple(round(0.30 + 0.05 * i, 2) for i in range(13))

L2_DEFINITION = (
    "sensitivity = sqrt(sum_i (count[i+1] - count[i])^2) over adjacent thresholds, "
    "where count is the number of groups flagged unfair at that threshold"
)
MEAN_ABS_DEFINITION = "sensitivity = mean_i |count[i+1] - count[i]| over adjacent thresholds"


@dataclass
class SweepPoint:
    threshold: float
    unfair_count: int
    utility: object
    report: AuditReport


@dataclass
class SweepResult:
    measure: Measure
    thresholds: list[float] = field(default_factory=list)
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def unfair_counts(self) -> list[int]:
        return [p.unfair_count for p in self.points]

    @property
    def utilities(self) -> list:
        return [p.utility for p in self.points]


def sweep(
    cs,
    thresholds: Sequence[float],
    targets: Sequence[AuditTarget],
    measure: Measure,
    cfg: DisparityConfig = DisparityConfig(),
    *,
    workers: int | None = None,
) -> SweepResult:
    measure = Measure(measure)
    thresholds = [float(t) for t in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    if any(not 0.0 <= t <= 1.0 for t in thresholds):
        raise ValueError("thresholds must lie in [0, 1]")
    result = SweepResult(measure)
    if not thresholds:
        return result
    table = _scored_table(cs)
    for t in thresholds:
        at = table.at_threshold(t)
        report = run_audit(at, targets, [measure], cfg, workers=workers)
        report.threshold = t
        utility = measure_value(measure, report.overall_matrix)
        result.thresholds.append(t)
        result.points.append(SweepPoint(t, len(report.flagged(measure)), utility, report))
    return result


def _scored_table(cs) -> PairTable:
    if isinstance(cs, PairTable):
        table = cs
    else:
        missing = [c for c in cs if c.score is None]
        if missing:
            c = missing[0]
            raise MissingScore(f"({c.id_left}, {c.id_right}) has no score")
        table = as_table(cs, threshold=0.5)
    if table.score is None or np.isnan(table.score).any():
        raise MissingScore("every correspondence needs a score for a sweep")
    return table


def sensitivity_l2(unfair_counts: Sequence[int], method: str = "l2") -> float:
    counts = list(unfair_counts)
    if len(counts) < 2:
        raise TooFewThresholds(f"need at least 2 thresholds, got {len(counts)}")
    diffs = [b - a for a, b in zip(counts, counts[1:])]
    if method == "l2":
        return math.sqrt(sum(d * d for d in diffs))
    if method == "mean_abs":
        return sum(abs(d) for d in diffs) / len(diffs)
    raise ValueError(f"unknown sensitivity method {method!r}")


def _fmt_utility(u) -> str:
    if u is None:
        return "NA"
    if isinstance(u, tuple):
        return "/".join(_fmt_utility(x) for x in u)
    return f"{float(u):.2f}"


def _json_utility(u):
    if u is None:
        return None
    if isinstance(u, tuple):
        return [_json_utility(x) for x in u]
    return float(u)


def write_heatmap_csv(results: Mapping[str, SweepResult], sink) -> None:
    """One row per labelled sweep; cells are ``unfair_count:utility``."""
    grid = sorted({t for r in results.values() for t in r.thresholds})
    own = isinstance(sink, (str, Path))
    stream = open(sink, "w", newline="", encoding="utf-8") if own else sink
    try:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["matcher", "measure"] + [f"{t:.2f}" for t in grid])
        for label, res in results.items():
            cells = {p.threshold: f"{p.unfair_count}:{_fmt_utility(p.utility)}" for p in res.points}
            w.writerow([label, res.measure.value] + [cells.get(t, "") for t in grid])
    finally:
        if own:
            stream.close()


def sweep_document(results: Mapping[str, SweepResult], method: str = "l2") -> dict:
    doc = {
        "sensitivity_definition": L2_DEFINITION if method == "l2" else MEAN_ABS_DEFINITION,
        "sensitivity_method": method,
        "sweeps": [],
    }
    for label, res in results.items():
        counts = res.unfair_counts
        doc["sweeps"].append(
            {
                "matcher": label,
                "measure": res.measure.value,
                "thresholds": res.thresholds,
                "unfair_counts": counts,
                "utilities": [_json_utility(u) for u in res.utilities],
                "config": res.points[0].report.config.as_dict() if res.points else None,
                "sensitivity": sensitivity_l2(counts, method) if len(counts) >= 2 else None,
            }
        )
    return doc


def write_sweep_json(results: Mapping[str, SweepResult], sink, method: str = "l2") -> None:
    text = json.dumps(sweep_document(results, method), indent=2, sort_keys=True)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text + "\n", encoding="utf-8")
    else:
        sink.write(text + "\n")
