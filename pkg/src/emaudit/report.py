"""Audit report serialization (JSON, CSV) and the text unfairness grid."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Mapping
from fractions import Fraction
from pathlib import Path

from emaudit.audit import (
    AuditReport,
    Baseline,
    Convention,
    DisparityConfig,
    DisparityOp,
    DisparityRecord,
)
from emaudit.confusion import ConfusionMatrix, RateSet
from emaudit.dataset import AuditMode, AuditTarget
from emaudit.groups import AttributeKind, GroupEncoding, GroupUniverse, SensitiveAttribute
from emaudit.measures import Measure

REPORT_CSV_COLUMNS = (
    "mode",
    "target",
    "measure",
    "group_value",
    "baseline_value",
    "disparity",
    "applicable",
    "unfair",
)

UNFAIR_MARK = "X"
FAIR_MARK = "."
NA_MARK = "-"

_CONVENTION_NOTES = {
    Convention.EQUATION: {
        DisparityOp.SUB: "disparity = max(0, baseline - group); operands swapped for "
        "lower-is-better measures; |baseline - group| for SP",
        DisparityOp.DIV: "disparity = max(0, 1 - group/baseline); for lower-is-better "
        "measures max(0, 1 - baseline/group); |1 - group/baseline| for SP",
    },
    Convention.TABLE: {
        DisparityOp.SUB: "disparity = baseline - group for higher-is-better measures, "
        "group - baseline for lower-is-better (signed)",
        DisparityOp.DIV: "disparity = baseline/group - 1 for higher-is-better measures, "
        "group/baseline - 1 for lower-is-better (signed, null on zero denominator)",
    },
}
_BASELINE_NOTES = {
    Baseline.OVERALL: "baseline = every correspondence counted once",
    Baseline.COMPLEMENT: "baseline = correspondences outside the audited group or pair, "
    "with the same per-side weighting as the group",
}


# -- value codecs -------------------------------------------------------------


def _to_json(v):
    if v is None:
        return None
    if isinstance(v, tuple):
        return [_to_json(x) for x in v]
    return float(v)


def _from_json(v):
    if isinstance(v, list):
        return tuple(_from_json(x) for x in v)
    return v


def _fmt2(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, (tuple, list)):
        return "/".join(_fmt2(x) for x in v)
    return f"{float(v):.2f}"


def _target_label(target: AuditTarget, universe: GroupUniverse | None) -> str:
    if universe is not None:
        return target.label(universe)
    if target.mode is AuditMode.SINGLE:
        return str(target.single_group)
    return f"{target.pair[0]}<>{target.pair[1]}"


def _encoding_json(enc: GroupEncoding) -> str:
    return "".join(str(b) for b in enc.to_bits())


def _encoding_from_json(text: str) -> GroupEncoding:
    return GroupEncoding.from_bits([int(ch) for ch in text])


def universe_document(universe: GroupUniverse) -> dict:
    return {
        "attributes": [
            {"name": a.name, "kind": a.kind.value, "domain": list(a.domain)}
            for a in universe.attributes
        ]
    }


def universe_from_document(doc: Mapping) -> GroupUniverse:
    return GroupUniverse(
        tuple(
            SensitiveAttribute(a["name"], tuple(a["domain"]), AttributeKind(a["kind"]))
            for a in doc["attributes"]
        )
    )


# -- JSON ---------------------------------------------------------------------


def report_document(report: AuditReport, universe: GroupUniverse | None = None) -> dict:
    cfg = report.config
    targets = []
    for t in report.targets:
        entry = {"mode": t.mode.value, "label": _target_label(t, universe)}
        if t.mode is AuditMode.SINGLE:
            entry["group"] = _encoding_json(t.single_group)
        else:
            entry["pair"] = [_encoding_json(t.pair[0]), _encoding_json(t.pair[1])]
        if t in report.matrices:
            entry["matrix"] = report.matrices[t].as_dict()
        if t in report.baseline_matrices:
            entry["baseline_matrix"] = report.baseline_matrices[t].as_dict()
        targets.append(entry)
    index = {t: i for i, t in enumerate(report.targets)}
    records = [
        {
            "target": index[r.target],
            "measure": r.measure.value,
            "group_value": _to_json(r.group_value),
            "baseline_value": _to_json(r.baseline_value),
            "disparity": _to_json(r.disparity),
            "applicable": r.applicable,
            "unfair": r.unfair,
        }
        for r in report.records
    ]
    return {
        "notes": {
            "disparity": _CONVENTION_NOTES[cfg.convention][cfg.op],
            "baseline": _BASELINE_NOTES[cfg.baseline],
            "unfair": "unfair when applicable, disparity defined and disparity > tau",
            "EO": "EO is unfair when TPRP or FPRP is; its disparity is the larger component",
            "values": "rates are empirical frequencies; null means undefined (zero denominator)",
        },
        "config": cfg.as_dict(),
        "threshold": report.threshold,
        "universe": universe_document(universe) if universe is not None else None,
        "measures": [m.value for m in report.measures],
        "targets": targets,
        "records": records,
        "overall_matrix": report.overall_matrix.as_dict(),
        "overall_rates": report.overall_rates.as_floats(),
        "discriminated_single": [
            _target_label(AuditTarget.single(g), universe) for g in report.discriminated_single
        ],
        "discriminated_pairwise": [
            _target_label(AuditTarget.pairwise(*p), universe) for p in report.discriminated_pairwise
        ],
    }


def canonical_json(doc: Mapping) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report_json(report: AuditReport, sink, universe: GroupUniverse | None = None) -> str:
    text = canonical_json(report_document(report, universe))
    if sink is not None:
        _write_text(sink, text)
    return text


def _matrix(d: Mapping | None) -> ConfusionMatrix:
    if not d:
        return ConfusionMatrix()
    return ConfusionMatrix(d["TP"], d["FP"], d["FN"], d["TN"])


def report_from_json(source) -> tuple[AuditReport, GroupUniverse | None]:
    """Rebuild an ``AuditReport`` (values as floats) from ``report.json``."""
    if isinstance(source, Mapping):
        doc = source
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        doc = json.loads(source)
    else:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    universe = universe_from_document(doc["universe"]) if doc.get("universe") else None
    targets, matrices, bases = [], {}, {}
    for entry in doc["targets"]:
        if entry["mode"] == AuditMode.SINGLE.value:
            t = AuditTarget.single(_encoding_from_json(entry["group"]))
        else:
            a, b = entry["pair"]
            t = AuditTarget.pairwise(_encoding_from_json(a), _encoding_from_json(b))
        targets.append(t)
        if "matrix" in entry:
            matrices[t] = _matrix(entry["matrix"])
        if "baseline_matrix" in entry:
            bases[t] = _matrix(entry["baseline_matrix"])
    records = [
        DisparityRecord(
            targets[r["target"]],
            Measure(r["measure"]),
            _from_json(r["group_value"]),
            _from_json(r["baseline_value"]),
            _from_json(r["disparity"]),
            bool(r["unfair"]),
            bool(r["applicable"]),
        )
        for r in doc["records"]
    ]
    flagged = [t for t in targets if any(r.unfair for r in records if r.target == t)]
    rates = {k: (None if v is None else Fraction(v)) for k, v in doc["overall_rates"].items()}
    report = AuditReport(
        config=DisparityConfig(**doc["config"]),
        records=records,
        discriminated_single=[t.single_group for t in flagged if t.mode is AuditMode.SINGLE],
        discriminated_pairwise=[t.pair for t in flagged if t.mode is AuditMode.PAIRWISE],
        overall_rates=RateSet(**rates),
        overall_matrix=_matrix(doc["overall_matrix"]),
        targets=targets,
        measures=[Measure(m) for m in doc["measures"]],
        matrices=matrices,
        baseline_matrices=bases,
        threshold=doc.get("threshold"),
    )
    return report, universe


# -- CSV ----------------------------------------------------------------------


def report_rows(report: AuditReport, universe: GroupUniverse | None = None) -> list[list[str]]:
    return [
        [
            r.target.mode.value,
            _target_label(r.target, universe),
            r.measure.value,
            _fmt2(r.group_value),
            _fmt2(r.baseline_value),
            _fmt2(r.disparity),
            str(r.applicable).lower(),
            str(r.unfair).lower(),
        ]
        for r in report.records
    ]


def write_report_csv(report: AuditReport, sink, universe: GroupUniverse | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_COLUMNS)
    w.writerows(report_rows(report, universe))
    text = buf.getvalue()
    if sink is not None:
        _write_text(sink, text)
    return text


def read_report_csv(source) -> list[dict[str, str]]:
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    return list(csv.DictReader(io.StringIO(text)))


def _write_text(sink, text: str) -> None:
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


# -- grid ---------------------------------------------------------------------


def grid_cells(report: AuditReport) -> dict[tuple[Measure, AuditTarget], str]:
    cells = {}
    for r in report.records:
        if r.unfair:
            cells[(r.measure, r.target)] = UNFAIR_MARK
        elif r.applicable:
            cells[(r.measure, r.target)] = FAIR_MARK
        else:
            cells[(r.measure, r.target)] = NA_MARK
    return cells


def render_grid(report: AuditReport, universe: GroupUniverse | None = None) -> str:
    """Rows are measures, columns are targets: X unfair, . fair, - not applicable."""
    cells = grid_cells(report)
    measures = report.measures or list(dict.fromkeys(r.measure for r in report.records))
    targets = report.targets or list(dict.fromkeys(r.target for r in report.records))
    labels = [_target_label(t, universe) for t in targets]
    widths = [max(len(lbl), 1) for lbl in labels]
    head_w = max([len("measure")] + [len(m.value) for m in measures])
    lines = [" ".join(["measure".ljust(head_w)] + [lbl.ljust(w) for lbl, w in zip(labels, widths)]).rstrip()]
    for m in measures:
        row = [m.value.ljust(head_w)]
        row += [cells.get((m, t), " ").ljust(w) for t, w in zip(targets, widths)]
        lines.append(" ".join(row).rstrip())
    return "\n".join(lines) + "\n"


def summary_lines(report: AuditReport, universe: GroupUniverse | None = None) -> list[str]:
    single = [_target_label(AuditTarget.single(g), universe) for g in report.discriminated_single]
    pairs = [_target_label(AuditTarget.pairwise(*p), universe) for p in report.discriminated_pairwise]
    return [
        f"discriminated single: {', '.join(single) if single else 'none'}",
        f"discriminated pairwise: {', '.join(pairs) if pairs else 'none'}",
    ]
