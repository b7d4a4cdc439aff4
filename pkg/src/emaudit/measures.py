"""The eleven group-fairness measures as rate extractors over confusion matrices."""

from __future__ import annotations

import enum
from fractions import Fraction

from emaudit.confusion import ConfusionMatrix, RateSet, rates
from emaudit.dataset import AuditMode


class Direction(str, enum.Enum):
    HIGHER_BETTER = "higher"
    LOWER_BETTER = "lower"
    SYMMETRIC = "symmetric"
    COMPOSITE = "composite"


class Measure(str, enum.Enum):
    AP = "AP"
    SP = "SP"
    TPRP = "TPRP"
    FPRP = "FPRP"
    FNRP = "FNRP"
    TNRP = "TNRP"
    EO = "EO"
    PPVP = "PPVP"
    NPVP = "NPVP"
    FDRP = "FDRP"
    FORP = "FORP"

    @property
    def direction(self) -> Direction:
        return _DIRECTION[self]

    @property
    def single_only(self) -> bool:
        """Needs true matches inside the audited slice (TP/FN-based)."""
        return self in _SINGLE_ONLY

    @property
    def rate_name(self) -> str | None:
        return _RATE.get(self)

    @classmethod
    def parse_list(cls, text: str | list[str]) -> list[Measure]:
        if isinstance(text, str):
            if text.strip().lower() == "all":
                return list(cls)
            items = [t for t in text.replace(" ", "").split(",") if t]
        else:
            items = list(text)
            if len(items) == 1 and str(items[0]).lower() == "all":
                return list(cls)
        try:
            return [cls(str(t).upper()) for t in items]
        except ValueError as exc:
            raise ValueError(f"unknown measure in {items!r}") from exc


ALL_MEASURES: tuple[Measure, ...] = tuple(Measure)

_SINGLE_ONLY = frozenset(
    {
        Measure.TPRP,
        Measure.FNRP,
        Measure.EO,
        Measure.PPVP,
        Measure.NPVP,
        Measure.FDRP,
        Measure.FORP,
    }
)

_DIRECTION = {
    Measure.AP: Direction.HIGHER_BETTER,
    Measure.SP: Direction.SYMMETRIC,
    Measure.TPRP: Direction.HIGHER_BETTER,
    Measure.FPRP: Direction.LOWER_BETTER,
    Measure.FNRP: Direction.LOWER_BETTER,
    Measure.TNRP: Direction.HIGHER_BETTER,
    Measure.EO: Direction.COMPOSITE,
    Measure.PPVP: Direction.HIGHER_BETTER,
    Measure.NPVP: Direction.HIGHER_BETTER,
    Measure.FDRP: Direction.LOWER_BETTER,
    Measure.FORP: Direction.LOWER_BETTER,
}

_RATE = {
    Measure.AP: "accuracy",
    Measure.SP: "positive_rate",
    Measure.TPRP: "tpr",
    Measure.FPRP: "fpr",
    Measure.FNRP: "fnr",
    Measure.TNRP: "tnr",
    Measure.PPVP: "ppv",
    Measure.NPVP: "npv",
    Measure.FDRP: "fdr",
    Measure.FORP: "forr",
}

# the two conditions equalized odds combines
EO_COMPONENTS = (Measure.TPRP, Measure.FPRP)


def measure_value(measure: Measure, m: ConfusionMatrix | RateSet):
    """Probability the measure equalizes across groups; ``None`` if undefined.

    EO yields a ``(tpr, fpr)`` tuple whose entries may individually be
    ``None``; the tuple itself is ``None`` only when both are undefined.
    """
    measure = Measure(measure)
    rs = rates(m) if isinstance(m, ConfusionMatrix) else m
    if measure is Measure.EO:
        pair = (rs.tpr, rs.fpr)
        return None if pair == (None, None) else pair
    value: Fraction | None = getattr(rs, _RATE[measure])
    return value


def applicability(measure: Measure, mode: AuditMode, pair_overlapping: bool = False) -> bool:
    measure, mode = Measure(measure), AuditMode(mode)
    if mode is AuditMode.SINGLE:
        return True
    return not measure.single_only or pair_overlapping
