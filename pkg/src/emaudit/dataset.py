"""Correspondence records, CSV I/O and single/pairwise legitimacy filters."""

from __future__ import annotations

import csv
import enum
import io
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO

from emaudit.errors import MissingColumn, ParseError
from emaudit.groups import GroupEncoding, GroupUniverse, subgroup_contains


class Label(str, enum.Enum):
    MATCH = "M"
    NON_MATCH = "N"

    @classmethod
    def parse(cls, text: str) -> Label:
        return cls(text.strip().upper())

    @classmethod
    def of(cls, flag: bool) -> Label:
        return cls.MATCH if flag else cls.NON_MATCH


class AuditMode(str, enum.Enum):
    SINGLE = "single"
    PAIRWISE = "pairwise"


@dataclass(frozen=True, slots=True)
class Correspondence:
    id_left: str
    id_right: str
    groups_left: GroupEncoding
    groups_right: GroupEncoding
    truth: Label
    score: float | None = None
    decision: Label | None = None

    def __post_init__(self):
        if self.score is None and self.decision is None:
            raise ValueError(
                f"correspondence ({self.id_left}, {self.id_right}) has neither "
                "score nor decision"
            )
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.groups_left.width != self.groups_right.width:
            raise ValueError("left and right group encodings differ in width")

    def swapped(self) -> Correspondence:
        return replace(
            self,
            id_left=self.id_right,
            id_right=self.id_left,
            groups_left=self.groups_right,
            groups_right=self.groups_left,
        )


@dataclass(frozen=True)
class AuditTarget:
    mode: AuditMode
    single_group: GroupEncoding | None = None
    pair: tuple[GroupEncoding, GroupEncoding] | None = None

    def __post_init__(self):
        if self.mode is AuditMode.SINGLE:
            if self.single_group is None or self.pair is not None:
                raise ValueError("single target needs single_group and no pair")
        elif self.pair is None or self.single_group is not None:
            raise ValueError("pairwise target needs pair and no single_group")

    @classmethod
    def single(cls, group: GroupEncoding) -> AuditTarget:
        return cls(AuditMode.SINGLE, single_group=group)

    @classmethod
    def pairwise(cls, a: GroupEncoding, b: GroupEncoding) -> AuditTarget:
        return cls(AuditMode.PAIRWISE, pair=(a, b))

    def label(self, universe: GroupUniverse) -> str:
        if self.mode is AuditMode.SINGLE:
            return universe.label(self.single_group)
        a, b = self.pair
        return f"{universe.label(a)}<>{universe.label(b)}"


def legitimate_single(c: Correspondence, g: GroupEncoding) -> bool:
    return subgroup_contains(g, c.groups_left) or subgroup_contains(g, c.groups_right)


def legitimate_pairwise(
    c: Correspondence, pair: tuple[GroupEncoding, GroupEncoding]
) -> bool:
    s, t = pair
    return (
        subgroup_contains(s, c.groups_left) and subgroup_contains(t, c.groups_right)
    ) or (subgroup_contains(t, c.groups_left) and subgroup_contains(s, c.groups_right))


# -- files -------------------------------------------------------------------

CORRESPONDENCE_COLUMNS = (
    "id_left",
    "id_right",
    "groups_left",
    "groups_right",
    "score",
    "prediction",
    "label",
)


@dataclass(frozen=True)
class FormatConfig:
    delimiter: str = ","
    group_separator: str = "|"
    # maps logical column -> header name in the file
    columns: dict[str, str] = field(default_factory=dict)
    validate_entities: bool = True

    def column(self, logical: str) -> str:
        return self.columns.get(logical, logical)


def _text_stream(source) -> IO[str]:
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8")
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"), newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


@dataclass(frozen=True)
class RawPair:
    """A parsed correspondence row whose score and prediction may both be empty."""

    line: int
    id_left: str
    id_right: str
    groups_left: GroupEncoding
    groups_right: GroupEncoding
    truth: Label
    score: float | None
    decision: Label | None


def iter_pair_rows(
    source, universe: GroupUniverse, fmt: FormatConfig = FormatConfig()
) -> Iterator[RawPair]:
    """Parse correspondence rows without requiring a score or prediction."""
    stream = _text_stream(source)
    try:
        yield from _parse_rows(stream, universe, fmt)
    finally:
        if isinstance(source, (str, Path)):
            stream.close()


def _parse_rows(stream, universe, fmt) -> Iterator[RawPair]:
    reader = csv.reader(stream, delimiter=fmt.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "empty file, expected a header row") from None
    header = [h.strip().lstrip("﻿") for h in header]
    pos = {}
    for logical in CORRESPONDENCE_COLUMNS:
        name = fmt.column(logical)
        if name not in header:
            raise MissingColumn(name)
        pos[logical] = header.index(name)

    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(line, f"expected {len(header)} fields, got {len(row)}")
        cell = {k: row[i].strip() for k, i in pos.items()}
        gl = universe.parse_label(cell["groups_left"], fmt.group_separator)
        gr = universe.parse_label(cell["groups_right"], fmt.group_separator)
        if fmt.validate_entities:
            for side, enc in (("groups_left", gl), ("groups_right", gr)):
                try:
                    universe.validate_entity(enc)
                except ValueError as exc:
                    raise ParseError(line, f"{side}: {exc}") from None
        if not cell["label"]:
            raise ParseError(line, "missing ground-truth label")
        try:
            truth = Label.parse(cell["label"])
        except ValueError:
            raise ParseError(line, f"bad label {cell['label']!r}") from None
        decision = None
        if cell["prediction"]:
            try:
                decision = Label.parse(cell["prediction"])
            except ValueError:
                raise ParseError(line, f"bad prediction {cell['prediction']!r}") from None
        score = None
        if cell["score"]:
            try:
                score = float(cell["score"])
            except ValueError:
                raise ParseError(line, f"bad score {cell['score']!r}") from None
            if not math.isfinite(score) or not 0.0 <= score <= 1.0:
                raise ParseError(line, f"score {score} outside [0, 1]")
        yield RawPair(
            line, cell["id_left"], cell["id_right"], gl, gr, truth, score, decision
        )


def load_correspondences(
    source, universe: GroupUniverse, fmt: FormatConfig = FormatConfig()
) -> list[Correspondence]:
    """Read a correspondence CSV; ``source`` is a path, bytes, or a (byte or text) stream."""
    out = []
    for raw in iter_pair_rows(source, universe, fmt):
        if raw.score is None and raw.decision is None:
            raise ParseError(raw.line, "row has neither score nor prediction")
        out.append(
            Correspondence(
                raw.id_left,
                raw.id_right,
                raw.groups_left,
                raw.groups_right,
                raw.truth,
                raw.score,
                raw.decision,
            )
        )
    return out


def _fmt_score(score: float | None) -> str:
    return "" if score is None else repr(float(score))


def write_correspondences(
    rows: Iterable[Correspondence | RawPair],
    sink,
    universe: GroupUniverse,
    fmt: FormatConfig = FormatConfig(),
) -> None:
    """Write rows in the correspondence CSV schema to a path or text stream."""
    own = isinstance(sink, (str, Path))
    stream = open(sink, "w", newline="", encoding="utf-8") if own else sink
    try:
        writer = csv.writer(stream, delimiter=fmt.delimiter, lineterminator="\n")
        writer.writerow([fmt.column(c) for c in CORRESPONDENCE_COLUMNS])
        sep = fmt.group_separator
        for c in rows:
            writer.writerow(
                [
                    c.id_left,
                    c.id_right,
                    sep.join(universe.names(c.groups_left)),
                    sep.join(universe.names(c.groups_right)),
                    _fmt_score(c.score),
                    "" if c.decision is None else c.decision.value,
                    c.truth.value,
                ]
            )
    finally:
        if own:
            stream.close()


# -- entity tables ------------------------------------------------------------


def read_entity_table(source, id_column: str = "id") -> list[dict[str, str]]:
    stream = _text_stream(source)
    try:
        reader = csv.DictReader(stream)
        if reader.fieldnames is None or id_column not in reader.fieldnames:
            raise MissingColumn(id_column)
        return [dict(r) for r in reader]
    finally:
        if isinstance(source, (str, Path)):
            stream.close()


def write_entity_table(
    rows: Sequence[dict[str, str]], sink, columns: Sequence[str]
) -> None:
    own = isinstance(sink, (str, Path))
    stream = open(sink, "w", newline="", encoding="utf-8") if own else sink
    try:
        writer = csv.DictWriter(
            stream, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore"
        )
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if own:
            stream.close()
