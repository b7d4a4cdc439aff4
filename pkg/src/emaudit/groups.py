"""Sensitive attributes, group universes and binary group encodings.

Every group value of every sensitive attribute gets one bit position in a
fixed-width vector. Entities carry the bits of the groups they belong to; a
subgroup is the set of groups that define it, and an entity belongs to a
subgroup when it holds every one of those bits.
"""

from __future__ import annotations

import enum
import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from emaudit.errors import LengthMismatch, UnknownGroupValue


class AttributeKind(str, enum.Enum):
    BINARY = "binary"
    EXCLUSIVE = "multi-exclusive"
    SETWISE = "setwise"


@dataclass(frozen=True)
class SensitiveAttribute:
    name: str
    domain: tuple[str, ...]
    kind: AttributeKind = AttributeKind.EXCLUSIVE

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "kind", AttributeKind(self.kind))
        if not self.name:
            raise ValueError("attribute name must be non-empty")
        if not self.domain:
            raise ValueError(f"attribute {self.name!r} has an empty domain")
        if any(not v for v in self.domain):
            raise ValueError(f"attribute {self.name!r} has an empty group value")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError(f"attribute {self.name!r} has duplicate group values")
        if self.kind is AttributeKind.BINARY and len(self.domain) != 2:
            raise ValueError(
                f"binary attribute {self.name!r} needs exactly 2 values, "
                f"got {len(self.domain)}"
            )

    @property
    def exclusive(self) -> bool:
        return self.kind is not AttributeKind.SETWISE


@dataclass(frozen=True, order=True)
class GroupEncoding:
    """A fixed-width bit vector; position ``i`` is bit ``1 << i`` of ``bits``."""

    width: int
    bits: int

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("width must be non-negative")
        if self.bits < 0 or self.bits >> self.width:
            raise ValueError(f"bits {self.bits:#x} do not fit in width {self.width}")

    @classmethod
    def from_bits(cls, vector: Sequence[int]) -> GroupEncoding:
        bits = 0
        for i, b in enumerate(vector):
            if b not in (0, 1, True, False):
                raise ValueError(f"bit {i} is {b!r}, expected 0 or 1")
            if b:
                bits |= 1 << i
        return cls(len(vector), bits)

    def to_bits(self) -> tuple[int, ...]:
        return tuple((self.bits >> i) & 1 for i in range(self.width))

    def positions(self) -> list[int]:
        return [i for i in range(self.width) if (self.bits >> i) & 1]

    def popcount(self) -> int:
        return bin(self.bits).count("1")

    def __str__(self) -> str:
        return "<" + ",".join(map(str, self.to_bits())) + ">"


def subgroup_contains(subgroup: GroupEncoding, entity: GroupEncoding) -> bool:
    """True when ``entity`` holds every group of ``subgroup`` (s AND e == s)."""
    if subgroup.width != entity.width:
        raise LengthMismatch(
            f"encodings have widths {subgroup.width} and {entity.width}"
        )
    return subgroup.bits & entity.bits == subgroup.bits


@dataclass(frozen=True)
class GroupUniverse:
    """Ordered sensitive attributes and their flattened group values.

    Bit order is attribute declaration order, then domain order. Group value
    names must be unique across the whole universe so that a bare name (as
    written in a correspondence file) identifies exactly one bit.
    """

    attributes: tuple[SensitiveAttribute, ...]
    flattened: tuple[tuple[str, str], ...] = field(init=False)
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate attribute names in universe")
        flat = tuple((a.name, v) for a in self.attributes for v in a.domain)
        index: dict[str, int] = {}
        for i, (attr, value) in enumerate(flat):
            if value in index:
                raise ValueError(
                    f"group value {value!r} appears in more than one attribute"
                )
            index[value] = i
        object.__setattr__(self, "flattened", flat)
        object.__setattr__(self, "_index", index)

    @classmethod
    def single(cls, name: str, domain: Iterable[str], kind=AttributeKind.EXCLUSIVE):
        return cls((SensitiveAttribute(name, tuple(domain), kind),))

    @property
    def size(self) -> int:
        return len(self.flattened)

    @property
    def values(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.flattened)

    def position(self, value: str) -> int:
        try:
            return self._index[value]
        except KeyError:
            raise UnknownGroupValue(value) from None

    def attribute_of(self, value: str) -> SensitiveAttribute:
        attr_name = self.flattened[self.position(value)][0]
        return next(a for a in self.attributes if a.name == attr_name)

    def attribute_mask(self, attribute: SensitiveAttribute | str) -> int:
        name = attribute if isinstance(attribute, str) else attribute.name
        mask = 0
        for i, (attr, _) in enumerate(self.flattened):
            if attr == name:
                mask |= 1 << i
        if not mask:
            raise KeyError(name)
        return mask

    def encode(self, memberships: Iterable[str]) -> GroupEncoding:
        return encode_groups(self, memberships)

    def decode(self, encoding: GroupEncoding) -> frozenset[str]:
        self._check_width(encoding)
        return frozenset(self.flattened[i][1] for i in encoding.positions())

    def names(self, encoding: GroupEncoding) -> list[str]:
        self._check_width(encoding)
        return [self.flattened[i][1] for i in encoding.positions()]

    def label(self, encoding: GroupEncoding) -> str:
        """Group names in bit order, joined with ``|`` (the file cell format)."""
        return "|".join(self.names(encoding))

    def parse_label(self, label: str, sep: str = "|") -> GroupEncoding:
        names = [s.strip() for s in label.split(sep)] if label.strip() else []
        return self.encode(names)

    def singletons(self) -> list[GroupEncoding]:
        return [GroupEncoding(self.size, 1 << i) for i in range(self.size)]

    def validate_entity(self, encoding: GroupEncoding) -> None:
        """Raise ValueError unless every exclusive attribute has exactly one bit."""
        self._check_width(encoding)
        for attr in self.attributes:
            if not attr.exclusive:
                continue
            held = bin(encoding.bits & self.attribute_mask(attr)).count("1")
            if held != 1:
                raise ValueError(
                    f"entity holds {held} values of exclusive attribute {attr.name!r}"
                )

    def _check_width(self, encoding: GroupEncoding) -> None:
        if encoding.width != self.size:
            raise LengthMismatch(
                f"encoding width {encoding.width} != universe size {self.size}"
            )


def encode_groups(universe: GroupUniverse, memberships: Iterable[str]) -> GroupEncoding:
    bits = 0
    for name in memberships:
        bits |= 1 << universe.position(name)
    return GroupEncoding(universe.size, bits)


def enumerate_level_k_subgroups(
    universe: GroupUniverse, k: int, *, include_pure_setwise: bool = False
) -> list[GroupEncoding]:
    """All level-``k`` subgroups of the intersectional hierarchy.

    Exclusive (binary or multi-valued) attributes contribute at most one value
    to a subgroup; setwise attributes may contribute several. Above level 1 a
    subgroup must combine at least two attributes, so with a setwise genre
    and a binary gender, level 3 holds two genres plus one gender.
    ``include_pure_setwise`` additionally admits combinations drawn entirely
    from a single setwise attribute (e.g. ``Pop|Rock``).

    Output is ordered lexicographically by bit positions.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    attr_of_pos = [attr for attr, _ in universe.flattened]
    kinds = {a.name: a.kind for a in universe.attributes}
    out = []
    for combo in itertools.combinations(range(universe.size), k):
        per_attr: dict[str, int] = {}
        for pos in combo:
            name = attr_of_pos[pos]
            per_attr[name] = per_attr.get(name, 0) + 1
        if any(n > 1 and kinds[a] is not AttributeKind.SETWISE for a, n in per_attr.items()):
            continue
        if k > 1 and len(per_attr) < 2:
            (only,) = per_attr
            if not (include_pure_setwise and kinds[only] is AttributeKind.SETWISE):
                continue
        bits = 0
        for pos in combo:
            bits |= 1 << pos
        out.append(GroupEncoding(universe.size, bits))
    return out
