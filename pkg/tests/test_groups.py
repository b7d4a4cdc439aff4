import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from emaudit.errors import LengthMismatch, UnknownGroupValue
from emaudit.groups import (
    AttributeKind,
    GroupEncoding,
    GroupUniverse,
    SensitiveAttribute,
    encode_groups,
    enumerate_level_k_subgroups,
    subgroup_contains,
)


@pytest.fixture
def music():
    # lexicographic order over all groups: Female, Male, Country, Pop, Rock
    return GroupUniverse(
        (
            SensitiveAttribute("gender", ("Female", "Male"), AttributeKind.BINARY),
            SensitiveAttribute("genre", ("Country", "Pop", "Rock"), AttributeKind.SETWISE),
        )
    )


def test_entity_encoding_matches_worked_example(music):
    e = encode_groups(music, ["Female", "Pop", "Rock"])
    assert e.to_bits() == (1, 0, 0, 1, 1)
    assert str(e) == "<1,0,0,1,1>"


def test_subgroup_encoding_and_containment(music):
    s = encode_groups(music, ["Female", "Pop"])
    e = encode_groups(music, ["Female", "Pop", "Rock"])
    assert s.to_bits() == (1, 0, 0, 1, 0)
    assert subgroup_contains(s, e)
    assert not subgroup_contains(e, s)


def test_unknown_value_raises(music):
    with pytest.raises(UnknownGroupValue):
        encode_groups(music, ["Jazz"])


def test_empty_membership_is_zero_vector(music):
    assert encode_groups(music, []).to_bits() == (0, 0, 0, 0, 0)


def test_width_mismatch():
    with pytest.raises(LengthMismatch):
        subgroup_contains(GroupEncoding(3, 1), GroupEncoding(4, 1))


def test_from_bits_round_trip():
    enc = GroupEncoding.from_bits([0, 1, 1, 0])
    assert enc.to_bits() == (0, 1, 1, 0)
    assert enc.popcount() == 2
    assert enc.positions() == [1, 2]


def test_level_one_is_every_value(music):
    got = enumerate_level_k_subgroups(music, 1)
    assert [music.label(s) for s in got] == ["Female", "Male", "Country", "Pop", "Rock"]


def test_level_two_mixes_attributes(music):
    got = {music.label(s) for s in enumerate_level_k_subgroups(music, 2)}
    assert len(got) == 6
    assert "Female|Pop" in got
    assert "Female|Male" not in got  # exclusive attribute contributes at most one value
    assert "Pop|Rock" not in got  # needs a second attribute by default


def test_pure_setwise_flag(music):
    got = {music.label(s) for s in enumerate_level_k_subgroups(music, 2, include_pure_setwise=True)}
    assert {"Country|Pop", "Country|Rock", "Pop|Rock"} <= got
    assert len(got) == 9


def test_level_three(music):
    got = [music.label(s) for s in enumerate_level_k_subgroups(music, 3)]
    # two genres plus one gender
    assert len(got) == 6
    assert all(s.count("|") == 2 for s in got)


def test_level_beyond_possible_is_empty(music):
    assert enumerate_level_k_subgroups(music, 5) == []
    with pytest.raises(ValueError):
        enumerate_level_k_subgroups(music, 0)


def test_duplicate_value_names_rejected():
    with pytest.raises(ValueError):
        GroupUniverse(
            (
                SensitiveAttribute("a", ("x", "y"), AttributeKind.BINARY),
                SensitiveAttribute("b", ("y", "z"), AttributeKind.BINARY),
            )
        )


def test_binary_needs_two_values():
    with pytest.raises(ValueError):
        SensitiveAttribute("a", ("x",), AttributeKind.BINARY)


def test_validate_entity(music):
    music.validate_entity(music.encode(["Male", "Rock"]))
    with pytest.raises(ValueError):
        music.validate_entity(music.encode(["Female", "Male"]))
    with pytest.raises(ValueError):
        music.validate_entity(music.encode(["Pop"]))


# -- properties ---------------------------------------------------------------

widths = st.integers(min_value=1, max_value=70)


@st.composite
def encoding_pairs(draw):
    w = draw(widths)
    a = draw(st.integers(min_value=0, max_value=2**w - 1))
    b = draw(st.integers(min_value=0, max_value=2**w - 1))
    return GroupEncoding(w, a), GroupEncoding(w, b)


@given(encoding_pairs())
def test_containment_is_bitwise_subset(pair):
    s, e = pair
    expected = all(not sb or eb for sb, eb in zip(s.to_bits(), e.to_bits()))
    assert subgroup_contains(s, e) == expected


@given(encoding_pairs())
def test_containment_reflexive_and_antisymmetric(pair):
    s, e = pair
    assert subgroup_contains(s, s)
    if subgroup_contains(s, e) and subgroup_contains(e, s):
        assert s == e


@given(st.integers(1, 12).flatmap(lambda w: st.tuples(st.just(w), st.integers(0, 2**w - 1), st.integers(0, 2**w - 1), st.integers(0, 2**w - 1))))
def test_containment_transitive(args):
    w, a, b, c = args
    s, t, u = GroupEncoding(w, a & b & c), GroupEncoding(w, b & c), GroupEncoding(w, c)
    assert subgroup_contains(s, t) and subgroup_contains(t, u) and subgroup_contains(s, u)


@given(st.lists(st.integers(1, 4), min_size=1, max_size=3), st.lists(st.booleans(), min_size=3, max_size=3), st.integers(1, 6))
def test_level_k_popcount_and_count(sizes, setwise_flags, k):
    attrs = []
    n = 0
    for i, s in enumerate(sizes):
        kind = AttributeKind.SETWISE if setwise_flags[i] or s == 1 else (
            AttributeKind.BINARY if s == 2 else AttributeKind.EXCLUSIVE
        )
        attrs.append(SensitiveAttribute(f"a{i}", tuple(f"v{n + j}" for j in range(s)), kind))
        n += s
    u = GroupUniverse(tuple(attrs))
    got = enumerate_level_k_subgroups(u, k)
    assert all(s.popcount() == k for s in got)
    assert len(set(got)) == len(got)
    # brute-force count over all k-subsets
    expected = 0
    for combo in itertools.combinations(range(u.size), k):
        per = {}
        for p in combo:
            per.setdefault(u.flattened[p][0], []).append(p)
        kinds = {a.name: a.kind for a in u.attributes}
        if any(len(v) > 1 and kinds[a] is not AttributeKind.SETWISE for a, v in per.items()):
            continue
        if k > 1 and len(per) < 2:
            continue
        expected += 1
    assert len(got) == expected


@given(st.data())
def test_decode_encode_round_trip(data):
    u = GroupUniverse(
        (
            SensitiveAttribute("g", ("F", "M"), AttributeKind.BINARY),
            SensitiveAttribute("t", ("a", "b", "c", "d"), AttributeKind.SETWISE),
        )
    )
    names = data.draw(st.sets(st.sampled_from(u.values)))
    enc = u.encode(names)
    assert u.decode(enc) == frozenset(names)
    assert u.parse_label(u.label(enc)) == enc
