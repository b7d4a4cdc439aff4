"""Shared fixture builders for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

from emaudit.dataset import Correspondence, Label
from emaudit.groups import AttributeKind, GroupUniverse, SensitiveAttribute

M, N = Label.MATCH, Label.NON_MATCH

FOUR_ROW_CSV = (
    "id_left,id_right,groups_left,groups_right,score,prediction,label\n"
    "e1,e2,g1,g1,,M,N\n"
    "e3,e4,g2,g1,,N,N\n"
    "e1,e4,g1,g1,,M,M\n"
    "e2,e3,g1,g2,,N,M\n"
)


def four_row_universe() -> GroupUniverse:
    return GroupUniverse.single("grp", ["g1", "g2"], AttributeKind.BINARY)


def four_row() -> tuple[GroupUniverse, list[Correspondence]]:
    u = four_row_universe()
    g1, g2 = u.encode(["g1"]), u.encode(["g2"])
    cs = [
        Correspondence("e1", "e2", g1, g1, N, decision=M),
        Correspondence("e3", "e4", g2, g1, N, decision=N),
        Correspondence("e1", "e4", g1, g1, M, decision=M),
        Correspondence("e2", "e3", g1, g2, M, decision=N),
    ]
    return u, cs


def two_group_universe(a="cn", b="de") -> GroupUniverse:
    return GroupUniverse.single("country", [a, b], AttributeKind.BINARY)


def _rows_for_rate(rate: Fraction, n: int, cond: str):
    """(decision, truth) rows of size n whose `cond` rate equals `rate` exactly."""
    k = rate * n
    assert k.denominator == 1, (rate, n)
    k = int(k)
    if cond == "tpr":  # among true matches
        return [(M, M)] * k + [(N, M)] * (n - k)
    if cond == "ppv":  # among predicted matches
        return [(M, M)] * k + [(M, N)] * (n - k)
    if cond == "fdr":
        return [(M, N)] * k + [(M, M)] * (n - k)
    raise ValueError(cond)


def rate_fixture(protected: str, other: str, p_rate, o_rate, cond: str, n: int = 100):
    """Same-group pairs only, so each group's rate (and its complement's) is exact.

    Every row has both sides in one group, so single-mode counting doubles
    every cell and leaves the ratio unchanged.
    """
    u = two_group_universe(protected, other)
    gp, go = u.encode([protected]), u.encode([other])
    cs = []
    for enc, rate, tag in ((gp, p_rate, "p"), (go, o_rate, "o")):
        for i, (h, y) in enumerate(_rows_for_rate(Fraction(str(rate)), n, cond)):
            cs.append(Correspondence(f"{tag}{i}", f"{tag}{i}'", enc, enc, y, decision=h))
    return u, cs


def random_universe(rng: random.Random, max_values: int = 6) -> GroupUniverse:
    total = rng.randint(2, max_values)
    n_attr = rng.randint(1, min(3, total))
    sizes = [1] * n_attr
    for _ in range(total - n_attr):
        sizes[rng.randrange(n_attr)] += 1
    attrs = []
    k = 0
    for i, s in enumerate(sizes):
        if s == 1:
            kind = AttributeKind.SETWISE
        elif s == 2:
            kind = rng.choice([AttributeKind.BINARY, AttributeKind.SETWISE])
        else:
            kind = rng.choice([AttributeKind.EXCLUSIVE, AttributeKind.SETWISE])
        attrs.append(SensitiveAttribute(f"a{i}", tuple(f"v{k + j}" for j in range(s)), kind))
        k += s
    return GroupUniverse(tuple(attrs))


def random_entity_groups(rng: random.Random, u: GroupUniverse) -> list[str]:
    names = []
    for a in u.attributes:
        if a.exclusive:
            names.append(rng.choice(a.domain))
        else:
            names.extend(v for v in a.domain if rng.random() < 0.5)
    return names


def random_instance(rng: random.Random, max_rows: int = 200, max_values: int = 6):
    """A random audit problem: universe, scored/decided rows, targets and config."""
    from emaudit.audit import DisparityConfig
    from emaudit.dataset import AuditTarget
    from emaudit.groups import enumerate_level_k_subgroups

    u = random_universe(rng, max_values)
    n = rng.randint(0, max_rows)
    use_threshold = rng.random() < 0.3
    threshold = rng.choice([0.0, 0.25, 0.5, 0.7, 1.0]) if use_threshold else None
    # coarse scores so that ties with the threshold actually occur
    grid = [i / 20 for i in range(21)]
    cs = []
    for i in range(n):
        truth = M if rng.random() < 0.4 else N
        score = rng.choice(grid) if (use_threshold or rng.random() < 0.5) else None
        decision = rng.choice([M, N]) if (score is None or rng.random() < 0.5) else None
        cs.append(
            Correspondence(
                f"l{i}", f"r{i}",
                u.encode(random_entity_groups(rng, u)),
                u.encode(random_entity_groups(rng, u)),
                truth, score, decision,
            )
        )
    cfg = DisparityConfig(
        tau=rng.choice([0, 0.05, 0.1, 0.2, 0.5]),
        op=rng.choice(["sub", "div"]),
        convention=rng.choice(["eq", "table"]),
        baseline="overall",
    )
    groups = list(u.singletons())
    if rng.random() < 0.5:
        groups += enumerate_level_k_subgroups(u, 2)
    exclusive_singles = [g for g in u.singletons() if u.attribute_of(u.names(g)[0]).exclusive]
    if exclusive_singles and rng.random() < 0.4:
        from dataclasses import replace

        cfg = replace(cfg, baseline="complement")
        groups = exclusive_singles
    groups = rng.sample(groups, min(len(groups), 5))
    targets = [AuditTarget.single(g) for g in groups]
    for a in groups:
        for b in groups:
            if rng.random() < 0.3:
                targets.append(AuditTarget.pairwise(a, b))
    return u, cs, targets, cfg, threshold


def oracle_rows(u, cs):
    return [
        {
            "left": u.decode(c.groups_left),
            "right": u.decode(c.groups_right),
            "truth": c.truth is M,
            "decision": None if c.decision is None else c.decision is M,
            "score": c.score,
        }
        for c in cs
    ]


def oracle_targets(u, targets):
    out = []
    for t in targets:
        if t.mode.value == "single":
            out.append(("single", u.decode(t.single_group)))
        else:
            out.append(("pairwise", (u.decode(t.pair[0]), u.decode(t.pair[1]))))
    return out


def compare_with_oracle(u, cs, targets, cfg, threshold, report, oracle_audit):
    """List of mismatch descriptions (empty when the report equals the oracle)."""
    measures = [m.value for m in report.measures]
    want = oracle_audit(oracle_rows(u, cs), oracle_targets(u, targets), measures, cfg.as_dict(), threshold)
    index = {t: i for i, t in enumerate(targets)}
    bad = []
    for r in report.records:
        key = (index[r.target], r.measure.value)
        got = (r.group_value, r.baseline_value, r.disparity, r.unfair, r.applicable)
        if got != want[key]:
            bad.append(f"{key}: got {got}, want {want[key]}")
    if len(report.records) != len(want):
        bad.append(f"record count {len(report.records)} != {len(want)}")
    return bad
