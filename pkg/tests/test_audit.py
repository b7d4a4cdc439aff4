import random
from fractions import Fraction

import pytest
from _fixtures import M, N, four_row, compare_with_oracle, random_instance, rate_fixture
from _oracle import oracle_audit
from hypothesis import given, settings
from hypothesis import strategies as st

from emaudit.audit import (
    Baseline,
    Convention,
    DisparityConfig,
    DisparityOp,
    disparity_div,
    disparity_sub,
    pair_gap,
    pairwise_targets,
    run_audit,
    single_targets,
)
from emaudit.confusion import ConfusionMatrix, PairTable
from emaudit.dataset import AuditTarget, Correspondence
from emaudit.errors import UndefinedRatio
from emaudit.groups import AttributeKind, GroupUniverse, SensitiveAttribute
from emaudit.measures import ALL_MEASURES, Direction, Measure

F = Fraction
H, L, S = Direction.HIGHER_BETTER, Direction.LOWER_BETTER, Direction.SYMMETRIC


def test_disparity_sub_examples():
    assert disparity_sub(F("0.9"), F("0.7"), H) == F("0.2")
    assert disparity_sub(F("0.9"), F("0.95"), H) == 0
    assert disparity_sub(F("0.1"), F("0.3"), L) == F("0.2")
    assert disparity_sub(F("0.4"), F("0.1"), S) == F("0.3")


def test_disparity_div_examples():
    assert disparity_div(F("0.8"), F("0.6"), H) == F("0.25")
    assert disparity_div(F("0.8"), F("0.9"), H) == 0
    assert disparity_div(F("0.1"), F("0.2"), L) == F("0.5")
    assert disparity_div(F(0), F("0.2"), H) is None
    assert disparity_div(F("0.2"), F(0), L) is None


@pytest.mark.parametrize(
    "p, o, direction, op, expected",
    [
        ("0.59", "0.85", H, "sub", "0.26"),
        ("0.59", "0.85", H, "div", F(85, 59) - 1),
        ("0.48", "0.72", H, "sub", "0.24"),
        ("0.48", "0.72", H, "div", "0.5"),
        ("0.03", "0.58", H, "sub", "0.55"),
        ("0.19", "0.05", L, "sub", "0.14"),
        ("0.19", "0.05", L, "div", "2.8"),
        ("0.17", "0.09", L, "div", F(8, 9)),
        ("0.95", "0.90", H, "sub", "-0.05"),
    ],
)
def test_pair_gap_exact(p, o, direction, op, expected):
    assert pair_gap(F(p), F(o), direction, op) == F(expected)


def test_pair_gap_zero_denominator():
    with pytest.raises(UndefinedRatio):
        pair_gap(F(0), F("0.5"), H, "div")
    with pytest.raises(UndefinedRatio):
        pair_gap(F("0.5"), F(0), L, "div")


def test_config_validation():
    with pytest.raises(ValueError):
        DisparityConfig(tau=-0.1)
    cfg = DisparityConfig(op="div", convention="table", baseline="complement")
    assert cfg.op is DisparityOp.DIV and cfg.convention is Convention.TABLE
    assert cfg.baseline is Baseline.COMPLEMENT
    assert DisparityConfig().exact_tau == F(1, 5)


def test_four_row_audit():
    u, cs = four_row()
    g1, g2 = u.encode(["g1"]), u.encode(["g2"])
    report = run_audit(cs, single_targets([g1, g2]), ALL_MEASURES, universe=u)
    assert report.matrices[AuditTarget.single(g1)] == ConfusionMatrix(2, 2, 1, 1)
    assert report.matrices[AuditTarget.single(g2)] == ConfusionMatrix(0, 0, 1, 1)
    t2 = AuditTarget.single(g2)
    tprp = report.record(t2, Measure.TPRP)
    assert tprp.group_value == 0 and tprp.baseline_value == F(1, 2)
    assert tprp.disparity == F(1, 2) and tprp.unfair
    ppvp = report.record(t2, Measure.PPVP)
    assert ppvp.group_value is None and not ppvp.applicable and not ppvp.unfair
    assert report.discriminated_single == [g2]
    flagged = {r.measure.value for r in report.records if r.unfair}
    assert flagged == {"SP", "TPRP", "FNRP", "EO"}


def test_ditto_faculty_fixture_flags_cn():
    u, cs = rate_fixture("cn", "de", "0.59", "0.85", "tpr")
    cfg = DisparityConfig(0.2, "div", "table", "complement")
    cn, de = u.encode(["cn"]), u.encode(["de"])
    report = run_audit(cs, single_targets([cn, de]), [Measure.TPRP], cfg, universe=u)
    rec = report.record(AuditTarget.single(cn), Measure.TPRP)
    assert rec.group_value == F("0.59") and rec.baseline_value == F("0.85")
    assert rec.disparity == F(85, 59) - 1
    assert rec.unfair
    assert report.discriminated_single == [cn]


def test_gnem_faculty_tpr_not_flagged():
    u, cs = rate_fixture("cn", "de", "0.78", "0.90", "tpr")
    cfg = DisparityConfig(0.2, "div", "table", "complement")
    report = run_audit(cs, single_targets([u.encode(["cn"])]), [Measure.TPRP], cfg, universe=u)
    (rec,) = report.records
    assert not rec.unfair
    assert abs(float(rec.disparity) - 0.1538) < 1e-4


def test_complement_requires_exclusive_singletons():
    u = GroupUniverse(
        (
            SensitiveAttribute("g", ("F", "M"), AttributeKind.BINARY),
            SensitiveAttribute("t", ("a", "b"), AttributeKind.SETWISE),
        )
    )
    cfg = DisparityConfig(baseline="complement")
    with pytest.raises(ValueError):
        run_audit([], [AuditTarget.single(u.encode(["a"]))], [Measure.AP], cfg, universe=u)
    with pytest.raises(ValueError):
        run_audit([], [AuditTarget.single(u.encode(["F", "a"]))], [Measure.AP], cfg, universe=u)
    run_audit([], [AuditTarget.single(u.encode(["F"]))], [Measure.AP], cfg, universe=u)


def test_pairwise_non_overlapping_inapplicable():
    u, cs = four_row()
    g1, g2 = u.encode(["g1"]), u.encode(["g2"])
    # drop the cross-group true match so the pair has no TP/FN
    cs = [c for c in cs if not (c.truth is M and c.groups_left != c.groups_right)]
    report = run_audit(cs, [AuditTarget.pairwise(g1, g2)], ALL_MEASURES)
    for r in report.records:
        if r.measure.single_only:
            assert not r.applicable or r.measure is Measure.EO
        else:
            assert r.applicable or r.group_value is None


def test_pairwise_cross_true_match_enables_tprp():
    u, cs = four_row()
    g1, g2 = u.encode(["g1"]), u.encode(["g2"])
    report = run_audit(cs, [AuditTarget.pairwise(g1, g2)], [Measure.TPRP])
    assert report.records[0].applicable


def test_empty_input():
    u, _ = four_row()
    report = run_audit([], single_targets(u.singletons()), ALL_MEASURES)
    assert not report.any_unfair
    assert all(not r.applicable for r in report.records)


def test_pairwise_targets_unordered_with_repetition():
    u, _ = four_row()
    g1, g2 = u.singletons()
    assert [t.pair for t in pairwise_targets([g1, g2])] == [(g1, g1), (g1, g2), (g2, g2)]


def test_workers_do_not_change_output():
    rng = random.Random(5)
    u, cs, targets, cfg, threshold = random_instance(rng, max_rows=150)
    a = run_audit(cs, targets, ALL_MEASURES, cfg, threshold=threshold, workers=1)
    b = run_audit(cs, targets, ALL_MEASURES, cfg, threshold=threshold, workers=4)
    assert a.records == b.records


def test_env_thread_cap(monkeypatch):
    monkeypatch.setenv("EMAUDIT_THREADS", "3")
    u, cs = four_row()
    report = run_audit(cs, single_targets(u.singletons()), ALL_MEASURES)
    assert len(report.records) == 2 * len(ALL_MEASURES)


def test_prebuilt_table_equivalent():
    u, cs = four_row()
    t = single_targets(u.singletons())
    assert run_audit(PairTable.from_correspondences(cs), t, ALL_MEASURES).records == run_audit(
        cs, t, ALL_MEASURES
    ).records


# -- properties ---------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_matches_bruteforce_oracle(seed):
    u, cs, targets, cfg, threshold = random_instance(random.Random(seed), max_rows=60)
    report = run_audit(cs, targets, ALL_MEASURES, cfg, threshold=threshold, universe=u)
    assert compare_with_oracle(u, cs, targets, cfg, threshold, report, oracle_audit) == []


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_eo_is_union_of_components(seed):
    u, cs, targets, cfg, threshold = random_instance(random.Random(seed), max_rows=60)
    report = run_audit(cs, targets, ALL_MEASURES, cfg, threshold=threshold)
    for t in targets:
        eo = report.record(t, Measure.EO).unfair
        assert eo == (report.record(t, Measure.TPRP).unfair or report.record(t, Measure.FPRP).unfair)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_record_invariants(seed):
    u, cs, targets, cfg, threshold = random_instance(random.Random(seed), max_rows=60)
    report = run_audit(cs, targets, ALL_MEASURES, cfg, threshold=threshold)
    tau = cfg.exact_tau
    for r in report.records:
        if r.unfair and r.measure is not Measure.EO:
            assert r.applicable and r.disparity is not None and r.disparity > tau
    flagged = {t for t in targets if any(report.record(t, m).unfair for m in ALL_MEASURES)}
    listed = {AuditTarget.single(g) for g in report.discriminated_single} | {
        AuditTarget.pairwise(*p) for p in report.discriminated_pairwise
    }
    assert flagged == listed


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_swap_leaves_records_unchanged(seed):
    u, cs, targets, cfg, threshold = random_instance(random.Random(seed), max_rows=60)
    a = run_audit(cs, targets, ALL_MEASURES, cfg, threshold=threshold)
    b = run_audit([c.swapped() for c in cs], targets, ALL_MEASURES, cfg, threshold=threshold)
    assert a.records == b.records


def test_single_fixture_rows_match_doubling():
    # both sides in the group add 2; one side adds 1
    u, _ = four_row()
    g1, g2 = u.singletons()
    cs = [
        Correspondence("a", "b", g1, g1, M, decision=M),
        Correspondence("c", "d", g1, g2, N, decision=M),
    ]
    report = run_audit(cs, single_targets([g1]), [Measure.PPVP])
    assert report.matrices[AuditTarget.single(g1)] == ConfusionMatrix(2, 1, 0, 0)
    assert report.records[0].group_value == F(2, 3)
