"""Group-fairness auditing for entity matching."""

from emaudit.audit import (
    AuditReport,
    Baseline,
    Convention,
    DisparityConfig,
    DisparityOp,
    DisparityRecord,
    disparity_div,
    disparity_sub,
    pair_gap,
    pairwise_targets,
    run_audit,
    single_targets,
)
from emaudit.confusion import (
    ConfusionMatrix,
    Outcome,
    PairTable,
    RateSet,
    accumulate_pairwise,
    accumulate_single,
    classify,
    overall_matrix,
    rates,
)
from emaudit.datagen import (
    GenConfig,
    Recipe,
    generate_faculty_match,
    generate_nofly,
    perturb_name,
)
from emaudit.dataset import (
    AuditMode,
    AuditTarget,
    Correspondence,
    FormatConfig,
    Label,
    legitimate_pairwise,
    legitimate_single,
    load_correspondences,
    write_correspondences,
)
from emaudit.groups import (
    AttributeKind,
    GroupEncoding,
    GroupUniverse,
    SensitiveAttribute,
    encode_groups,
    enumerate_level_k_subgroups,
    subgroup_contains,
)
from emaudit.matchers import (
    Comparator,
    Feature,
    RuleSet,
    SimilarityPredicate,
    WeightedScorer,
    rule_match,
    score_correspondences,
    score_match,
    similarity,
)
from emaudit.measures import Direction, Measure, applicability, measure_value
from emaudit.report import render_grid, report_from_json
from emaudit.sensitivity import SweepResult, sensitivity_l2, sweep

__version__ = "0.1.0"
