"""Run configuration: one TOML file with sections for every command.

Relative paths resolve against the config file's directory. Example::

    [universe]
    [[universe.attributes]]
    name = "country"
    kind = "binary"
    domain = ["cn", "de"]

    [data]
    correspondences = "gen/pairs.csv"
    left_table = "gen/left.csv"
    right_table = "gen/right.csv"
    output_dir = "out"

    [matcher]
    kind = "rules"            # rules | scorer | external
    [[matcher.rules]]
    predicates = [{attribute = "fullName", feature = "levenshtein", comparator = "gt", threshold = 0.5}]

    [audit]
    modes = ["single", "pairwise"]
    measures = "all"
    tau = 0.2
"""

from __future__ import annotations

import os
import sys
from collections.abc import Mapping
from dataclasses import dataclass, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from emaudit.audit import (
    DisparityConfig,
    pairwise_targets,
    single_targets,
)
from emaudit.datagen import GenConfig, Recipe, bundled_source
from emaudit.dataset import AuditMode, AuditTarget, FormatConfig
from emaudit.errors import ConfigError
from emaudit.groups import (
    AttributeKind,
    GroupUniverse,
    SensitiveAttribute,
    enumerate_level_k_subgroups,
)
from emaudit.matchers import (
    DEFAULT_MATCH_THRESHOLD,
    RuleSet,
    SimilarityPredicate,
    WeightedScorer,
)
from emaudit.measures import Measure
from emaudit.sensitivity import DEFAULT_THRESHOLDS


class MatcherKind:
    RULES = "rules"
    SCORER = "scorer"
    EXTERNAL = "external"
    ALL = (RULES, SCORER, EXTERNAL)


@dataclass(frozen=True)
class AuditSection:
    modes: tuple[AuditMode, ...] = (AuditMode.SINGLE,)
    groups: tuple[str, ...] | None = None
    level: int | None = None
    include_pure_setwise: bool = False
    pairs: tuple[tuple[str, str], ...] | None = None
    measures: tuple[Measure, ...] = tuple(Measure)
    disparity: DisparityConfig = DisparityConfig()
    threshold: float | None = None


@dataclass(frozen=True)
class MatcherSection:
    kind: str = MatcherKind.EXTERNAL
    threshold: float = DEFAULT_MATCH_THRESHOLD
    rules: RuleSet | None = None
    scorer: WeightedScorer | None = None


@dataclass(frozen=True)
class SweepSection:
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    measures: tuple[Measure, ...] = (Measure.TPRP,)
    label: str = "matcher"
    method: str = "l2"


@dataclass(frozen=True)
class DataSection:
    correspondences: Path | None = None
    predictions: Path | None = None
    left_table: Path | None = None
    right_table: Path | None = None
    output_dir: Path = Path(".")
    format: FormatConfig = FormatConfig()


@dataclass(frozen=True)
class RunConfig:
    universe: GroupUniverse | None
    data: DataSection = DataSection()
    audit: AuditSection = AuditSection()
    matcher: MatcherSection = MatcherSection()
    sweep: SweepSection = SweepSection()
    generate: GenConfig | None = None
    generate_dir: Path | None = None
    base_dir: Path = Path(".")

    def require_universe(self) -> GroupUniverse:
        if self.universe is not None:
            return self.universe
        if self.generate is not None:
            cfg = self.generate
            kind = AttributeKind.BINARY if len(cfg.groups) == 2 else AttributeKind.EXCLUSIVE
            return GroupUniverse.single(cfg.group_column, cfg.groups, kind)
        raise ConfigError("universe: no [universe] section and no [generate] section to derive it")

    @property
    def audit_input(self) -> Path:
        """Correspondences the audit reads: matcher output unless predictions are external."""
        d = self.data
        if self.matcher.kind == MatcherKind.EXTERNAL:
            if d.predictions is not None:
                return d.predictions
            if d.correspondences is None:
                raise ConfigError("data.correspondences: required for an external matcher")
            return d.correspondences
        return d.predictions or d.output_dir / "predictions.csv"

    def targets(self, universe: GroupUniverse) -> list[AuditTarget]:
        a = self.audit
        try:
            if a.groups is not None:
                groups = [universe.parse_label(g) for g in a.groups]
            elif a.level is not None:
                groups = enumerate_level_k_subgroups(
                    universe, a.level, include_pure_setwise=a.include_pure_setwise
                )
            else:
                groups = universe.singletons()
            out: list[AuditTarget] = []
            if AuditMode.SINGLE in a.modes:
                out.extend(single_targets(groups))
            if AuditMode.PAIRWISE in a.modes:
                if a.pairs is not None:
                    out.extend(
                        AuditTarget.pairwise(universe.parse_label(x), universe.parse_label(y))
                        for x, y in a.pairs
                    )
                else:
                    out.extend(pairwise_targets(groups))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"audit: bad target selection ({exc})") from exc
        return out

    def with_overrides(self, **kw) -> RunConfig:
        """Apply CLI flag overrides; ``None`` values are ignored."""
        cfg = self
        disp = {k: kw.pop(k) for k in ("tau", "op", "convention", "baseline") if kw.get(k) is not None}
        kw = {k: v for k, v in kw.items() if v is not None}
        audit = cfg.audit
        if disp:
            try:
                audit = replace(audit, disparity=replace(audit.disparity, **disp))
            except ValueError as exc:
                raise ConfigError(f"audit: {exc}") from exc
        if "threshold" in kw:
            audit = replace(audit, threshold=_unit(kw["threshold"], "threshold"))
        if "mode" in kw:
            audit = replace(audit, modes=(AuditMode(kw["mode"]),))
        if "measures" in kw:
            audit = replace(audit, measures=tuple(parse_measures(kw["measures"], "measures")))
        cfg = replace(cfg, audit=audit)
        if "seed" in kw:
            if cfg.generate is None:
                raise ConfigError("generate: --seed given but config has no [generate] section")
            try:
                cfg = replace(cfg, generate=replace(cfg.generate, seed=int(kw["seed"])))
            except ValueError as exc:
                raise ConfigError(f"generate.seed: {exc}") from exc
        return cfg


# -- parsing ------------------------------------------------------------------


def _unit(v, name: str) -> float:
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {v!r}") from None
    if not 0.0 <= v <= 1.0:
        raise ConfigError(f"{name}: {v} outside [0, 1]")
    return v


def parse_measures(v, name: str) -> list[Measure]:
    try:
        return Measure.parse_list(v)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _path(base: Path, v) -> Path | None:
    if v is None:
        return None
    p = Path(v)
    return p if p.is_absolute() else Path(os.path.normpath(base / p))


def _universe(doc: Mapping | None) -> GroupUniverse | None:
    if not doc:
        return None
    try:
        attrs = tuple(
            SensitiveAttribute(a["name"], tuple(a["domain"]), AttributeKind(a.get("kind", "multi-exclusive")))
            for a in doc.get("attributes", [])
        )
        return GroupUniverse(attrs)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"universe: {exc}") from None


def _data(doc: Mapping, base: Path) -> DataSection:
    fmt = FormatConfig(
        delimiter=doc.get("delimiter", ","),
        group_separator=doc.get("group_separator", "|"),
        columns=dict(doc.get("columns", {})),
        validate_entities=bool(doc.get("validate_entities", True)),
    )
    return DataSection(
        correspondences=_path(base, doc.get("correspondences")),
        predictions=_path(base, doc.get("predictions")),
        left_table=_path(base, doc.get("left_table")),
        right_table=_path(base, doc.get("right_table")),
        output_dir=_path(base, doc.get("output_dir", ".")),
        format=fmt,
    )


def _audit(doc: Mapping) -> AuditSection:
    try:
        modes = doc.get("modes", doc.get("mode", ["single"]))
        if isinstance(modes, str):
            modes = [modes]
        disparity = DisparityConfig(
            tau=float(doc.get("tau", 0.2)),
            op=doc.get("op", doc.get("disparity", "sub")),
            convention=doc.get("convention", "eq"),
            baseline=doc.get("baseline", "overall"),
        )
        pairs = doc.get("pairs")
        return AuditSection(
            modes=tuple(AuditMode(m) for m in modes),
            groups=tuple(doc["groups"]) if "groups" in doc else None,
            level=int(doc["level"]) if "level" in doc else None,
            include_pure_setwise=bool(doc.get("include_pure_setwise", False)),
            pairs=tuple((str(a), str(b)) for a, b in pairs) if pairs is not None else None,
            measures=tuple(parse_measures(doc.get("measures", "all"), "audit.measures")),
            disparity=disparity,
            threshold=_unit(doc["threshold"], "audit.threshold") if "threshold" in doc else None,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"audit: {exc}") from None


def _matcher(doc: Mapping) -> MatcherSection:
    kind = doc.get("kind", MatcherKind.EXTERNAL)
    if kind not in MatcherKind.ALL:
        raise ConfigError(f"matcher.kind: expected one of {MatcherKind.ALL}, got {kind!r}")
    lowercase = bool(doc.get("lowercase", True))
    rules = scorer = None
    try:
        if kind == MatcherKind.RULES:
            clauses = doc.get("rules")
            if not clauses:
                raise ConfigError("matcher.rules: a rule matcher needs at least one clause")
            rules = RuleSet(
                tuple(tuple(SimilarityPredicate(**p) for p in c["predicates"]) for c in clauses),
                lowercase=lowercase,
            )
        elif kind == MatcherKind.SCORER:
            feats = doc.get("features")
            if not feats:
                raise ConfigError("matcher.features: a scorer needs at least one feature")
            scorer = WeightedScorer(
                tuple((f["attribute"], f["feature"], f.get("weight", 1.0)) for f in feats),
                lowercase=lowercase,
            )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"matcher: {exc}") from None
    return MatcherSection(
        kind=kind,
        threshold=_unit(doc.get("threshold", DEFAULT_MATCH_THRESHOLD), "matcher.threshold"),
        rules=rules,
        scorer=scorer,
    )


def _sweep(doc: Mapping) -> SweepSection:
    if "thresholds" in doc:
        ts = tuple(_unit(t, "sweep.thresholds") for t in doc["thresholds"])
    elif "start" in doc:
        start, stop = _unit(doc["start"], "sweep.start"), _unit(doc["stop"], "sweep.stop")
        step = float(doc.get("step", 0.05))
        if step <= 0:
            raise ConfigError("sweep.step: must be positive")
        n = int(round((stop - start) / step)) + 1
        ts = tuple(round(start + i * step, 10) for i in range(max(n, 0)))
    else:
        ts = DEFAULT_THRESHOLDS
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ConfigError("sweep.thresholds: must be strictly increasing")
    method = doc.get("method", "l2")
    if method not in ("l2", "mean_abs"):
        raise ConfigError(f"sweep.method: expected 'l2' or 'mean_abs', got {method!r}")
    measures = doc.get("measures", doc.get("measure", ["TPRP"]))
    return SweepSection(
        thresholds=ts,
        measures=tuple(parse_measures(measures, "sweep.measures")),
        label=str(doc.get("label", "matcher")),
        method=method,
    )


def _generate(doc: Mapping, base: Path) -> tuple[GenConfig, Path]:
    source = doc.get("source")
    if source is None:
        raise ConfigError("generate.source: missing (use a CSV path or 'bundled')")
    recipe = doc.get("recipe", "faculty")
    try:
        recipe = Recipe(recipe)
    except ValueError:
        raise ConfigError(f"generate.recipe: unknown recipe {recipe!r}") from None
    if str(source).startswith("bundled"):
        src = bundled_source(recipe)
    else:
        src = _path(base, source)
        if not src.exists():
            raise ConfigError(f"generate.source: file not found: {src}")
    right_src = _path(base, doc.get("right_source"))
    if right_src is not None and not right_src.exists():
        raise ConfigError(f"generate.right_source: file not found: {right_src}")
    drop = doc.get("nonmatch_drop")
    if drop is not None:
        drop = (drop["group"], float(drop["fraction"])) if isinstance(drop, Mapping) else tuple(drop)
    keys = ("group_column", "id_column", "left_size", "right_size")
    extra = {k: doc[k] for k in keys if k in doc}
    for k in ("groups", "perturb_fields"):
        if k in doc:
            extra[k] = tuple(doc[k])
    for k in ("group_ratios", "left_ratios"):
        if k in doc:
            extra[k] = dict(doc[k])
    try:
        cfg = GenConfig(
            seed=int(doc.get("seed", 0)),
            recipe=recipe,
            source=src,
            right_source=right_src,
            nonmatch_drop=drop,
            **extra,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"generate: {exc}") from None
    return cfg, _path(base, doc.get("output_dir", "."))


def parse_config(doc: Mapping, base_dir: Path | str = ".") -> RunConfig:
    base = Path(base_dir)
    known = {"universe", "data", "audit", "matcher", "sweep", "generate"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    gen = gen_dir = None
    if "generate" in doc:
        gen, gen_dir = _generate(doc["generate"], base)
    return RunConfig(
        universe=_universe(doc.get("universe")),
        data=_data(doc.get("data", {}), base),
        audit=_audit(doc.get("audit", {})),
        matcher=_matcher(doc.get("matcher", {})),
        sweep=_sweep(doc.get("sweep", {})),
        generate=gen,
        generate_dir=gen_dir,
        base_dir=base,
    )


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: {path}: {exc}") from None
    return parse_config(doc, path.parent)
