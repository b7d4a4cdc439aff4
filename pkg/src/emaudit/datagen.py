"""Semi-synthetic social matching benchmarks.

Two recipes build a labelled entity-matching task from a people table:

``faculty``
    Keep rows of two countries, pair every record with a name-perturbed copy
    of every record (Cartesian product), label pairs with equal scholar ids as
    matches, then optionally drop a fraction of the non-matches that involve
    one group to widen the representation gap.
``nofly``
    Draw a passenger table and a watch-list table from the same source at
    different racial ratios, take their Cartesian product, label equal person
    ids as matches and perturb the watch-list names.

All randomness comes from numpy's PCG64 seeded from ``GenConfig.seed``, with
separate child streams for sampling, perturbation and dropping, so outputs
are a pure function of the config and the source bytes.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import string
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from emaudit.dataset import Label, write_entity_table
from emaudit.errors import InsufficientSourceRows, MissingColumn
from emaudit.groups import AttributeKind, GroupEncoding, GroupUniverse

ALPHABET = string.ascii_lowercase


class Recipe(str, enum.Enum):
    FACULTY_MATCH = "faculty"
    NOFLY = "nofly"


_RECIPE_DEFAULTS = {
    Recipe.FACULTY_MATCH: dict(
        group_column="country",
        id_column="scholarID",
        groups=("cn", "de"),
        perturb_fields=("fullName",),
        bundled="faculty_source.csv",
    ),
    Recipe.NOFLY: dict(
        group_column="race",
        id_column="personID",
        groups=("Caucasian", "African-American"),
        perturb_fields=("firstName", "lastName"),
        bundled="compas_source.csv",
        left_ratios={"Caucasian": 0.8, "African-American": 0.2},
        group_ratios={"Caucasian": 0.48, "African-American": 0.52},
        left_size=100,
        right_size=50,
    ),
}


@dataclass(frozen=True)
class GenConfig:
    """Generator settings; unset fields take the recipe's defaults.

    For ``nofly`` ``left_ratios``/``left_size`` describe the passenger table
    and ``group_ratios``/``right_size`` the watch list. For ``faculty`` the
    optional ``left_size`` with ``group_ratios`` subsamples the source before
    the product.
    """

    seed: int = 0
    recipe: Recipe = Recipe.FACULTY_MATCH
    source: Path | None = None
    right_source: Path | None = None
    group_column: str | None = None
    id_column: str | None = None
    groups: tuple[str, ...] | None = None
    perturb_fields: tuple[str, ...] | None = None
    group_ratios: Mapping[str, float] | None = None
    left_ratios: Mapping[str, float] | None = None
    left_size: int | None = None
    right_size: int | None = None
    nonmatch_drop: tuple[str, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "recipe", Recipe(self.recipe))
        defaults = _RECIPE_DEFAULTS[self.recipe]
        for name in (
            "group_column", "id_column", "groups", "perturb_fields",
            "group_ratios", "left_ratios", "left_size", "right_size",
        ):
            if getattr(self, name) is None and name in defaults:
                object.__setattr__(self, name, defaults[name])
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "perturb_fields", tuple(self.perturb_fields))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        for name in ("group_ratios", "left_ratios"):
            ratios = getattr(self, name)
            if ratios is None:
                continue
            if any(not 0.0 <= r <= 1.0 for r in ratios.values()):
                raise ValueError(f"{name} fractions must lie in [0, 1]")
            if abs(sum(ratios.values()) - 1.0) > 1e-9:
                raise ValueError(f"{name} must sum to 1, got {sum(ratios.values())}")
            unknown = set(ratios) - set(self.groups)
            if unknown:
                raise ValueError(f"{name} mentions unknown groups {sorted(unknown)}")
        if self.nonmatch_drop is not None:
            group, frac = self.nonmatch_drop
            if not 0.0 <= frac <= 1.0:
                raise ValueError("nonmatch_drop fraction must lie in [0, 1]")
            if group != "*" and group not in self.groups:
                raise ValueError(f"nonmatch_drop group {group!r} is not a configured group")
        for name in ("left_size", "right_size"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0")

    def source_path(self) -> Path:
        if self.source is not None:
            return Path(self.source)
        return bundled_source(self.recipe)


def bundled_source(recipe: Recipe | str) -> Path:
    name = _RECIPE_DEFAULTS[Recipe(recipe)]["bundled"]
    return Path(str(resources.files("emaudit") / "data" / name))


def perturb_name(name: str, rng: np.random.Generator) -> str:
    """Apply one random insert, delete or substitute (edit distance exactly 1)."""
    ops = ("insert",) if not name else ("insert", "delete", "substitute")
    op = ops[int(rng.integers(len(ops)))]
    if op == "insert":
        pos = int(rng.integers(len(name) + 1))
        ch = ALPHABET[int(rng.integers(len(ALPHABET)))]
        return name[:pos] + ch + name[pos:]
    pos = int(rng.integers(len(name)))
    if op == "delete":
        return name[:pos] + name[pos + 1:]
    choices = [c for c in ALPHABET if c != name[pos]]
    return name[:pos] + choices[int(rng.integers(len(choices)))] + name[pos + 1:]


def largest_remainder(total: int, ratios: Mapping[str, float]) -> dict[str, int]:
    """Integer quotas proportional to ``ratios`` that sum to ``total`` exactly."""
    raw = {g: total * r for g, r in ratios.items()}
    quotas = {g: math.floor(v) for g, v in raw.items()}
    short = total - sum(quotas.values())
    order = sorted(raw, key=lambda g: (-(raw[g] - quotas[g]), list(ratios).index(g)))
    for g in order[:short]:
        quotas[g] += 1
    return quotas


def read_source(path: Path, required: Sequence[str]) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        columns = list(reader.fieldnames or [])
        for col in required:
            if col not in columns:
                raise MissingColumn(col)
        return columns, [dict(r) for r in reader]


class CandidatePair(NamedTuple):
    id_left: str
    id_right: str
    groups_left: GroupEncoding
    groups_right: GroupEncoding
    truth: Label
    score: float | None = None
    decision: Label | None = None


@dataclass
class GeneratedDataset:
    config: GenConfig
    universe: GroupUniverse
    columns: list[str]
    left: list[dict[str, str]]
    right: list[dict[str, str]]
    originals: list[dict[str, str]] = field(default_factory=list)

    def _arrays(self):
        cfg = self.config
        gpos = {g: i for i, g in enumerate(cfg.groups)}
        lkey = np.array([r[cfg.id_column] for r in self.left], dtype=object)
        rkey = np.array([r[cfg.id_column] for r in self.right], dtype=object)
        lgrp = np.array([gpos[r[cfg.group_column]] for r in self.left], dtype=np.int64)
        rgrp = np.array([gpos[r[cfg.group_column]] for r in self.right], dtype=np.int64)
        return lkey, rkey, lgrp, rgrp

    def blocks(self) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
        """Per left row: (left index, kept right indices, match flags)."""
        cfg = self.config
        lkey, rkey, lgrp, rgrp = self._arrays()
        drop_rng = np.random.Generator(np.random.PCG64(_streams(cfg.seed)[2]))
        drop_group = None
        if cfg.nonmatch_drop is not None:
            g, frac = cfg.nonmatch_drop
            drop_group = -1 if g == "*" else cfg.groups.index(g)
        all_right = np.arange(len(self.right))
        for i in range(len(self.left)):
            match = rkey == lkey[i]
            keep = np.ones(len(self.right), dtype=bool)
            if drop_group is not None:
                u = drop_rng.random(len(self.right))
                involved = (
                    np.ones(len(self.right), dtype=bool)
                    if drop_group == -1
                    else (rgrp == drop_group) | (lgrp[i] == drop_group)
                )
                keep = ~(involved & ~match & (u < frac))
            yield i, all_right[keep], match[keep].astype(bool)

    def iter_pairs(self) -> Iterator[CandidatePair]:
        cfg = self.config
        lenc = [self.universe.encode([r[cfg.group_column]]) for r in self.left]
        renc = [self.universe.encode([r[cfg.group_column]]) for r in self.right]
        for i, idx, match in self.blocks():
            lid, gl = self.left[i]["id"], lenc[i]
            for j, m in zip(idx.tolist(), match.tolist()):
                yield CandidatePair(
                    lid, self.right[j]["id"], gl, renc[j], Label.MATCH if m else Label.NON_MATCH
                )

    def pair_stats(self) -> dict:
        """Pair counts by (left group, right group, label) without materializing pairs."""
        cfg = self.config
        _, _, lgrp, rgrp = self._arrays()
        k = len(cfg.groups)
        counts = np.zeros((k, k, 2), dtype=np.int64)
        for i, idx, match in self.blocks():
            rg = rgrp[idx]
            np.add.at(counts, (lgrp[i], rg, match.astype(np.int64)), 1)
        out = {"total": int(counts.sum()), "matches": int(counts[:, :, 1].sum()), "cells": {}}
        for a, ga in enumerate(cfg.groups):
            for b, gb in enumerate(cfg.groups):
                out["cells"][(ga, gb)] = {
                    "match": int(counts[a, b, 1]),
                    "nonmatch": int(counts[a, b, 0]),
                }
        return out

    def write(self, outdir: Path | str, *, pairs: bool = True) -> dict[str, Path]:
        from emaudit.dataset import CORRESPONDENCE_COLUMNS

        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {"left": outdir / "left.csv", "right": outdir / "right.csv"}
        write_entity_table(self.left, paths["left"], self.columns)
        write_entity_table(self.right, paths["right"], self.columns)
        n_pairs = n_match = None
        if pairs:
            paths["pairs"] = outdir / "pairs.csv"
            n_pairs = n_match = 0
            cfg = self.config
            lgroup = [r[cfg.group_column] for r in self.left]
            rgroup = [r[cfg.group_column] for r in self.right]
            rids = [r["id"] for r in self.right]
            with open(paths["pairs"], "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CORRESPONDENCE_COLUMNS)
                for i, idx, match in self.blocks():
                    lid, lg = self.left[i]["id"], lgroup[i]
                    w.writerows(
                        (lid, rids[j], lg, rgroup[j], "", "", "M" if m else "N")
                        for j, m in zip(idx.tolist(), match.tolist())
                    )
                    n_pairs += len(idx)
                    n_match += int(match.sum())
        paths["manifest"] = outdir / "dataset.json"
        manifest = {
            "recipe": self.config.recipe.value,
            "seed": int(self.config.seed),
            "universe": {
                "attributes": [
                    {"name": a.name, "kind": a.kind.value, "domain": list(a.domain)}
                    for a in self.universe.attributes
                ]
            },
            "left_rows": len(self.left),
            "right_rows": len(self.right),
            "pairs": n_pairs,
            "matches": n_match,
        }
        paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return paths


def _streams(seed: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(3)


def _universe(cfg: GenConfig) -> GroupUniverse:
    kind = AttributeKind.BINARY if len(cfg.groups) == 2 else AttributeKind.EXCLUSIVE
    return GroupUniverse.single(cfg.group_column, cfg.groups, kind)


def _filter(rows, cfg: GenConfig):
    return [r for r in rows if r[cfg.group_column] in cfg.groups]


def _sample(rows, size: int, ratios: Mapping[str, float], cfg: GenConfig, rng) -> list[dict]:
    quotas = largest_remainder(size, ratios)
    chosen: list[int] = []
    for group in cfg.groups:
        need = quotas.get(group, 0)
        pool = [i for i, r in enumerate(rows) if r[cfg.group_column] == group]
        if need > len(pool):
            raise InsufficientSourceRows(group, need, len(pool))
        if need:
            picked = rng.choice(len(pool), size=need, replace=False)
            chosen.extend(pool[int(k)] for k in picked)
    return [rows[i] for i in sorted(chosen)]


def _perturbed(rows, cfg: GenConfig, rng) -> list[dict]:
    out = []
    for r in rows:
        r = dict(r)
        for f in cfg.perturb_fields:
            r[f] = perturb_name(r[f], rng)
        out.append(r)
    return out


def _with_ids(rows, prefix: str) -> list[dict]:
    return [{"id": f"{prefix}{i}", **{k: v for k, v in r.items() if k != "id"}} for i, r in enumerate(rows)]


def generate_faculty_match(cfg: GenConfig, source: Path | None = None) -> GeneratedDataset:
    if cfg.recipe is not Recipe.FACULTY_MATCH:
        raise ValueError("config recipe is not faculty")
    required = [cfg.group_column, cfg.id_column, *cfg.perturb_fields]
    columns, rows = read_source(Path(source) if source else cfg.source_path(), required)
    rows = _filter(rows, cfg)
    sample_ss, perturb_ss, _ = _streams(cfg.seed)
    if cfg.left_size is not None:
        ratios = cfg.group_ratios or _observed_ratios(rows, cfg)
        rows = _sample(rows, cfg.left_size, ratios, cfg, np.random.Generator(np.random.PCG64(sample_ss)))
    left = _with_ids(rows, "L")
    right = _with_ids(_perturbed(rows, cfg, np.random.Generator(np.random.PCG64(perturb_ss))), "R")
    cols = ["id"] + [c for c in columns if c != "id"]
    return GeneratedDataset(cfg, _universe(cfg), cols, left, right, originals=left)


def generate_nofly(cfg: GenConfig, source: Path | None = None) -> GeneratedDataset:
    if cfg.recipe is not Recipe.NOFLY:
        raise ValueError("config recipe is not nofly")
    required = [cfg.group_column, cfg.id_column, *cfg.perturb_fields]
    columns, rows = read_source(Path(source) if source else cfg.source_path(), required)
    rows = _filter(rows, cfg)
    if cfg.right_source is not None:
        _, right_rows = read_source(Path(cfg.right_source), required)
        right_rows = _filter(right_rows, cfg)
    else:
        right_rows = rows
    sample_ss, perturb_ss, _ = _streams(cfg.seed)
    rng = np.random.Generator(np.random.PCG64(sample_ss))
    left_rows = _sample(rows, cfg.left_size, cfg.left_ratios, cfg, rng)
    list_rows = _sample(right_rows, cfg.right_size, cfg.group_ratios, cfg, rng)
    left = _with_ids(left_rows, "P")
    right = _with_ids(_perturbed(list_rows, cfg, np.random.Generator(np.random.PCG64(perturb_ss))), "W")
    cols = ["id"] + [c for c in columns if c != "id"]
    return GeneratedDataset(cfg, _universe(cfg), cols, left, right, originals=_with_ids(list_rows, "W"))


def _observed_ratios(rows, cfg: GenConfig) -> dict[str, float]:
    counts = {g: sum(r[cfg.group_column] == g for r in rows) for g in cfg.groups}
    total = sum(counts.values()) or 1
    return {g: c / total for g, c in counts.items()}


def generate(cfg: GenConfig, source: Path | None = None) -> GeneratedDataset:
    if cfg.recipe is Recipe.FACULTY_MATCH:
        return generate_faculty_match(cfg, source)
    return generate_nofly(cfg, source)
