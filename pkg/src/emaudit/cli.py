"""``emaudit`` command line: generate, match, audit, sweep, report.

Exit codes: 0 when no group is flagged, 1 when any group is flagged, 2 on
any configuration or data error.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from emaudit.audit import run_audit
from emaudit.config import MatcherKind, RunConfig, load_config, parse_measures
from emaudit.datagen import generate as generate_dataset
from emaudit.dataset import (
    Correspondence,
    iter_pair_rows,
    load_correspondences,
    read_entity_table,
    write_correspondences,
)
from emaudit.errors import ConfigError, EMAuditError
from emaudit.matchers import apply_rules, score_correspondences, score_match
from emaudit.report import (
    render_grid,
    report_from_json,
    summary_lines,
    write_report_csv,
    write_report_json,
)
from emaudit.sensitivity import sensitivity_l2, sweep, write_heatmap_csv, write_sweep_json

EXIT_FAIR, EXIT_UNFAIR, EXIT_ERROR = 0, 1, 2

log = logging.getLogger("emaudit")


def _fail(msg: str) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_ERROR)


def _run(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (EMAuditError, OSError, ValueError, KeyError) as exc:
        _fail(str(exc))


def _require(path: Path | None, field: str) -> Path:
    if path is None:
        raise ConfigError(f"{field}: not set")
    if not path.exists():
        raise ConfigError(f"{field}: file not found: {path}")
    return path


config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(dir_okay=False, path_type=Path),
    help="Run configuration (TOML).",
)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose: bool) -> None:
    """Audit entity matchers for group fairness."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command()
@config_option
@click.option("--seed", type=int, default=None, help="Override generate.seed.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
def generate(config_path: Path, seed: int | None, out: Path | None) -> None:
    """Build a semi-synthetic matching dataset."""
    _run(_generate, config_path, seed, out)


def _generate(config_path, seed, out):
    cfg = load_config(config_path).with_overrides(seed=seed)
    if cfg.generate is None:
        raise ConfigError("generate: section missing from config")
    outdir = out or cfg.generate_dir
    ds = generate_dataset(cfg.generate)
    paths = ds.write(outdir)
    click.echo(f"wrote {len(ds.left)} left rows, {len(ds.right)} right rows to {outdir}")
    for name, p in paths.items():
        click.echo(f"  {name}: {p}")


@cli.command()
@config_option
@click.option("--threshold", type=float, default=None, help="Override matcher.threshold (scorer).")
def match(config_path: Path, threshold: float | None) -> None:
    """Fill predictions with a built-in matcher."""
    _run(_match, config_path, threshold)


def _match(config_path, threshold):
    cfg = load_config(config_path)
    m = cfg.matcher
    if m.kind == MatcherKind.EXTERNAL:
        raise ConfigError("matcher.kind: 'external' has nothing to run; use 'rules' or 'scorer'")
    universe = cfg.require_universe()
    d = cfg.data
    pairs_path = _require(d.correspondences, "data.correspondences")
    left = read_entity_table(_require(d.left_table, "data.left_table"))
    right = read_entity_table(_require(d.right_table, "data.right_table"))
    pairing = iter_pair_rows(pairs_path, universe, d.format)
    if m.kind == MatcherKind.RULES:
        out = apply_rules(left, right, pairing, m.rules)
    else:
        t = m.threshold if threshold is None else threshold
        out = [
            Correspondence(
                c.id_left, c.id_right, c.groups_left, c.groups_right, c.truth,
                score=c.score, decision=score_match(c.score, t),
            )
            for c in score_correspondences(left, right, pairing, m.scorer)
        ]
    dest = cfg.audit_input
    dest.parent.mkdir(parents=True, exist_ok=True)
    write_correspondences(out, dest, universe, d.format)
    n_match = sum(c.decision.value == "M" for c in out)
    click.echo(f"matched {len(out)} pairs ({n_match} predicted matches) -> {dest}")


def _load_scored(cfg: RunConfig):
    universe = cfg.require_universe()
    path = _require(cfg.audit_input, "data.predictions" if cfg.data.predictions else "data.correspondences")
    return universe, load_correspondences(path, universe, cfg.data.format)


@cli.command()
@config_option
@click.option("--tau", type=float, default=None)
@click.option("--threshold", type=float, default=None, help="Recompute decisions as score > threshold.")
@click.option("--mode", type=click.Choice(["single", "pairwise"]), default=None)
@click.option("--measures", default=None, help="Comma-separated measure ids or 'all'.")
@click.option("--disparity", "op", type=click.Choice(["sub", "div"]), default=None)
@click.option("--convention", type=click.Choice(["eq", "table"]), default=None)
@click.option("--baseline", type=click.Choice(["overall", "complement"]), default=None)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--quiet", is_flag=True, help="Do not print the grid.")
def audit(config_path, out, quiet, **overrides) -> None:
    """Run the group-fairness audit; exit 1 if any group is flagged."""
    report = _run(_audit, config_path, out, quiet, overrides)
    sys.exit(EXIT_UNFAIR if report.any_unfair else EXIT_FAIR)


def _audit(config_path, out, quiet, overrides):
    cfg = load_config(config_path).with_overrides(**overrides)
    universe, cs = _load_scored(cfg)
    a = cfg.audit
    report = run_audit(
        cs, cfg.targets(universe), a.measures, a.disparity,
        threshold=a.threshold, universe=universe,
    )
    outdir = out or cfg.data.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    write_report_json(report, outdir / "report.json", universe)
    write_report_csv(report, outdir / "report.csv", universe)
    if not quiet:
        click.echo(render_grid(report, universe), nl=False)
        for line in summary_lines(report, universe):
            click.echo(line)
    click.echo(f"reports written to {outdir}")
    return report


@cli.command("sweep")
@config_option
@click.option("--measures", default=None, help="Override sweep.measures.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
def sweep_cmd(config_path: Path, measures: str | None, out: Path | None) -> None:
    """Sweep the match threshold and score threshold sensitivity."""
    _run(_sweep, config_path, measures, out)


def _sweep(config_path, measures, out):
    cfg = load_config(config_path)
    universe, cs = _load_scored(cfg)
    ms = parse_measures(measures, "measures") if measures else list(cfg.sweep.measures)
    targets = cfg.targets(universe)
    s = cfg.sweep
    results = {}
    for m in ms:
        label = s.label if len(ms) == 1 else f"{s.label}/{m.value}"
        results[label] = sweep(cs, s.thresholds, targets, m, cfg.audit.disparity)
    outdir = out or cfg.data.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    write_heatmap_csv(results, outdir / "sweep.csv")
    write_sweep_json(results, outdir / "sweep.json", s.method)
    for label, res in results.items():
        counts = res.unfair_counts
        sens = sensitivity_l2(counts, s.method) if len(counts) >= 2 else float("nan")
        click.echo(f"{label} {res.measure.value}: counts {counts} sensitivity {sens:.3f}")
    click.echo(f"sweep written to {outdir}")


@cli.command()
@click.argument("report_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["grid", "csv", "json"]), default="grid")
def report(report_path: Path, fmt: str) -> None:
    """Re-render a saved report.json."""
    rep = _run(_report, report_path, fmt)
    sys.exit(EXIT_UNFAIR if rep.any_unfair else EXIT_FAIR)


def _report(report_path, fmt):
    if not report_path.exists():
        raise ConfigError(f"report: file not found: {report_path}")
    try:
        rep, universe = report_from_json(report_path)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"report: malformed report.json ({exc})") from None
    if fmt == "grid":
        click.echo(render_grid(rep, universe), nl=False)
        for line in summary_lines(rep, universe):
            click.echo(line)
    elif fmt == "csv":
        click.echo(write_report_csv(rep, None, universe), nl=False)
    else:
        click.echo(write_report_json(rep, None, universe), nl=False)
    return rep


def main(argv=None) -> None:
    cli.main(args=argv, prog_name="emaudit")


if __name__ == "__main__":
    main()
