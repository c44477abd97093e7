"""End-to-end orchestration: mine, classify, attribute, score, report.

Projects run independently (optionally in parallel processes); one
failing project never takes the corpus down.  All emitted artifacts are
deterministic for a fixed configuration and pinned commits, so reruns
produce byte-identical manifests.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import os
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .attribution import SnapshotMaps, attribute_commit, build_ledger
from .cache import HistoryCache
from .config import CorpusConfig, ProjectSpec
from .errors import EmptyProject, IoFailure, StatsError, VarmineError
from .expertise import experts_of, write_expertise_csv
from .mining import (
    SourceFilter,
    extract_history,
    list_source_files,
    resolve_commit,
    resolve_default_branch,
)
from .stats import (
    AssociationResult,
    ConcentrationResult,
    DeveloperClass,
    EvaluationResult,
    classify_developers,
    concentration,
    correlate,
    evaluate_metric,
    ols,
)
from .variability import VariabilitySummary, project_variability_summary

logger = logging.getLogger(__name__)

__all__ = ["ProjectReport", "run_pipeline", "screen_corpus", "emit_reports"]


@dataclass
class ProjectReport:
    name: str
    status: str = "ok"  # ok | failed
    error: str | None = None
    branch: str | None = None
    head_commit: str | None = None
    pinned_commit: str | None = None
    policies: dict = field(default_factory=dict)
    commits: int = 0
    developers: int = 0
    files: int = 0
    constants: int = 0
    summary: VariabilitySummary | None = None
    class_counts: dict | None = None
    classes: list[DeveloperClass] = field(default_factory=list)
    concentration: ConcentrationResult | None = None
    evaluation: dict[str, dict[str, EvaluationResult]] | None = None
    associations: list[AssociationResult] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "project": self.name,
            "status": self.status,
            "error": self.error,
            "toolkit_version": __version__,
            "branch": self.branch,
            "head_commit": self.head_commit,
            "pinned_commit": self.pinned_commit,
            "policies": self.policies,
            "repository": {"commits": self.commits, "developers": self.developers},
            "structural": {"files": self.files, "constants": self.constants},
            "variability": None,
            "developer_classes": self.class_counts,
            "concentration": None,
            "evaluation": None,
            "associations": [
                {
                    "x": a.x_name,
                    "y": a.y_name,
                    "method": a.method,
                    "coefficient": a.coefficient,
                    "p_value": a.p_value,
                    "slope": a.slope,
                    "intercept": a.intercept,
                    "slope_se": a.slope_se,
                    "r_squared": a.r_squared,
                }
                for a in self.associations
            ],
            "diagnostics": self.diagnostics,
        }
        if self.summary is not None:
            doc["variability"] = {
                "total_loc": self.summary.total_loc,
                "pct_mandatory": self.summary.pct_mandatory,
                "pct_variable": self.summary.pct_variable,
            }
        if self.concentration is not None:
            c = self.concentration
            doc["concentration"] = {
                "n": c.n,
                "gini": c.gini,
                "skewness": c.skewness,
                "kurtosis": c.kurtosis,
                "shapiro_w": c.shapiro_w,
                "shapiro_p": c.shapiro_p,
                "lorenz": [[x, y] for x, y in c.lorenz_points],
            }
        if self.evaluation is not None:
            doc["evaluation"] = {
                metric: {
                    agg: {
                        "precision": r.precision,
                        "recall": r.recall,
                        "tp": r.tp,
                        "fp": r.fp,
                        "fn": r.fn,
                    }
                    for agg, r in by_agg.items()
                }
                for metric, by_agg in self.evaluation.items()
            }
        return doc


def _policies_dict(config: CorpusConfig) -> dict:
    return {
        "guard_policy": "exclude" if config.guard_policy.exclude_include_guards else "include",
        "count_if01": config.guard_policy.count_if01,
        "aggregation": config.aggregation,
        "gini_basis": config.gini_basis,
        "doa_scope": "head",
        "moment_estimator": "sample-bias-adjusted",
        "source_extensions": sorted(config.source_extensions),
    }


def _ensure_local_repo(spec: ProjectSpec, workdir: Path | None) -> Path:
    candidate = Path(spec.repo)
    if candidate.exists():
        return candidate
    if workdir is None:
        raise VarmineError(f"repository path {spec.repo} does not exist")
    clones = workdir / ".repos"
    clones.mkdir(parents=True, exist_ok=True)
    dest = clones / spec.name
    if dest.exists():
        return dest
    proc = subprocess.run(
        ["git", "clone", "--quiet", spec.repo, str(dest)],
        capture_output=True,
    )
    if proc.returncode != 0:
        raise VarmineError(
            f"clone of {spec.repo} failed: {proc.stderr.decode('utf-8', 'replace').strip()}"
        )
    return dest


def analyze_project(
    spec: ProjectSpec,
    config: CorpusConfig,
    out_dir: str | None = None,
    use_cache: bool = True,
) -> ProjectReport:
    """Run the full per-project pipeline; failures come back as a report."""
    report = ProjectReport(name=spec.name, policies=_policies_dict(config))
    try:
        _analyze_into(report, spec, config, out_dir, use_cache)
    except Exception as exc:  # isolate per-project failures
        logger.exception("project %s failed", spec.name)
        report.status = "failed"
        report.error = f"{type(exc).__name__}: {exc}"
    return report


def _analyze_into(
    report: ProjectReport,
    spec: ProjectSpec,
    config: CorpusConfig,
    out_dir: str | None,
    use_cache: bool,
) -> None:
    out_path = Path(out_dir) if out_dir else None
    repo = _ensure_local_repo(spec, out_path)
    source_filter = SourceFilter(config.source_extensions)

    branch = spec.branch or resolve_default_branch(repo)
    rev = spec.pinned_commit or branch
    head = resolve_commit(repo, rev)
    report.branch = branch
    report.head_commit = head
    report.pinned_commit = spec.pinned_commit

    cache_root = config.cache_dir or (out_path / ".cache" if out_path else None)
    records = None
    if cache_root is not None and use_cache:
        cache = HistoryCache(cache_root)
        cached = cache.load(spec.repo, head)
        if cached is not None:
            records = list(cached)
    if records is None:
        records = list(extract_history(repo, branch=rev, source_filter=source_filter))
        if cache_root is not None:
            HistoryCache(cache_root).store(spec.repo, head, records)

    report.commits = len(records)
    report.developers = len({r.author.key for r in records})

    head_maps = {}
    notes: list[str] = []
    with SnapshotMaps(repo, config.guard_policy) as snapshots:
        for path in list_source_files(repo, head, source_filter):
            vmap = snapshots.map_at(head, path)
            if vmap is not None:
                head_maps[path] = vmap

        touches = []
        for record in records:
            touches.extend(attribute_commit(record, snapshots))
    ledger = build_ledger(touches, records)

    report.files = len(head_maps)
    try:
        report.summary = project_variability_summary(head_maps.values())
        report.constants = report.summary.constant_count
    except EmptyProject:
        notes.append("no source files at head")

    classes = classify_developers(ledger)
    report.classes = classes
    counts = {"generalist": 0, "specialist": 0, "mixed": 0}
    for c in classes:
        counts[c.category] += 1
    classified = sum(counts.values())
    report.class_counts = {
        "generalists": counts["generalist"],
        "specialists": counts["specialist"],
        "mixed": counts["mixed"],
        "pct_generalists": 100.0 * counts["generalist"] / classified if classified else 0.0,
        "pct_specialists": 100.0 * counts["specialist"] / classified if classified else 0.0,
        "pct_mixed": 100.0 * counts["mixed"] / classified if classified else 0.0,
    }

    # RQ2: workload concentration over developers who touched variable code
    totals = ledger.developer_totals()
    if config.gini_basis == "commits":
        workload = [t.variable_commits for t in totals.values() if t.variable_commits > 0]
    else:
        workload = [
            totals[k].variable_touches
            for k in sorted(totals)
            if totals[k].variable_touches > 0
        ]
    if workload:
        report.concentration = concentration(workload)
    else:
        notes.append("no variable-code contributors; concentration skipped")

    # RQ3: expert sets vs. ground truth over files with variable code at head
    eval_paths = [
        p for p in ledger.paths() if p in head_maps and head_maps[p].variable_loc >= 1
    ]
    if eval_paths:
        truth = {p: ledger.variable_contributors(p) for p in eval_paths}
        report.evaluation = {}
        for metric in ("doa", "ownership"):
            experts = {p: experts_of(ledger, p, metric) for p in eval_paths}
            report.evaluation[metric] = {
                agg: evaluate_metric(experts, truth, aggregation=agg, metric=metric)
                for agg in ("micro", "macro")
            }
    else:
        notes.append("no files with variable code; evaluation skipped")

    parse_diags = sum(len(m.diagnostics) for m in head_maps.values())
    report.diagnostics = {
        "head_parse_diagnostics": parse_diags,
        "eval_files": len(eval_paths),
        "notes": notes,
    }

    if out_path is not None:
        project_dir = out_path / spec.name
        project_dir.mkdir(parents=True, exist_ok=True)
        ledger.write_ndjson(project_dir / "ledger.ndjson", project_dir / "files.ndjson")
        write_expertise_csv(ledger, project_dir / "expertise.csv")
        _write_json(project_dir / "stats.json", _stats_doc(report))


def _stats_doc(report: ProjectReport) -> dict:
    doc = report.to_dict()
    return {
        "project": report.name,
        "developer_classes": doc["developer_classes"],
        "concentration": doc["concentration"],
        "evaluation": doc["evaluation"],
    }


def run_pipeline(
    config: CorpusConfig,
    out_dir: str | None = None,
    jobs: int = 1,
    use_cache: bool = True,
) -> list[ProjectReport]:
    """Analyze every project in the corpus; reports keep config order."""
    if jobs <= 1 or len(config.projects) <= 1:
        reports = [
            analyze_project(spec, config, out_dir, use_cache) for spec in config.projects
        ]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(analyze_project, spec, config, out_dir, use_cache)
                for spec in config.projects
            ]
            reports = [f.result() for f in futures]

    associations = compute_corpus_associations(reports, config.aggregation)
    for report in reports:
        if report.status == "ok":
            report.associations = associations
    return reports


def _class_pcts(report: ProjectReport) -> tuple[float, float, float]:
    cc = report.class_counts or {}
    return (
        cc.get("pct_generalists", 0.0),
        cc.get("pct_specialists", 0.0),
        cc.get("pct_mixed", 0.0),
    )


def compute_corpus_associations(
    reports: list[ProjectReport], aggregation: str = "micro"
) -> list[AssociationResult]:
    """Corpus-level statistics across projects.

    Mirrors the study's cross-system analyses: regressions of developer
    class shares on the mandatory/variable ratio, and normality-guarded
    correlations of the expertise metrics' precision/recall with
    project-level variables.
    """
    ok = [
        r
        for r in reports
        if r.status == "ok" and r.summary is not None and r.summary.pct_variable > 0
    ]
    if len(ok) < 3:
        return []

    out: list[AssociationResult] = []
    mv_ratio = [r.summary.pct_mandatory / r.summary.pct_variable for r in ok]
    class_series = {
        "pct_generalists": [_class_pcts(r)[0] for r in ok],
        "pct_specialists": [_class_pcts(r)[1] for r in ok],
        "pct_mixed": [_class_pcts(r)[2] for r in ok],
    }
    for y_name, ys in class_series.items():
        try:
            out.append(correlate(mv_ratio, ys, force_method="pearson",
                                 x_name="mandatory_to_variable_ratio", y_name=y_name))
            out.append(ols(mv_ratio, ys,
                           x_name="mandatory_to_variable_ratio", y_name=y_name))
        except StatsError:
            continue

    def eval_series(metric: str, field_name: str) -> list[float] | None:
        values = []
        for r in ok:
            if not r.evaluation or metric not in r.evaluation:
                return None
            result = r.evaluation[metric].get(aggregation)
            if result is None:
                return None
            values.append(getattr(result, field_name))
        return values

    project_vars = {
        "constants": [float(r.constants) for r in ok],
        "pct_mandatory": [r.summary.pct_mandatory for r in ok],
        "pct_variable": [r.summary.pct_variable for r in ok],
        "pct_generalists": class_series["pct_generalists"],
        "pct_specialists": class_series["pct_specialists"],
        "pct_mixed": class_series["pct_mixed"],
    }
    for metric in ("doa", "ownership"):
        for field_name in ("precision", "recall"):
            ys = eval_series(metric, field_name)
            if ys is None:
                continue
            for x_name, xs in project_vars.items():
                try:
                    out.append(
                        correlate(xs, ys, x_name=x_name, y_name=f"{metric}_{field_name}")
                    )
                except StatsError:
                    continue
    return out


def screen_corpus(
    reports, min_developers: int = 30, min_constants: int = 50
) -> dict:
    """Apply the corpus inclusion criteria to analyzed projects."""
    included: list[str] = []
    excluded: list[dict] = []
    for report in reports:
        if isinstance(report, dict):
            name = report.get("project", "?")
            status = report.get("status", "ok")
            developers = (report.get("repository") or {}).get("developers", 0)
            constants = (report.get("structural") or {}).get("constants", 0)
        else:
            name, status = report.name, report.status
            developers, constants = report.developers, report.constants
        reasons = []
        if status != "ok":
            reasons.append("analysis failed")
        else:
            if developers <= min_developers:
                reasons.append(f"developers <= {min_developers}")
            if constants < min_constants:
                reasons.append(f"constants < {min_constants}")
        if reasons:
            excluded.append({"project": name, "reasons": reasons})
        else:
            included.append(name)
    return {"included": included, "excluded": excluded}


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

_SUMMARY_COLUMNS = [
    "project", "status", "commits", "developers", "files", "constants",
    "total_loc", "pct_mandatory", "pct_variable",
    "pct_generalists", "pct_specialists", "pct_mixed", "gini",
    "doa_precision", "doa_recall", "ownership_precision", "ownership_recall",
]


def _write_json(path: Path, doc: dict) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False, sort_keys=False)
        fh.write("\n")
    os.replace(tmp, path)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _summary_row(report: ProjectReport, aggregation: str) -> list[str]:
    summary = report.summary
    conc = report.concentration
    row = {
        "project": report.name,
        "status": report.status,
        "commits": report.commits,
        "developers": report.developers,
        "files": report.files,
        "constants": report.constants,
        "total_loc": summary.total_loc if summary else None,
        "pct_mandatory": summary.pct_mandatory if summary else None,
        "pct_variable": summary.pct_variable if summary else None,
        "pct_generalists": (report.class_counts or {}).get("pct_generalists"),
        "pct_specialists": (report.class_counts or {}).get("pct_specialists"),
        "pct_mixed": (report.class_counts or {}).get("pct_mixed"),
        "gini": conc.gini if conc else None,
    }
    for metric in ("doa", "ownership"):
        result = (report.evaluation or {}).get(metric, {}).get(aggregation)
        row[f"{metric}_precision"] = result.precision if result else None
        row[f"{metric}_recall"] = result.recall if result else None
    return [_fmt(row[c]) for c in _SUMMARY_COLUMNS]


def emit_reports(
    reports: list[ProjectReport],
    out_dir,
    formats: set[str] | None = None,
    plots: bool = False,
    aggregation: str = "micro",
) -> dict:
    """Write report artifacts and a hash manifest; returns the manifest."""
    formats = formats or {"json", "csv"}
    out_path = Path(out_dir)
    try:
        out_path.mkdir(parents=True, exist_ok=True)

        if "json" in formats:
            for report in reports:
                project_dir = out_path / report.name
                project_dir.mkdir(parents=True, exist_ok=True)
                _write_json(project_dir / "report.json", report.to_dict())

        if "csv" in formats:
            import csv as _csv

            tmp = out_path / "summary.csv.tmp"
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                writer = _csv.writer(fh)
                writer.writerow(_SUMMARY_COLUMNS)
                for report in reports:
                    writer.writerow(_summary_row(report, aggregation))
            os.replace(tmp, out_path / "summary.csv")

        if plots:
            from . import plots as _plots

            _plots.save_lorenz_figure(reports, out_path / "figures" / "lorenz.png")
            _plots.save_gini_figure(reports, out_path / "figures" / "gini.png")

        entries = []
        for file_path in sorted(out_path.rglob("*")):
            if not file_path.is_file():
                continue
            rel = file_path.relative_to(out_path).as_posix()
            if rel == "manifest.json" or any(part.startswith(".") for part in file_path.relative_to(out_path).parts):
                continue
            digest = hashlib.sha256(file_path.read_bytes()).hexdigest()
            entries.append({"path": rel, "sha256": digest, "bytes": file_path.stat().st_size})
        manifest = {"toolkit_version": __version__, "files": entries}
        _write_json(out_path / "manifest.json", manifest)
        return manifest
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
