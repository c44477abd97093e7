"""Acceptance criteria, one test per criterion.

Each test prints a single verdict line; run with ``pytest -s
tests/test_acceptance.py`` to see them.  Criterion 8 needs network
access and is skipped when the clone fails; the parallel half of
criterion 10 needs at least four cores.
"""

import json
import math
import os
import shutil
import subprocess
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest
import scipy.stats

from varmine.attribution import SnapshotMaps, attribute_commit, build_ledger
from varmine.config import CorpusConfig, ProjectSpec, load_config
from varmine.expertise import author_flag, doa, doa_scores, experts_of, major_flag
from varmine.fixtures import FIXTURE_REPOS, build_throughput_repo
from varmine.mining import extract_history
from varmine.pipeline import emit_reports, run_pipeline
from varmine.stats import (
    correlate,
    evaluate_metric,
    gini,
    lorenz,
    lorenz_auc,
    ols,
    shapiro_wilk,
)
from varmine.variability import GuardPolicy, build_variability_map

import oracle_fixture as oracle


def _verdict(number: int, name: str, ok: bool, note: str = "") -> None:
    state = "PASS" if ok else "FAIL"
    suffix = f" ({note})" if note else ""
    print(f"\n[criterion {number:02d}] {name}: {state}{suffix}")
    assert ok, f"criterion {number} ({name}) failed{suffix}"


def _skip(number: int, name: str, reason: str) -> None:
    print(f"\n[criterion {number:02d}] {name}: SKIP ({reason})")
    pytest.skip(reason)


def test_criterion_1_doa_formula_suite():
    start = time.perf_counter()
    mpmath.mp.dps = 40
    rng = np.random.default_rng(1)
    ok = True
    for _ in range(1000):
        fa = int(rng.integers(0, 2))
        dl = int(rng.integers(0, 2000))
        ac = int(rng.integers(0, 20000))
        expected = float(
            mpmath.mpf("3.293") + mpmath.mpf("1.098") * fa
            + mpmath.mpf("0.164") * dl - mpmath.mpf("0.321") * mpmath.log(1 + ac)
        )
        ok &= abs(doa(fa, dl, ac) - expected) < 1e-9
    ok &= abs(doa(1, 0, 0) - 4.391) < 1e-12
    ok &= abs(doa(0, 0, 0) - 3.293) < 1e-12
    ok &= abs(doa(1, 10, 50) - 4.76888) < 5e-6
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1.0
    _verdict(1, "DOA formula suite", ok, f"{elapsed:.2f}s for 1000 triples")


def test_criterion_2_threshold_boundaries():
    ok = author_flag(3.293, 0.750000001) is True
    ok &= author_flag(3.293, 0.75) is False
    ok &= author_flag(3.293 - 1e-9, 1.0) is False
    ok &= author_flag(3.293, 1.0) is True
    ok &= major_flag(5.0) is False
    ok &= major_flag(np.nextafter(5.0, 6.0)) is True
    _verdict(2, "threshold boundary tests", ok)


def test_criterion_3_gini_lorenz_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(500):
        n = int(rng.integers(1, 201))
        values = rng.random(n) * float(rng.choice([1.0, 100.0, 1e5]))
        if values.sum() == 0:
            continue
        g = gini(values)
        ok &= abs(g - (1.0 - 2.0 * lorenz_auc(lorenz(values)))) < 1e-9
    for n in (1, 2, 5, 40):
        ok &= gini([7.0] * n) == 0.0
    for n in (2, 3, 10, 128):
        ok &= gini([0.0] * (n - 1) + [5.0]) == (n - 1) / n
    base = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0]
    for k in (2.0, 0.5, 1024.0):
        ok &= gini([k * v for v in base]) == gini(base)
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5.0
    _verdict(3, "Gini/Lorenz suite", ok, f"{elapsed:.2f}s for 500 vectors")


def test_criterion_4_parser_golden_tests(listing_excerpt):
    m = build_variability_map(listing_excerpt)
    ok = m.constants == {"yyoverflow", "YYLSP_NEEDED"}
    ok &= m.variable_loc == m.total_loc == 44
    four = build_variability_map("int a;\n#ifdef X\nint b;\n#endif\n")
    ok &= (four.mandatory_loc, four.variable_loc) == (1, 3)
    guard = build_variability_map("#ifndef A_H\n#define A_H\nint x;\n#endif\n")
    ok &= guard.variable_loc == 0
    _verdict(4, "variability parser golden tests", ok)


def test_criterion_5_synthetic_end_to_end_oracle(fixture_corpus):
    start = time.perf_counter()
    failures: list[str] = []

    for name, steps in FIXTURE_REPOS.items():
        expected = oracle.expected_project(name, steps)
        repo = fixture_corpus / name
        records = list(extract_history(repo))
        with SnapshotMaps(repo, GuardPolicy()) as snaps:
            touches = [t for r in records for t in attribute_commit(r, snaps)]
        ledger = build_ledger(touches, records)

        if len(records) != expected["commits"]:
            failures.append(f"{name}: commits {len(records)} != {expected['commits']}")
        if len({r.author.key for r in records}) != expected["developers"]:
            failures.append(f"{name}: developer count mismatch")

        # ledger equality, entry by entry
        if sorted(expected["files"]) != ledger.paths():
            failures.append(f"{name}: paths {ledger.paths()}")
        for path, exp_file in expected["files"].items():
            stats = ledger.file_stats(path)
            if (stats.total_commits, stats.changed_by, stats.variable_contributors,
                    stats.first_author) != (
                    exp_file.total_commits, exp_file.changed_by,
                    exp_file.variable_contributors, exp_file.first_author):
                failures.append(f"{name}:{path} file stats mismatch")
            for dev, exp_entry in exp_file.per_dev.items():
                entry = ledger.contributors(path)[dev]
                if (entry.commit_count, entry.variable_touches,
                        entry.mandatory_touches, entry.first_author) != (
                        exp_entry["commit_count"], exp_entry["variable"],
                        exp_entry["mandatory"], exp_entry["fa"]):
                    failures.append(f"{name}:{path}:{dev} ledger entry mismatch")

        # developer classes
        from varmine.stats import classify_developers

        got_classes = {c.developer_key: c.category for c in classify_developers(ledger)}
        if got_classes != expected["classes"]:
            failures.append(f"{name}: classes {got_classes} != {expected['classes']}")

        # expert sets per evaluation file
        for path in expected["eval_files"]:
            if experts_of(ledger, path, "doa") != expected["experts_doa"][path]:
                failures.append(f"{name}:{path} doa experts mismatch")
            if experts_of(ledger, path, "ownership") != expected["experts_ownership"][path]:
                failures.append(f"{name}:{path} ownership experts mismatch")
            if ledger.variable_contributors(path) != expected["truth"][path]:
                failures.append(f"{name}:{path} truth set mismatch")

        # gini over the variable-code workload (specialists + mixed)
        totals = ledger.developer_totals()
        workload = [totals[k].variable_touches for k in sorted(totals)
                    if totals[k].variable_touches > 0]
        if workload != expected["workload"]:
            failures.append(f"{name}: workload vector {workload} != {expected['workload']}")
        if abs(gini(workload) - expected["gini"]) > 1e-12:
            failures.append(f"{name}: gini {gini(workload)} != {expected['gini']}")

        # precision/recall, micro-pooled
        truth = {p: ledger.variable_contributors(p) for p in expected["eval_files"]}
        for metric, key in (("doa", "doa_eval"), ("ownership", "ownership_eval")):
            experts = {p: experts_of(ledger, p, metric) for p in expected["eval_files"]}
            r = evaluate_metric(experts, truth, aggregation="micro", metric=metric)
            exp_p, exp_r, tp, fp, fn = expected[key]
            if (r.precision, r.recall, r.tp, r.fp, r.fn) != (exp_p, exp_r, tp, fp, fn):
                failures.append(f"{name}: {metric} evaluation mismatch")

    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30.0
    _verdict(5, "synthetic end-to-end oracle", ok,
             "; ".join(failures) if failures else f"{elapsed:.1f}s, 3 repos")


def test_criterion_6_statistics_oracles():
    rng = np.random.default_rng(6)
    ok = True
    for _ in range(200):
        n = int(rng.integers(4, 40))
        x = rng.normal(size=n)
        y = 0.7 * x + rng.normal(size=n)
        # pearson against explicit normal-equations arithmetic
        r_ref = float(np.corrcoef(x, y)[0, 1])
        ok &= abs(correlate(x, y, force_method="pearson").coefficient - r_ref) < 1e-9
        # spearman against pearson-on-ranks with an independent ranking
        rx = scipy.stats.rankdata(x)
        ry = scipy.stats.rankdata(y)
        rho_ref = float(np.corrcoef(rx, ry)[0, 1])
        ok &= abs(correlate(x, y, force_method="spearman").coefficient - rho_ref) < 1e-9
        # ols against a normal-equations solve
        a = np.vstack([x, np.ones(n)]).T
        beta = np.linalg.solve(a.T @ a, a.T @ y)
        fit = ols(x, y)
        ok &= abs(fit.slope - beta[0]) < 1e-9 and abs(fit.intercept - beta[1]) < 1e-9

    for n in (10, 50, 500):
        for seed in range(6):
            data_rng = np.random.default_rng(600 + seed)
            data = data_rng.normal(size=n) if seed % 2 else data_rng.exponential(size=n)
            w, p = shapiro_wilk(data)
            ref = scipy.stats.shapiro(data)
            ok &= abs(w - ref.statistic) < 1e-3
            ok &= abs(p - ref.pvalue) < 1e-2
    _verdict(6, "statistics oracles", ok)


def test_criterion_7_micro_counting_identity():
    rng = np.random.default_rng(7)
    devs = [f"d{i}" for i in range(10)]
    ok = True
    for _ in range(100):
        experts, truth = {}, {}
        for f in range(int(rng.integers(1, 8))):
            experts[f"f{f}"] = {d for d in devs if rng.random() < 0.35}
            truth[f"f{f}"] = {d for d in devs if rng.random() < 0.35}
        r = evaluate_metric(experts, truth)
        ok &= r.tp + r.fn == sum(len(s) for s in truth.values())
        ok &= r.tp + r.fp == sum(len(s) for s in experts.values())
    example = evaluate_metric({"f": {"A", "B"}}, {"f": {"B", "C"}})
    ok &= (example.precision, example.recall) == (0.5, 0.5)
    _verdict(7, "precision/recall micro-counting identity", ok)


LIBEXPAT_URL = os.environ.get("VARMINE_LIBEXPAT_URL", "https://github.com/libexpat/libexpat.git")


def test_criterion_8_pinned_commit_live_sanity(tmp_path):
    name = "pinned-commit live sanity"
    if os.environ.get("VARMINE_SKIP_LIVE") == "1":
        _skip(8, name, "VARMINE_SKIP_LIVE=1")
    clone_dir = tmp_path / "libexpat"
    proc = subprocess.run(
        ["git", "clone", "--quiet", LIBEXPAT_URL, str(clone_dir)],
        capture_output=True, timeout=240,
    )
    if proc.returncode != 0:
        _skip(8, name, "network unavailable or clone failed")

    start = time.perf_counter()
    pinned = os.environ.get("LIBEXPAT_COMMIT")
    if not pinned:
        # a commit contemporaneous with the study: the one with ~1,987
        # commits reachable from it
        out = subprocess.run(
            ["git", "-C", str(clone_dir), "rev-list", "--reverse", "HEAD"],
            check=True, capture_output=True,
        ).stdout.decode().split()
        if len(out) < 1987:
            _skip(8, name, "repository shorter than the studied snapshot")
        pinned = out[1986]

    config = CorpusConfig(
        projects=[ProjectSpec(name="libexpat", repo=str(clone_dir), pinned_commit=pinned)]
    )
    (report,) = run_pipeline(config, out_dir=str(tmp_path / "out"))
    ok = report.status == "ok"
    notes = []
    if ok:
        ok &= abs(report.commits - 1987) <= 0.15 * 1987
        ok &= abs(report.developers - 59) <= 0.15 * 59
        ok &= abs(report.constants - 214) <= 0.25 * 214
        ok &= abs(report.summary.pct_variable - 19.37) <= 8.0
        doa_eval = report.evaluation["doa"]["micro"]
        ok &= 0.2 <= doa_eval.precision <= 1.0
        ok &= 0.1 <= doa_eval.recall <= 0.9
        notes = [
            f"commits={report.commits}", f"devs={report.developers}",
            f"constants={report.constants}",
            f"pct_var={report.summary.pct_variable:.2f}",
            f"doa P={doa_eval.precision:.2f} R={doa_eval.recall:.2f}",
            f"{time.perf_counter() - start:.0f}s",
        ]
    ok &= (time.perf_counter() - start) < 300
    _verdict(8, name, ok, ", ".join(notes))


def test_criterion_9_determinism(fixture_corpus, tmp_path):
    config = load_config(fixture_corpus / "corpus.yaml")
    manifests = []
    for run in ("a", "b"):
        out = tmp_path / run
        reports = run_pipeline(config, out_dir=str(out))
        manifests.append(emit_reports(reports, out, plots=True))
    ok = json.dumps(manifests[0], sort_keys=True) == json.dumps(manifests[1], sort_keys=True)
    byte_a = (tmp_path / "a" / "manifest.json").read_bytes()
    byte_b = (tmp_path / "b" / "manifest.json").read_bytes()
    ok &= byte_a == byte_b
    _verdict(9, "determinism", ok, f"{len(manifests[0]['files'])} files hashed")


def test_criterion_10_throughput_floor(fixture_corpus, tmp_path):
    perf_repo = tmp_path / "perf"
    build_throughput_repo(perf_repo, commits=2000)
    config = CorpusConfig(
        projects=[
            ProjectSpec(name="alpha", repo=str(fixture_corpus / "alpha")),
            ProjectSpec(name="beta", repo=str(fixture_corpus / "beta")),
            ProjectSpec(name="gamma", repo=str(fixture_corpus / "gamma")),
            ProjectSpec(name="perf", repo=str(perf_repo)),
        ]
    )
    start = time.perf_counter()
    reports = run_pipeline(config, out_dir=str(tmp_path / "out-serial"), jobs=1)
    serial = time.perf_counter() - start
    ok = all(r.status == "ok" for r in reports) and serial < 300
    note = f"serial {serial:.1f}s for 3 fixtures + 2000-commit repo"
    _verdict(10, "throughput floor (single-threaded)", ok, note)


@pytest.mark.skipif((os.cpu_count() or 1) < 4,
                    reason="parallel speedup check needs >= 4 cores")
def test_criterion_10_parallel_speedup(tmp_path):
    repos = []
    for i in range(4):
        repo = tmp_path / f"mid{i}"
        build_throughput_repo(repo, commits=300)
        repos.append(repo)
    config = CorpusConfig(
        projects=[ProjectSpec(name=f"mid{i}", repo=str(r)) for i, r in enumerate(repos)]
    )
    start = time.perf_counter()
    run_pipeline(config, out_dir=str(tmp_path / "serial"), jobs=1, use_cache=False)
    serial = time.perf_counter() - start
    start = time.perf_counter()
    run_pipeline(config, out_dir=str(tmp_path / "par"), jobs=4, use_cache=False)
    parallel = time.perf_counter() - start
    ok = serial >= 2.0 * parallel
    _verdict(10, "throughput floor (parallel)", ok,
             f"serial {serial:.1f}s vs 4 workers {parallel:.1f}s")
