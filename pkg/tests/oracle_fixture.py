"""Independent enumeration oracle for the scripted fixture repositories.

Folds the hand-written per-commit annotations (who created what, how many
variable/mandatory lines each change touched) into the expected ledgers,
developer classes, expert sets, Gini values and precision/recall, using
only its own arithmetic.  Nothing here imports pipeline code, so any
agreement with the toolkit is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Expected head-of-history facts, re-derived by hand from the fixture
# file contents: path -> (total lines, variable lines).
EXPECTED_HEAD = {
    "alpha": {"core.c": (4, 0), "feature.c": (6, 6), "header.h": (4, 0)},
    "beta": {"util.c": (6, 0), "opts.c": (5, 5)},
    "gamma": {"engine.c": (4, 3)},
}

EXPECTED_CONSTANTS = {
    "alpha": {"FEATURE_X", "FEATURE_Y"},
    "beta": {"OPT_A", "OPT_B"},
    "gamma": {"TRACE"},
}


def _is_source(path: str) -> bool:
    return path.endswith((".c", ".h"))


@dataclass
class FileExpectation:
    total_commits: int = 0
    changed_by: set[str] = field(default_factory=set)
    variable_contributors: set[str] = field(default_factory=set)
    first_author: str | None = None
    per_dev: dict[str, dict] = field(default_factory=dict)


@dataclass
class RepoExpectation:
    commits: int = 0
    developers: set[str] = field(default_factory=set)
    files: dict[str, FileExpectation] = field(default_factory=dict)
    dev_variable: dict[str, int] = field(default_factory=dict)
    dev_mandatory: dict[str, int] = field(default_factory=dict)


def fold_steps(steps) -> RepoExpectation:
    exp = RepoExpectation()
    alias: dict[str, str] = {}  # current path -> original identity key

    def identity(path: str) -> str:
        return alias.setdefault(path, path)

    for step in steps:
        if step.merge_branch is not None:
            continue  # merges emit nothing
        exp.commits += 1
        dev = step.author[1].lower()
        exp.developers.add(dev)

        touched_paths: set[str] = set()
        for old, new in step.renames.items():
            if _is_source(new):
                alias[new] = alias.pop(old, old)
                touched_paths.add(new)
        for path in step.writes:
            if _is_source(path):
                touched_paths.add(path)

        for path in touched_paths:
            f = exp.files.setdefault(identity(path), FileExpectation())
            f.total_commits += 1
            f.changed_by.add(dev)
            entry = f.per_dev.setdefault(
                dev, {"commit_count": 0, "variable": 0, "mandatory": 0, "fa": False}
            )
            entry["commit_count"] += 1
            if path in step.creates and f.first_author is None:
                f.first_author = dev
                entry["fa"] = True

        for path, (variable, mandatory) in step.touches.items():
            f = exp.files[identity(path)]
            entry = f.per_dev[dev]
            entry["variable"] += variable
            entry["mandatory"] += mandatory
            if variable >= 1:
                f.variable_contributors.add(dev)
            exp.dev_variable[dev] = exp.dev_variable.get(dev, 0) + variable
            exp.dev_mandatory[dev] = exp.dev_mandatory.get(dev, 0) + mandatory

    # rename the identity keys to the final paths
    final = {}
    reverse = {orig: cur for cur, orig in alias.items()}
    for orig, f in exp.files.items():
        final[reverse.get(orig, orig)] = f
    exp.files = final
    return exp


def expected_classes(exp: RepoExpectation) -> dict[str, str]:
    out = {}
    for dev in sorted(exp.developers):
        v = exp.dev_variable.get(dev, 0)
        m = exp.dev_mandatory.get(dev, 0)
        if v == 0 and m == 0:
            continue
        out[dev] = "generalist" if v == 0 else ("specialist" if m == 0 else "mixed")
    return out


def expected_doa(fa: bool, dl: int, ac: int) -> float:
    return 3.293 + 1.098 * (1 if fa else 0) + 0.164 * dl - 0.321 * math.log(1 + ac)


def expected_expert_sets(f: FileExpectation) -> tuple[set[str], set[str]]:
    """(authors by degree-of-authorship, majors by ownership)."""
    raw = {
        dev: expected_doa(e["fa"], e["commit_count"], f.total_commits - e["commit_count"])
        for dev, e in f.per_dev.items()
    }
    top = max(raw.values())
    authors = {
        dev
        for dev, value in raw.items()
        if (1.0 if value == top else value / top) > 0.75 and value >= 3.293
    }
    majors = {
        dev
        for dev, e in f.per_dev.items()
        if 100.0 * e["commit_count"] / f.total_commits > 5.0
    }
    return authors, majors


def expected_gini(values) -> float:
    vals = [float(v) for v in values]
    n = len(vals)
    total = sum(vals)
    acc = 0.0
    for a in vals:
        for b in vals:
            acc += abs(a - b)
    return acc / (2.0 * n * total)


def expected_precision_recall(experts_by_file, truth_by_file) -> tuple[float, float, int, int, int]:
    tp = fp = fn = 0
    for path in set(experts_by_file) | set(truth_by_file):
        e = experts_by_file.get(path, set())
        t = truth_by_file.get(path, set())
        tp += len(e & t)
        fp += len(e - t)
        fn += len(t - e)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, tp, fp, fn


def expected_project(name: str, steps) -> dict:
    """Everything criterion-level tests compare against, for one repo."""
    exp = fold_steps(steps)
    head = EXPECTED_HEAD[name]
    eval_files = [p for p, (_, var) in head.items() if var >= 1]

    experts_doa = {}
    experts_own = {}
    truth = {}
    for path in eval_files:
        f = exp.files[path]
        authors, majors = expected_expert_sets(f)
        experts_doa[path] = authors
        experts_own[path] = majors
        truth[path] = set(f.variable_contributors)

    workload = [v for v in (exp.dev_variable.get(d, 0) for d in sorted(exp.developers)) if v > 0]
    total_loc = sum(t for t, _ in head.values())
    variable_loc = sum(v for _, v in head.values())

    return {
        "commits": exp.commits,
        "developers": len(exp.developers),
        "files": exp.files,
        "classes": expected_classes(exp),
        "gini": expected_gini(workload) if workload else None,
        "workload": workload,
        "eval_files": sorted(eval_files),
        "truth": truth,
        "experts_doa": experts_doa,
        "experts_ownership": experts_own,
        "doa_eval": expected_precision_recall(experts_doa, truth),
        "ownership_eval": expected_precision_recall(experts_own, truth),
        "total_loc": total_loc,
        "pct_variable": 100.0 * variable_loc / total_loc,
        "constants": EXPECTED_CONSTANTS[name],
    }
