"""Ground-truth construction: who touched variable vs. mandatory code.

Joins the mined commit stream with per-snapshot variability maps.
Added lines are classified against the post-image of their file,
deleted lines against the pre-image (a deleted line's variability
status only ever existed before the commit).  A textual modification
(delete+add of the same spot) is counted once through its addition
side; the deletion side only counts when a change is purely removals
or the whole file goes away.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import InconsistentStreams, SnapshotUnavailable
from .mining import BlobReader, CommitRecord, FileChange
from .variability import GuardPolicy, VariabilityMap, build_variability_map

logger = logging.getLogger(__name__)

__all__ = [
    "TouchRecord",
    "DevFileStats",
    "FileStats",
    "DeveloperTotals",
    "ContributionLedger",
    "SnapshotMaps",
    "attribute_commit",
    "build_ledger",
]


@dataclass(frozen=True)
class TouchRecord:
    developer_key: str
    path: str
    commit_hash: str
    variable_lines: int
    mandatory_lines: int


@dataclass
class DevFileStats:
    variable_touches: int = 0
    mandatory_touches: int = 0
    commit_count: int = 0
    first_author: bool = False


@dataclass
class FileStats:
    total_commits: int = 0
    changed_by: set[str] = field(default_factory=set)
    variable_contributors: set[str] = field(default_factory=set)
    first_author: str | None = None


@dataclass
class DeveloperTotals:
    variable_touches: int = 0
    mandatory_touches: int = 0
    commits: int = 0
    variable_commits: int = 0  # commits with at least one variable-line touch


class SnapshotMaps:
    """Variability maps for (revision, path) pairs, parsed once per blob."""

    def __init__(self, repo_path, guard_policy: GuardPolicy | None = None):
        self._reader = BlobReader(repo_path)
        self._policy = guard_policy or GuardPolicy()
        self._by_blob: dict[str, VariabilityMap] = {}

    def map_at(self, rev: str, path: str) -> VariabilityMap | None:
        blob = self._reader.resolve(rev, path)
        if blob is None:
            return None
        cached = self._by_blob.get(blob)
        if cached is None:
            text = self._reader.read_blob(blob)
            cached = build_variability_map(text, self._policy, path=path)
            self._by_blob[blob] = cached
        return cached

    def close(self) -> None:
        self._reader.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def _count_lines(changes, vmap: VariabilityMap, commit: str, path: str) -> tuple[int, int]:
    variable = mandatory = 0
    n = len(vmap.line_variable)
    for lc in changes:
        if 1 <= lc.line_number <= n:
            if vmap.line_variable[lc.line_number - 1]:
                variable += 1
            else:
                mandatory += 1
        else:
            # out-of-range lines should not happen with -U0 diffs; be loud
            # but keep the run alive
            logger.warning(
                "line %d outside %d-line snapshot of %s at %s",
                lc.line_number, n, path, commit,
            )
            mandatory += 1
    return variable, mandatory


def attribute_commit(record: CommitRecord, snapshots: SnapshotMaps) -> list[TouchRecord]:
    """Classify one commit's changed lines into variable/mandatory touches."""
    if record.parent_count >= 2:
        raise InconsistentStreams(f"merge commit {record.commit_hash} in attribution stream")
    touches: list[TouchRecord] = []
    for fc in record.file_changes:
        variable = mandatory = 0
        if fc.change_kind == "deleted":
            pre = snapshots.map_at(f"{record.commit_hash}^", fc.path)
            if pre is None:
                raise SnapshotUnavailable(f"{fc.path} before {record.commit_hash}")
            variable, mandatory = _count_lines(fc.deletions, pre, record.commit_hash, fc.path)
        elif fc.additions:
            post = snapshots.map_at(record.commit_hash, fc.path)
            if post is None:
                raise SnapshotUnavailable(f"{fc.path} at {record.commit_hash}")
            variable, mandatory = _count_lines(fc.additions, post, record.commit_hash, fc.path)
        elif fc.deletions:
            pre_path = fc.old_path if fc.change_kind == "renamed" else fc.path
            pre = snapshots.map_at(f"{record.commit_hash}^", pre_path)
            if pre is None:
                raise SnapshotUnavailable(f"{pre_path} before {record.commit_hash}")
            variable, mandatory = _count_lines(fc.deletions, pre, record.commit_hash, fc.path)
        if variable + mandatory >= 1:
            touches.append(
                TouchRecord(
                    developer_key=record.author.key,
                    path=fc.path,
                    commit_hash=record.commit_hash,
                    variable_lines=variable,
                    mandatory_lines=mandatory,
                )
            )
    return touches


class _FileIdentity:
    """A file tracked across renames; counters live on the identity."""

    __slots__ = ("current_path", "per_dev", "stats")

    def __init__(self, path: str):
        self.current_path = path
        self.per_dev: dict[str, DevFileStats] = {}
        self.stats = FileStats()

    def dev(self, key: str) -> DevFileStats:
        entry = self.per_dev.get(key)
        if entry is None:
            entry = self.per_dev[key] = DevFileStats()
        return entry


class ContributionLedger:
    """Per-(developer, file) counters over the full history.

    Files are keyed by their path at the end of history; rename-following
    keeps counters and first authorship attached to the same identity.
    """

    def __init__(self):
        self._identities: dict[str, _FileIdentity] = {}
        self._dev_totals: dict[str, DeveloperTotals] = {}

    # -- queries ------------------------------------------------------------

    def paths(self) -> list[str]:
        return sorted(self._identities)

    def has_path(self, path: str) -> bool:
        return path in self._identities

    def contributors(self, path: str) -> dict[str, DevFileStats]:
        return self._identities[path].per_dev

    def file_stats(self, path: str) -> FileStats:
        return self._identities[path].stats

    def variable_contributors(self, path: str) -> set[str]:
        return set(self._identities[path].stats.variable_contributors)

    def developer_totals(self) -> dict[str, DeveloperTotals]:
        return self._dev_totals

    # -- fold ---------------------------------------------------------------

    def _identity(self, path: str) -> _FileIdentity:
        ident = self._identities.get(path)
        if ident is None:
            ident = self._identities[path] = _FileIdentity(path)
        return ident

    def _apply_commit(self, record: CommitRecord, touches: list[TouchRecord]) -> None:
        dev = record.author.key
        totals = self._dev_totals.get(dev)
        if totals is None:
            totals = self._dev_totals[dev] = DeveloperTotals()
        if record.file_changes:
            totals.commits += 1

        for fc in record.file_changes:
            if fc.change_kind == "renamed" and fc.old_path:
                ident = self._identities.pop(fc.old_path, None)
                if ident is None:
                    ident = _FileIdentity(fc.path)
                ident.current_path = fc.path
                self._identities[fc.path] = ident
            else:
                ident = self._identity(fc.path)
            entry = ident.dev(dev)
            entry.commit_count += 1
            ident.stats.total_commits += 1
            ident.stats.changed_by.add(dev)
            if fc.change_kind == "added" and ident.stats.first_author is None:
                ident.stats.first_author = dev
                entry.first_author = True

        commit_touched_variable = False
        for tr in touches:
            ident = self._identities.get(tr.path)
            if ident is None:
                raise InconsistentStreams(
                    f"touch for {tr.path} without a file change in {tr.commit_hash}"
                )
            entry = ident.dev(tr.developer_key)
            entry.variable_touches += tr.variable_lines
            entry.mandatory_touches += tr.mandatory_lines
            if tr.variable_lines >= 1:
                ident.stats.variable_contributors.add(tr.developer_key)
                commit_touched_variable = True
            dt = self._dev_totals.setdefault(tr.developer_key, DeveloperTotals())
            dt.variable_touches += tr.variable_lines
            dt.mandatory_touches += tr.mandatory_lines
        if commit_touched_variable:
            totals.variable_commits += 1

    # -- persistence ----------------------------------------------------------

    def write_ndjson(self, ledger_path, files_path) -> None:
        ledger_path, files_path = Path(ledger_path), Path(files_path)
        tmp = ledger_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for path in self.paths():
                for dev in sorted(self._identities[path].per_dev):
                    e = self._identities[path].per_dev[dev]
                    fh.write(
                        json.dumps(
                            {
                                "developer_key": dev,
                                "path": path,
                                "variable_touches": e.variable_touches,
                                "mandatory_touches": e.mandatory_touches,
                                "commit_count": e.commit_count,
                                "first_author": e.first_author,
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )
        os.replace(tmp, ledger_path)
        tmp = files_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for path in self.paths():
                s = self._identities[path].stats
                fh.write(
                    json.dumps(
                        {
                            "path": path,
                            "total_commits": s.total_commits,
                            "changed_by": sorted(s.changed_by),
                            "variable_contributors": sorted(s.variable_contributors),
                            "first_author": s.first_author,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        os.replace(tmp, files_path)


def build_ledger(
    touches: Iterable[TouchRecord],
    history: Iterable[CommitRecord],
) -> ContributionLedger:
    """Fold touches and commits (oldest first) into a ledger.

    All counters are order-independent; first authorship and rename
    identity depend on the history's commit order, which the miner
    already guarantees.
    """
    by_commit: dict[str, list[TouchRecord]] = {}
    for tr in touches:
        by_commit.setdefault(tr.commit_hash, []).append(tr)

    ledger = ContributionLedger()
    seen: set[str] = set()
    for record in history:
        seen.add(record.commit_hash)
        ledger._apply_commit(record, by_commit.get(record.commit_hash, []))

    stray = set(by_commit) - seen
    if stray:
        raise InconsistentStreams(
            f"touches reference commits absent from history: {sorted(stray)[:3]}"
        )
    return ledger


def ledger_up_to(
    touches: Iterable[TouchRecord],
    history: Iterable[CommitRecord],
    commit_hash: str,
) -> ContributionLedger:
    """Ledger state at a commit of interest (inclusive).

    Supports historical expertise scoring; the pipeline default stays
    head-of-history.
    """
    prefix: list[CommitRecord] = []
    found = False
    for record in history:
        prefix.append(record)
        if record.commit_hash == commit_hash:
            found = True
            break
    if not found:
        raise InconsistentStreams(f"commit {commit_hash} not in history stream")
    included = {r.commit_hash for r in prefix}
    return build_ledger([t for t in touches if t.commit_hash in included], prefix)
