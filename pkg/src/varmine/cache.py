"""Newline-delimited JSON cache for mined histories.

One ``history.ndjson`` per (repository, head commit) key; a cache hit
replays the record stream without touching git's object walk.  Each row
is one file change with its commit context:

    {commit, author_key, author_name, timestamp, path, old_path,
     change_kind, additions: [{line, content}], deletions: [...]}

Commits whose changes were entirely filtered out (documentation-only
commits, say) are kept as rows with a null path so the commit and
developer counts survive a cached replay.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Iterable, Iterator

from .mining import CommitRecord, DeveloperId, FileChange, LineChange

logger = logging.getLogger(__name__)

__all__ = ["HistoryCache"]


class HistoryCache:
    def __init__(self, root):
        self.root = Path(root)

    def _entry(self, repo_key: str, head: str) -> Path:
        digest = hashlib.sha256(f"{repo_key}\n{head}".encode()).hexdigest()[:24]
        return self.root / f"{digest}-{head[:12]}" / "history.ndjson"

    def has(self, repo_key: str, head: str) -> bool:
        return self._entry(repo_key, head).exists()

    def load(self, repo_key: str, head: str) -> Iterator[CommitRecord] | None:
        path = self._entry(repo_key, head)
        if not path.exists():
            return None
        logger.info("history cache hit for %s@%s, mining stage skipped", repo_key, head[:12])
        return _read_records(path)

    def store(self, repo_key: str, head: str, records: Iterable[CommitRecord]) -> Path:
        path = self._entry(repo_key, head)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for record in records:
                for row in _record_rows(record):
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")
        os.replace(tmp, path)
        return path


def _record_rows(record: CommitRecord) -> Iterator[dict]:
    base = {
        "commit": record.commit_hash,
        "author_key": record.author.key,
        "author_name": record.author.display_name,
        "timestamp": record.timestamp,
    }
    if not record.file_changes:
        yield {
            **base,
            "path": None,
            "old_path": None,
            "change_kind": None,
            "additions": [],
            "deletions": [],
        }
        return
    for fc in record.file_changes:
        yield {
            **base,
            "path": fc.path,
            "old_path": fc.old_path,
            "change_kind": fc.change_kind,
            "additions": [{"line": lc.line_number, "content": lc.content} for lc in fc.additions],
            "deletions": [{"line": lc.line_number, "content": lc.content} for lc in fc.deletions],
        }


def _read_records(path: Path) -> Iterator[CommitRecord]:
    current: dict | None = None
    changes: list[FileChange] = []

    def build() -> CommitRecord:
        author = DeveloperId(
            key=current["author_key"],
            display_name=current["author_name"],
            emails=frozenset({current["author_key"]})
            if "@" in current["author_key"]
            else frozenset(),
        )
        return CommitRecord(
            commit_hash=current["commit"],
            author=author,
            timestamp=current["timestamp"],
            parent_count=1,  # replayed records carry no parent info
            file_changes=tuple(changes),
        )

    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            row = json.loads(raw)
            if current is not None and row["commit"] != current["commit"]:
                yield build()
                changes = []
            current = row
            if row["path"] is None:
                continue
            changes.append(
                FileChange(
                    path=row["path"],
                    change_kind=row["change_kind"],
                    old_path=row["old_path"],
                    additions=tuple(
                        LineChange("addition", a["line"], a["content"])
                        for a in row["additions"]
                    ),
                    deletions=tuple(
                        LineChange("deletion", d["line"], d["content"])
                        for d in row["deletions"]
                    ),
                )
            )
    if current is not None:
        yield build()
