"""Git history extraction.

This backend shells out to the ``git`` binary and parses its output
rather than going through a wrapper library: the analysis depends on
exact unified-diff semantics (zero context lines, 50% rename detection,
full-index blob hashes) that are easiest to guarantee by driving the
plumbing directly.

One streaming ``git log`` invocation yields every non-merge commit
reachable from the analysis branch, oldest first in topology-respecting
timestamp order.  Merge commits are walked for reachability but emit
nothing, so changes that entered through a merged branch are attributed
at their original commits and never counted twice.  A textual
modification appears as a deletion/addition pair, exactly as in the
underlying diff.

Decoding is lossy everywhere (UTF-8 with replacement characters), so a
stray invalid byte in an author name or a source file never aborts a
run.  Binary files are skipped with a warning.
"""

from __future__ import annotations

import codecs
import logging
import re
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import (
    BranchNotFound,
    CommitNotFound,
    CorruptObject,
    EmptyIdentity,
    PathAbsentAtCommit,
    RepositoryNotFound,
)

logger = logging.getLogger(__name__)

__all__ = [
    "DeveloperId",
    "LineChange",
    "FileChange",
    "CommitRecord",
    "SourceFilter",
    "DEFAULT_SOURCE_EXTENSIONS",
    "normalize_identity",
    "is_source_file",
    "extract_history",
    "snapshot_file",
    "resolve_default_branch",
    "resolve_commit",
    "list_source_files",
    "BlobReader",
]

DEFAULT_SOURCE_EXTENSIONS = frozenset(
    {".c", ".h", ".cpp", ".cc", ".cxx", ".hpp", ".hh", ".hxx", ".inl"}
)

_COMMIT_SENTINEL = "\x01C\x01"
_LOG_FORMAT = "%x01C%x01%H%x01%P%x01%at%x01%an%x01%ae"
_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


@dataclass(frozen=True)
class DeveloperId:
    """Normalized developer identity; equal keys mean the same developer."""

    key: str
    display_name: str
    emails: frozenset[str] = frozenset()


@dataclass(frozen=True)
class LineChange:
    kind: str  # addition | deletion
    line_number: int  # post-image line for additions, pre-image for deletions
    content: str


@dataclass(frozen=True)
class FileChange:
    path: str
    change_kind: str  # added | modified | deleted | renamed
    old_path: str | None
    additions: tuple[LineChange, ...]
    deletions: tuple[LineChange, ...]

    @property
    def line_changes(self) -> tuple[LineChange, ...]:
        return self.additions + self.deletions


@dataclass(frozen=True)
class CommitRecord:
    commit_hash: str
    author: DeveloperId
    timestamp: int
    parent_count: int
    file_changes: tuple[FileChange, ...]


@dataclass(frozen=True)
class SourceFilter:
    extensions: frozenset[str] = DEFAULT_SOURCE_EXTENSIONS

    def matches(self, path: str) -> bool:
        dot = path.rfind(".")
        if dot < 0:
            return False
        return path[dot:].lower() in self.extensions


def is_source_file(path: str, source_filter: SourceFilter | None = None) -> bool:
    """True for C/C++ translation units and headers (configurable set)."""
    return (source_filter or SourceFilter()).matches(path)


def normalize_identity(raw_name: str, raw_email: str) -> DeveloperId:
    """Email-keyed identity; the name is only a fallback key.

    No fuzzy alias merging: the mapping must stay deterministic and
    auditable.
    """
    name = (raw_name or "").strip()
    email = (raw_email or "").strip()
    if not name and not email:
        raise EmptyIdentity("both name and email are blank")
    key = email.lower() if email else name.lower()
    emails = frozenset({email.lower()}) if email else frozenset()
    return DeveloperId(key=key, display_name=name or email, emails=emails)


# ---------------------------------------------------------------------------
# git plumbing helpers
# ---------------------------------------------------------------------------

def _git(repo_path, args: list[str], check: bool = True) -> bytes:
    repo = Path(repo_path)
    if not repo.exists():
        raise RepositoryNotFound(str(repo))
    proc = subprocess.run(
        ["git", "-C", str(repo), "-c", "core.quotepath=false", *args],
        capture_output=True,
    )
    if check and proc.returncode != 0:
        stderr = proc.stderr.decode("utf-8", "replace")
        _raise_git_error(stderr, repo)
    return proc.stdout


def _raise_git_error(stderr: str, repo: Path) -> None:
    low = stderr.lower()
    if "not a git repository" in low:
        raise RepositoryNotFound(f"{repo}: not a git repository")
    m = re.search(r"(?:bad|loose) object ([0-9a-f]{6,40})", low) or re.search(
        r"object ([0-9a-f]{6,40}) is corrupt", low
    )
    if m:
        raise CorruptObject(m.group(1), stderr.strip())
    if "unknown revision" in low or "bad revision" in low or "needed a single revision" in low:
        raise BranchNotFound(stderr.strip())
    raise RuntimeError(f"git failed: {stderr.strip()}")


def resolve_default_branch(repo_path) -> str:
    """Branch the repository HEAD points at, or 'HEAD' when detached."""
    try:
        out = _git(repo_path, ["symbolic-ref", "--short", "HEAD"])
        return out.decode("utf-8", "replace").strip()
    except (BranchNotFound, RuntimeError):
        return "HEAD"


def resolve_commit(repo_path, rev: str) -> str:
    out = _git(repo_path, ["rev-parse", "--verify", f"{rev}^{{commit}}"])
    return out.decode("ascii", "replace").strip()


def _unquote_git_path(path: str) -> str:
    if path.startswith('"') and path.endswith('"') and len(path) >= 2:
        body = path[1:-1].encode("utf-8", "replace")
        return codecs.escape_decode(body)[0].decode("utf-8", "replace")
    return path


# ---------------------------------------------------------------------------
# history extraction
# ---------------------------------------------------------------------------

def extract_history(
    repo_path,
    branch: str | None = None,
    source_filter: SourceFilter | None = None,
) -> Iterator[CommitRecord]:
    """Stream every non-merge commit reachable from the branch head,
    oldest first, with per-line changes for surviving source files."""
    repo = Path(repo_path)
    if not repo.exists():
        raise RepositoryNotFound(str(repo))
    source_filter = source_filter or SourceFilter()
    if branch is None:
        branch = resolve_default_branch(repo)
    resolve_commit(repo, branch)  # raises BranchNotFound early

    proc = subprocess.Popen(
        [
            "git",
            "-C",
            str(repo),
            "-c",
            "core.quotepath=false",
            "log",
            branch,
            "--date-order",
            "--reverse",
            "--no-merges",
            "--find-renames=50%",
            "-p",
            "-U0",
            "--full-index",
            "--no-color",
            "--encoding=UTF-8",
            f"--format={_LOG_FORMAT}",
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
    )
    assert proc.stdout is not None
    completed = False
    try:
        yield from _parse_log_stream(proc.stdout, source_filter)
        completed = True
    finally:
        proc.stdout.close()
        if completed:
            stderr = proc.stderr.read().decode("utf-8", "replace") if proc.stderr else ""
            code = proc.wait()
            if code != 0:
                _raise_git_error(stderr, repo)
        else:
            # consumer abandoned the stream; don't let SIGPIPE masquerade
            # as a mining failure
            proc.kill()
            proc.wait()


class _FileAccumulator:
    def __init__(self) -> None:
        self.old_path: str | None = None
        self.new_path: str | None = None
        self.kind = "modified"
        self.renamed = False
        self.binary = False
        self.in_hunks = False  # headers only appear before the first @@
        self.additions: list[LineChange] = []
        self.deletions: list[LineChange] = []
        self.add_line = 0
        self.del_line = 0

    def finish(self, source_filter: SourceFilter) -> FileChange | None:
        if self.binary:
            logger.warning("skipping binary file %s", self.new_path or self.old_path)
            return None
        path = self.new_path if self.kind != "deleted" else self.old_path
        if path is None:
            path = self.new_path or self.old_path
        if path is None:
            return None
        # deletions are judged by the pre-image path, everything else by
        # the post-image path
        if not source_filter.matches(path):
            return None
        old_path = self.old_path if self.renamed else None
        kind = "renamed" if self.renamed else self.kind
        if kind == "modified" and not self.additions and not self.deletions:
            return None  # mode-only change
        return FileChange(
            path=path,
            change_kind=kind,
            old_path=old_path,
            additions=tuple(self.additions),
            deletions=tuple(self.deletions),
        )


def _parse_log_stream(stream, source_filter: SourceFilter) -> Iterator[CommitRecord]:
    header: tuple[str, int, int, DeveloperId] | None = None
    changes: list[FileChange] = []
    acc: _FileAccumulator | None = None

    def close_file() -> None:
        nonlocal acc
        if acc is not None:
            fc = acc.finish(source_filter)
            if fc is not None:
                changes.append(fc)
            acc = None

    def close_commit() -> CommitRecord | None:
        nonlocal header, changes
        if header is None:
            return None
        commit, parent_count, timestamp, author = header
        record = CommitRecord(
            commit_hash=commit,
            author=author,
            timestamp=timestamp,
            parent_count=parent_count,
            file_changes=tuple(changes),
        )
        header = None
        changes = []
        return record

    for raw in stream:
        line = raw.decode("utf-8", "replace")
        if line.endswith("\n"):
            line = line[:-1]

        if line.startswith(_COMMIT_SENTINEL):
            close_file()
            record = close_commit()
            if record is not None:
                yield record
            parts = line.split("\x01")
            commit, parents, ts, name, email = parts[2], parts[3], parts[4], parts[5], parts[6]
            author = normalize_identity(name, email)
            header = (commit, len(parents.split()) if parents else 0, int(ts), author)
            continue
        if header is None:
            continue

        if line.startswith("diff --git "):
            close_file()
            acc = _FileAccumulator()
            continue
        if acc is None:
            continue

        if line.startswith("@@ "):
            m = _HUNK_RE.match(line)
            if m:
                acc.in_hunks = True
                acc.del_line = int(m.group(1))
                acc.add_line = int(m.group(3))
        elif acc.in_hunks:
            # hunk body: only +/-/backslash lines until the next file or commit
            if line.startswith("+"):
                acc.additions.append(LineChange("addition", acc.add_line, line[1:]))
                acc.add_line += 1
            elif line.startswith("-"):
                acc.deletions.append(LineChange("deletion", acc.del_line, line[1:]))
                acc.del_line += 1
        elif line.startswith("new file mode"):
            acc.kind = "added"
        elif line.startswith("deleted file mode"):
            acc.kind = "deleted"
        elif line.startswith("rename from "):
            acc.old_path = _unquote_git_path(line[len("rename from "):])
            acc.renamed = True
        elif line.startswith("rename to "):
            acc.new_path = _unquote_git_path(line[len("rename to "):])
        elif line.startswith("--- "):
            target = line[4:]
            if target != "/dev/null":
                acc.old_path = _unquote_git_path(target[2:] if target.startswith("a/") else target)
        elif line.startswith("+++ "):
            target = line[4:]
            if target != "/dev/null":
                acc.new_path = _unquote_git_path(target[2:] if target.startswith("b/") else target)
        elif line.startswith("Binary files ") or line.startswith("GIT binary patch"):
            acc.binary = True
        # "\ No newline at end of file" and anything else: ignore

    close_file()
    record = close_commit()
    if record is not None:
        yield record


# ---------------------------------------------------------------------------
# snapshot access
# ---------------------------------------------------------------------------

def snapshot_file(repo_path, commit_hash: str, path: str) -> str:
    """Exact blob content at a revision, decoded lossily as UTF-8."""
    repo = Path(repo_path)
    proc = subprocess.run(
        ["git", "-C", str(repo), "-c", "core.quotepath=false", "cat-file", "blob",
         f"{commit_hash}:{path}"],
        capture_output=True,
    )
    if proc.returncode != 0:
        stderr = proc.stderr.decode("utf-8", "replace")
        low = stderr.lower()
        if "does not exist in" in low or "exists on disk, but not in" in low:
            raise PathAbsentAtCommit(f"{path} at {commit_hash}")
        if "not a valid object name" in low or "bad revision" in low:
            # same message for a bad commit and a bad path; disambiguate
            try:
                resolve_commit(repo, commit_hash)
            except (BranchNotFound, RuntimeError):
                raise CommitNotFound(commit_hash) from None
            raise PathAbsentAtCommit(f"{path} at {commit_hash}")
        _raise_git_error(stderr, repo)
    return proc.stdout.decode("utf-8", "replace")


def list_source_files(
    repo_path, commit: str, source_filter: SourceFilter | None = None
) -> list[str]:
    """Source files present in the tree of one commit, sorted."""
    source_filter = source_filter or SourceFilter()
    out = _git(repo_path, ["ls-tree", "-r", "--name-only", "-z", commit])
    paths = [p.decode("utf-8", "replace") for p in out.split(b"\x00") if p]
    return sorted(p for p in paths if source_filter.matches(p))


class BlobReader:
    """Snapshot access through persistent ``git cat-file --batch`` pipes.

    ``--batch-check`` resolves <rev>:<path> to a blob hash cheaply;
    content is fetched (and typically parsed, by the caller) once per
    unique blob.
    """

    def __init__(self, repo_path):
        self._repo = str(repo_path)
        self._check = self._spawn("--batch-check")
        self._batch = self._spawn("--batch")

    def _spawn(self, mode: str) -> subprocess.Popen:
        return subprocess.Popen(
            ["git", "-C", self._repo, "-c", "core.quotepath=false", "cat-file", mode],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )

    def resolve(self, rev: str, path: str) -> str | None:
        """Blob hash for rev:path, or None when absent."""
        spec = f"{rev}:{path}"
        self._check.stdin.write(spec.encode("utf-8", "replace") + b"\n")
        self._check.stdin.flush()
        reply = self._check.stdout.readline().decode("utf-8", "replace").strip()
        if not reply or reply.endswith(" missing") or "ambiguous" in reply:
            return None
        parts = reply.split()
        if len(parts) < 3 or parts[1] != "blob":
            return None
        return parts[0]

    def read_blob(self, blob_hash: str) -> str:
        self._batch.stdin.write(blob_hash.encode("ascii") + b"\n")
        self._batch.stdin.flush()
        head = self._batch.stdout.readline().decode("utf-8", "replace").strip()
        if head.endswith(" missing"):
            raise PathAbsentAtCommit(blob_hash)
        size = int(head.split()[2])
        body = self._batch.stdout.read(size)
        self._batch.stdout.read(1)  # trailing newline
        return body.decode("utf-8", "replace")

    def close(self) -> None:
        for proc in (self._check, self._batch):
            try:
                proc.stdin.close()
                proc.wait(timeout=5)
            except Exception:
                proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
