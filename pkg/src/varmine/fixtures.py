"""Scripted synthetic repositories for tests and benchmarks.

Three small repositories with fully known histories (authors, branch
structure, per-line classifications) back the end-to-end oracle tests;
a generated many-commit repository backs the throughput checks.  Every
commit carries hand-derived annotations of what the analysis must
attribute for it (``touches`` maps path -> (variable, mandatory) line
counts), so expected results can be recomputed by an enumeration script
that never imports the pipeline.

Repository builds are deterministic: fixed author/committer dates give
fixed commit hashes.
"""

from __future__ import annotations

import os
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "FixtureStep",
    "FIXTURE_REPOS",
    "build_fixture_repo",
    "build_fixture_corpus",
    "build_throughput_repo",
]

_EPOCH = 1704067200  # 2024-01-01T00:00:00Z


@dataclass(frozen=True)
class FixtureStep:
    author: tuple[str, str]  # display name, email
    message: str
    writes: dict[str, str] = field(default_factory=dict)
    deletes: tuple[str, ...] = ()
    renames: dict[str, str] = field(default_factory=dict)  # old -> new
    branch: str | None = None  # commit lands on this branch (default master)
    merge_branch: str | None = None  # merge that branch into master instead
    # hand-derived expectations, consumed by the oracle only:
    touches: dict[str, tuple[int, int]] = field(default_factory=dict)
    creates: tuple[str, ...] = ()


ALICE = ("Alice", "alice@example.com")
BOB = ("Bob", "bob@example.com")
CAROL = ("Carol", "carol@example.com")
DAVE = ("Dave", "dave@example.com")
ERIN = ("Erin", "erin@example.com")
FRANK = ("Frank", "frank@example.com")
GINA = ("Gina", "gina@example.com")
HUGO = ("Hugo", "hugo@example.com")

_CORE_V1 = '#include <stdio.h>\nint main(void) {\n    return 0;\n}\n'
_CORE_V2 = '#include <stdio.h>\nint main(void) {\n    puts("hi");\n    return 0;\n}\n'
_FEATURE_V1 = '#ifdef FEATURE_X\nint feature_on = 1;\n#endif\nint base = 0;\n'
_FEATURE_V2 = (
    '#ifdef FEATURE_X\nint feature_on = 1;\n#endif\n'
    '#ifdef FEATURE_Y\nint base = 0;\n#endif\n'
)
_FEATURE_V3 = (
    '#ifdef FEATURE_X\nint feature_on = 2;\n#endif\n'
    '#ifdef FEATURE_Y\nint base = 0;\n#endif\n'
)
_HEADER_V1 = '#ifndef ALPHA_H\n#define ALPHA_H\nint alpha(void);\n#endif\n'

ALPHA_STEPS = [
    FixtureStep(ALICE, "add core", writes={"core.c": _CORE_V1},
                touches={"core.c": (0, 4)}, creates=("core.c",)),
    FixtureStep(BOB, "add feature", writes={"feature.c": _FEATURE_V1},
                touches={"feature.c": (3, 1)}, creates=("feature.c",)),
    FixtureStep(CAROL, "greet", writes={"core.c": _CORE_V2},
                touches={"core.c": (0, 1)}),
    FixtureStep(ALICE, "guard base", writes={"feature.c": _FEATURE_V2},
                touches={"feature.c": (2, 0)}),
    FixtureStep(BOB, "drop greeting", writes={"core.c": _CORE_V1},
                touches={"core.c": (0, 1)}),
    FixtureStep(CAROL, "tweak feature", writes={"feature.c": _FEATURE_V3},
                branch="dev", touches={"feature.c": (1, 0)}),
    FixtureStep(ALICE, "merge dev", merge_branch="dev"),
    FixtureStep(ALICE, "add header", writes={"header.h": _HEADER_V1},
                touches={"header.h": (0, 4)}, creates=("header.h",)),
    FixtureStep(BOB, "add docs", writes={"README.md": "alpha docs\n"}),
]

_UTIL_V1 = 'int add(int a, int b) {\n    return a + b;\n}\n'
_UTIL_V2 = (
    'int add(int a, int b) {\n    return a + b;\n}\n'
    'int sub(int a, int b) {\n    return a - b;\n}\n'
)
_UTIL_V3 = (
    'int add(int a, int b) {\n    return b + a;\n}\n'
    'int sub(int a, int b) {\n    return a - b;\n}\n'
)
_OPTS_V1 = '#if defined(OPT_A) && !defined(OPT_B)\nint opt = 1;\n#else\nint opt = 0;\n#endif\n'
_OPTS_V2 = '#if defined(OPT_A) && !defined(OPT_B)\nint opt = 2;\n#else\nint opt = 0;\n#endif\n'
_OPTS_V3 = '#if defined(OPT_A) && !defined(OPT_B)\nint opt = 2;\n#else\nint opt = -1;\n#endif\n'

BETA_STEPS = [
    FixtureStep(DAVE, "add util", writes={"util.c": _UTIL_V1},
                touches={"util.c": (0, 3)}, creates=("util.c",)),
    FixtureStep(ERIN, "add options", writes={"opts.c": _OPTS_V1},
                touches={"opts.c": (5, 0)}, creates=("opts.c",)),
    FixtureStep(FRANK, "add sub", writes={"util.c": _UTIL_V2},
                touches={"util.c": (0, 3)}),
    FixtureStep(FRANK, "bump opt", writes={"opts.c": _OPTS_V2},
                touches={"opts.c": (1, 0)}),
    FixtureStep(DAVE, "commute add", writes={"util.c": _UTIL_V3},
                touches={"util.c": (0, 1)}),
    FixtureStep(ERIN, "negative default", writes={"opts.c": _OPTS_V3},
                touches={"opts.c": (1, 0)}),
]


def _proto(k: int, line2: str = "void trace(void) {}") -> str:
    return f'#ifdef TRACE\n{line2}\n#endif\nint run(void) {{ return {k}; }}\n'


def _gamma_steps() -> list[FixtureStep]:
    steps = [
        FixtureStep(GINA, "add proto", writes={"proto.c": _proto(1)},
                    touches={"proto.c": (3, 1)}, creates=("proto.c",)),
    ]
    for k in range(2, 19):
        steps.append(
            FixtureStep(GINA, f"rev {k}", writes={"proto.c": _proto(k)},
                        touches={"proto.c": (0, 1)})
        )
    steps.append(
        FixtureStep(HUGO, "early return", writes={"proto.c": _proto(18, "void trace(void) { return; }")},
                    touches={"proto.c": (1, 0)})
    )
    steps.append(
        FixtureStep(GINA, "rename to engine", renames={"proto.c": "engine.c"})
    )
    return steps


GAMMA_STEPS = _gamma_steps()

FIXTURE_REPOS: dict[str, list[FixtureStep]] = {
    "alpha": ALPHA_STEPS,
    "beta": BETA_STEPS,
    "gamma": GAMMA_STEPS,
}


def _git(repo: Path, args: list[str], date: int | None = None,
         author: tuple[str, str] | None = None) -> None:
    env = dict(os.environ)
    if author is not None:
        env["GIT_AUTHOR_NAME"], env["GIT_AUTHOR_EMAIL"] = author
        env["GIT_COMMITTER_NAME"], env["GIT_COMMITTER_EMAIL"] = author
    if date is not None:
        stamp = f"{date} +0000"
        env["GIT_AUTHOR_DATE"] = stamp
        env["GIT_COMMITTER_DATE"] = stamp
    subprocess.run(
        ["git", "-C", str(repo), *args],
        check=True,
        capture_output=True,
        env=env,
    )


def build_fixture_repo(name: str, dest) -> Path:
    """Materialize one scripted repository under dest/name."""
    steps = FIXTURE_REPOS[name]
    repo = Path(dest) / name
    repo.mkdir(parents=True, exist_ok=True)
    subprocess.run(
        ["git", "init", "--quiet", "--initial-branch=master", str(repo)],
        check=True,
        capture_output=True,
    )
    _git(repo, ["config", "user.name", "Fixture"])
    _git(repo, ["config", "user.email", "fixture@example.com"])

    current = "master"
    for i, step in enumerate(steps):
        date = _EPOCH + 60 * i
        if step.merge_branch is not None:
            if current != "master":
                _git(repo, ["checkout", "--quiet", "master"])
                current = "master"
            _git(
                repo,
                ["merge", "--no-ff", "--no-edit", "--quiet", "-m", step.message,
                 step.merge_branch],
                date=date,
                author=step.author,
            )
            continue
        target = step.branch or "master"
        if target != current:
            branches = subprocess.run(
                ["git", "-C", str(repo), "branch", "--list", target],
                check=True, capture_output=True,
            ).stdout.decode().strip()
            if branches:
                _git(repo, ["checkout", "--quiet", target])
            else:
                _git(repo, ["checkout", "--quiet", "-b", target])
            current = target
        for old, new in step.renames.items():
            _git(repo, ["mv", old, new])
        for path in step.deletes:
            _git(repo, ["rm", "--quiet", path])
        for path, content in step.writes.items():
            file_path = repo / path
            file_path.parent.mkdir(parents=True, exist_ok=True)
            file_path.write_text(content, encoding="utf-8")
        _git(repo, ["add", "-A"])
        _git(repo, ["commit", "--quiet", "--allow-empty", "-m", step.message],
             date=date, author=step.author)
    if current != "master":
        _git(repo, ["checkout", "--quiet", "master"])
    return repo


def build_fixture_corpus(dest, throughput_commits: int = 0) -> Path:
    """Build all scripted repositories plus a corpus config file."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    names = list(FIXTURE_REPOS)
    for name in names:
        build_fixture_repo(name, dest)
    if throughput_commits > 0:
        build_throughput_repo(dest / "perf", commits=throughput_commits)
        names.append("perf")

    lines = ["projects:"]
    for name in names:
        lines.append(f"  - name: {name}")
        lines.append(f"    repo: {dest / name}")
    lines += [
        "guard_policy: exclude",
        "aggregation: micro",
        "min_developers: 2",
        "min_constants: 1",
    ]
    config_path = dest / "corpus.yaml"
    config_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return config_path


def build_throughput_repo(dest, commits: int = 2000, files: int = 5,
                          authors: int = 10) -> Path:
    """Many-commit synthetic repository, written via git fast-import."""
    repo = Path(dest)
    repo.mkdir(parents=True, exist_ok=True)
    subprocess.run(
        ["git", "init", "--quiet", "--initial-branch=master", str(repo)],
        check=True, capture_output=True,
    )

    contents = {
        i: [
            f"#ifdef PERF_FLAG_{i}",
            f"static int flag_{i} = 1;",
            "#endif",
            f"int base_{i} = 0;",
        ]
        for i in range(files)
    }

    chunks: list[bytes] = []
    mark = 0
    for k in range(commits):
        i = k % files
        if k % 5 == 4:
            contents[i][1] = f"static int flag_{i} = {k};"  # edit inside region
        else:
            contents[i].append(f"int v_{k} = {k};")
        blob = ("\n".join(contents[i]) + "\n").encode()
        mark += 1
        blob_mark = mark
        chunks.append(b"blob\nmark :%d\ndata %d\n%s\n" % (blob_mark, len(blob), blob))
        mark += 1
        author = f"Perf Dev {k % authors} <perf{k % authors}@example.com>"
        stamp = f"{_EPOCH + k} +0000"
        msg = f"change {k}".encode()
        commit = [b"commit refs/heads/master\n"]
        commit.append(b"mark :%d\n" % mark)
        commit.append(f"author {author} {stamp}\n".encode())
        commit.append(f"committer {author} {stamp}\n".encode())
        commit.append(b"data %d\n%s\n" % (len(msg), msg))
        if k > 0:
            commit.append(b"from :%d\n" % (mark - 2))
        commit.append(b"M 100644 :%d file%d.c\n" % (blob_mark, i))
        commit.append(b"\n")
        chunks.append(b"".join(commit))

    proc = subprocess.run(
        ["git", "-C", str(repo), "fast-import", "--quiet"],
        input=b"".join(chunks),
        capture_output=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"fast-import failed: {proc.stderr.decode(errors='replace')}")
    return repo
