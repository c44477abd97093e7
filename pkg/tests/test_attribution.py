"""Attribution tests: the developer <-> variable-code join."""

import os
import subprocess
from pathlib import Path

import pytest

from varmine.attribution import (
    SnapshotMaps,
    TouchRecord,
    attribute_commit,
    build_ledger,
)
from varmine.errors import InconsistentStreams
from varmine.mining import extract_history

from oracle_fixture import fold_steps
from varmine.fixtures import ALPHA_STEPS


def _commit(repo: Path, files: dict, author=("Tess", "tess@example.com"), n=[0]):
    for path, content in files.items():
        target = repo / path
        if content is None:
            subprocess.run(["git", "-C", str(repo), "rm", "-q", path],
                           check=True, capture_output=True)
        else:
            target.write_text(content, encoding="utf-8")
    env = dict(
        os.environ,
        GIT_AUTHOR_NAME=author[0], GIT_AUTHOR_EMAIL=author[1],
        GIT_COMMITTER_NAME=author[0], GIT_COMMITTER_EMAIL=author[1],
        GIT_AUTHOR_DATE=f"{1704067200 + 60 * n[0]} +0000",
        GIT_COMMITTER_DATE=f"{1704067200 + 60 * n[0]} +0000",
    )
    subprocess.run(["git", "-C", str(repo), "add", "-A"], check=True,
                   capture_output=True, env=env)
    subprocess.run(["git", "-C", str(repo), "commit", "-q", "-m", "edit"],
                   check=True, capture_output=True, env=env)
    n[0] += 1


@pytest.fixture
def repo(tmp_path):
    r = tmp_path / "r"
    r.mkdir()
    subprocess.run(["git", "init", "-q", "--initial-branch=master", str(r)],
                   check=True, capture_output=True)
    return r


def _mine_and_attribute(repo):
    records = list(extract_history(repo))
    with SnapshotMaps(repo) as snaps:
        touches = [t for r in records for t in attribute_commit(r, snaps)]
    return records, touches


def test_addition_inside_region_is_variable(repo):
    _commit(repo, {"f.c": "#ifdef X\nint a;\n#endif\n"})
    _commit(repo, {"f.c": "#ifdef X\nint a;\nint b;\n#endif\n"})
    _, touches = _mine_and_attribute(repo)
    assert touches[-1] == TouchRecord(
        "tess@example.com", "f.c", touches[-1].commit_hash, 1, 0
    )


def test_deletion_classified_against_pre_image(repo):
    _commit(repo, {"f.c": "int top;\n#ifdef X\nint a;\n#endif\n"})
    _commit(repo, {"f.c": "#ifdef X\nint a;\n#endif\n"})  # deletes top-level decl
    _, touches = _mine_and_attribute(repo)
    assert (touches[-1].variable_lines, touches[-1].mandatory_lines) == (0, 1)


def test_wrapping_mandatory_lines_counts_directive_additions_as_variable(repo):
    _commit(repo, {"f.c": "int a;\nint b;\n"})
    _commit(repo, {"f.c": "#ifdef Y\nint a;\nint b;\n#endif\n"})
    _, touches = _mine_and_attribute(repo)
    assert (touches[-1].variable_lines, touches[-1].mandatory_lines) == (2, 0)


def test_modification_counts_once_via_addition_side(repo):
    _commit(repo, {"f.c": "#ifdef X\nint a = 1;\n#endif\n"})
    _commit(repo, {"f.c": "#ifdef X\nint a = 2;\n#endif\n"})
    _, touches = _mine_and_attribute(repo)
    assert (touches[-1].variable_lines, touches[-1].mandatory_lines) == (1, 0)


def test_whole_file_deletion_counts_against_pre_image(repo):
    _commit(repo, {"f.c": "#ifdef X\nint a;\n#endif\nint tail;\n"})
    _commit(repo, {"f.c": None})
    _, touches = _mine_and_attribute(repo)
    assert (touches[-1].variable_lines, touches[-1].mandatory_lines) == (3, 1)


def test_ledger_first_author_and_contributor_sets(repo):
    _commit(repo, {"f.c": "int a;\nint b;\nint c;\n"}, author=("A", "a@x"))
    _commit(repo, {"f.c": "int a;\nint b;\nint c;\n#ifdef F\nint d;\n#endif\n"},
            author=("B", "b@x"))
    records, touches = _mine_and_attribute(repo)
    ledger = build_ledger(touches, records)
    stats = ledger.file_stats("f.c")
    assert stats.first_author == "a@x"
    assert stats.total_commits == 2
    assert stats.changed_by == {"a@x", "b@x"}
    assert stats.variable_contributors == {"b@x"}
    a = ledger.contributors("f.c")["a@x"]
    assert (a.variable_touches, a.mandatory_touches, a.first_author) == (0, 3, True)
    b = ledger.contributors("f.c")["b@x"]
    assert (b.variable_touches, b.mandatory_touches, b.first_author) == (3, 0, False)


def test_ledger_commit_counts_sum_to_total(repo):
    for i in range(5):
        _commit(repo, {"f.c": f"int a = {i};\n"})
    records, touches = _mine_and_attribute(repo)
    ledger = build_ledger(touches, records)
    entry = ledger.contributors("f.c")["tess@example.com"]
    assert entry.commit_count == 5 == ledger.file_stats("f.c").total_commits


def test_rename_preserves_identity(repo):
    _commit(repo, {"old.c": "#ifdef X\nint a;\n#endif\n" + "int pad;\n" * 10},
            author=("A", "a@x"))
    subprocess.run(["git", "-C", str(repo), "mv", "old.c", "new.c"],
                   check=True, capture_output=True)
    _commit(repo, {}, author=("B", "b@x"))
    records, touches = _mine_and_attribute(repo)
    ledger = build_ledger(touches, records)
    assert ledger.paths() == ["new.c"]
    stats = ledger.file_stats("new.c")
    assert stats.first_author == "a@x"
    assert stats.total_commits == 2
    assert ledger.contributors("new.c")["b@x"].commit_count == 1


def test_ledger_is_pure_fold(repo):
    _commit(repo, {"f.c": "#ifdef X\nint a;\n#endif\n"})
    _commit(repo, {"f.c": "#ifdef X\nint a;\nint b;\n#endif\n"})
    records, touches = _mine_and_attribute(repo)
    l1 = build_ledger(touches, records)
    l2 = build_ledger(list(touches), list(records))
    assert l1.paths() == l2.paths()
    for p in l1.paths():
        assert l1.contributors(p) == l2.contributors(p)


def test_inconsistent_streams_detected(repo):
    _commit(repo, {"f.c": "int a;\n"})
    records, touches = _mine_and_attribute(repo)
    bogus = TouchRecord("x@x", "f.c", "0" * 40, 1, 0)
    with pytest.raises(InconsistentStreams):
        build_ledger(touches + [bogus], records)


def test_historical_ledger_at_commit_of_interest(repo):
    from varmine.attribution import ledger_up_to

    _commit(repo, {"f.c": "int a;\n"}, author=("A", "a@x"))
    _commit(repo, {"f.c": "int a;\nint b;\n"}, author=("B", "b@x"))
    _commit(repo, {"f.c": "int a;\nint b;\nint c;\n"}, author=("B", "b@x"))
    records, touches = _mine_and_attribute(repo)

    mid = ledger_up_to(touches, records, records[1].commit_hash)
    assert mid.file_stats("f.c").total_commits == 2
    assert mid.contributors("f.c")["b@x"].commit_count == 1

    head = build_ledger(touches, records)
    assert head.file_stats("f.c").total_commits == 3

    with pytest.raises(InconsistentStreams):
        ledger_up_to(touches, records, "f" * 40)


def test_variable_contributor_sets_match_touch_predicate(repo):
    _commit(repo, {"f.c": "#ifdef X\nint a;\n#endif\nint m;\n"}, author=("A", "a@x"))
    _commit(repo, {"f.c": "#ifdef X\nint a;\n#endif\nint m;\nint m2;\n"}, author=("B", "b@x"))
    records, touches = _mine_and_attribute(repo)
    ledger = build_ledger(touches, records)
    for path in ledger.paths():
        expected = {
            t.developer_key for t in touches if t.path == path and t.variable_lines >= 1
        }
        assert ledger.variable_contributors(path) == expected


def test_alpha_fixture_ledger_matches_hand_enumeration(fixture_corpus):
    records = list(extract_history(fixture_corpus / "alpha"))
    with SnapshotMaps(fixture_corpus / "alpha") as snaps:
        touches = [t for r in records for t in attribute_commit(r, snaps)]
    ledger = build_ledger(touches, records)
    expected = fold_steps(ALPHA_STEPS)

    assert sorted(expected.files) == ledger.paths()
    for path, exp_file in expected.files.items():
        stats = ledger.file_stats(path)
        assert stats.total_commits == exp_file.total_commits
        assert stats.changed_by == exp_file.changed_by
        assert stats.variable_contributors == exp_file.variable_contributors
        assert stats.first_author == exp_file.first_author
        per_dev = ledger.contributors(path)
        assert set(per_dev) == set(exp_file.per_dev)
        for dev, exp_entry in exp_file.per_dev.items():
            entry = per_dev[dev]
            assert entry.commit_count == exp_entry["commit_count"]
            assert entry.variable_touches == exp_entry["variable"]
            assert entry.mandatory_touches == exp_entry["mandatory"]
            assert entry.first_author == exp_entry["fa"]


def test_ledger_ndjson_round_trip(tmp_path, repo):
    _commit(repo, {"f.c": "#ifdef X\nint a;\n#endif\n"})
    records, touches = _mine_and_attribute(repo)
    ledger = build_ledger(touches, records)
    ledger.write_ndjson(tmp_path / "ledger.ndjson", tmp_path / "files.ndjson")
    import json

    rows = [json.loads(l) for l in (tmp_path / "ledger.ndjson").read_text().splitlines()]
    assert rows == [
        {
            "developer_key": "tess@example.com",
            "path": "f.c",
            "variable_touches": 3,
            "mandatory_touches": 0,
            "commit_count": 1,
            "first_author": True,
        }
    ]
    files = [json.loads(l) for l in (tmp_path / "files.ndjson").read_text().splitlines()]
    assert files[0]["variable_contributors"] == ["tess@example.com"]
