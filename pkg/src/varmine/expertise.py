"""File-level expertise metrics: degree of authorship and ownership.

Deliveries and acceptances are commit-level counts per (developer,
file): dl is the developer's own commits to the file, ac everyone
else's.  Scores are computed at the head of history over the full
evolution.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import UnknownPath

__all__ = [
    "ExpertiseScore",
    "doa",
    "author_flag",
    "major_flag",
    "doa_scores",
    "ownership_scores",
    "experts_of",
    "write_expertise_csv",
    "DOA_BASE",
    "DOA_N_THRESHOLD",
    "OWNERSHIP_THRESHOLD_PCT",
]

DOA_BASE = 3.293
_FA_WEIGHT = 1.098
_DL_WEIGHT = 0.164
_AC_WEIGHT = 0.321
DOA_N_THRESHOLD = 0.75
OWNERSHIP_THRESHOLD_PCT = 5.0


@dataclass(frozen=True)
class ExpertiseScore:
    developer_key: str
    path: str
    fa: int
    dl: int
    ac: int
    doa: float
    doa_n: float
    ownership_pct: float
    is_author: bool
    is_major: bool


def doa(fa: int, dl: int, ac: int) -> float:
    """3.293 + 1.098*FA + 0.164*DL - 0.321*ln(1 + AC)."""
    return DOA_BASE + _FA_WEIGHT * fa + _DL_WEIGHT * dl - _AC_WEIGHT * math.log1p(ac)


def author_flag(doa_value: float, doa_n: float) -> bool:
    """Author iff normalized score exceeds 0.75 and the absolute score
    reaches the formula's base value."""
    return bool(doa_n > DOA_N_THRESHOLD and doa_value >= DOA_BASE)


def major_flag(ownership_pct: float) -> bool:
    """Major contributor iff ownership is strictly above 5%."""
    return bool(ownership_pct > OWNERSHIP_THRESHOLD_PCT)


def _scores(ledger, path: str) -> list[ExpertiseScore]:
    if not ledger.has_path(path):
        raise UnknownPath(path)
    per_dev = ledger.contributors(path)
    total_commits = ledger.file_stats(path).total_commits
    if not per_dev or total_commits < 1:
        raise UnknownPath(f"{path} has no contributors")

    raw: dict[str, float] = {}
    for dev in sorted(per_dev):
        entry = per_dev[dev]
        dl = entry.commit_count
        ac = total_commits - dl
        raw[dev] = doa(int(entry.first_author), dl, ac)
    top = max(raw.values())

    out: list[ExpertiseScore] = []
    for dev in sorted(per_dev):
        entry = per_dev[dev]
        dl = entry.commit_count
        ac = total_commits - dl
        value = raw[dev]
        doa_n = value / top if top != 0 else 0.0
        if value == top:
            doa_n = 1.0  # ties all normalize to exactly 1
        ownership = 100.0 * dl / total_commits
        out.append(
            ExpertiseScore(
                developer_key=dev,
                path=path,
                fa=int(entry.first_author),
                dl=dl,
                ac=ac,
                doa=value,
                doa_n=doa_n,
                ownership_pct=ownership,
                is_author=author_flag(value, doa_n),
                is_major=major_flag(ownership),
            )
        )
    return out


def doa_scores(ledger, path: str) -> list[ExpertiseScore]:
    """Degree-of-authorship scores for every contributor of a file.

    The contributors with maximal absolute score get doa_n = 1; author
    flags follow the 0.75 / 3.293 thresholds.
    """
    return _scores(ledger, path)


def ownership_scores(ledger, path: str) -> list[ExpertiseScore]:
    """Ownership percentages (commit share) for every contributor;
    percentages over a file sum to 100."""
    return _scores(ledger, path)


def experts_of(ledger, path: str, metric: str) -> set[str]:
    """authors(f) for metric='doa', majors(f) for metric='ownership'."""
    scores = _scores(ledger, path)
    if metric == "doa":
        return {s.developer_key for s in scores if s.is_author}
    if metric == "ownership":
        return {s.developer_key for s in scores if s.is_major}
    raise ValueError(f"unknown expertise metric {metric!r}")


def write_expertise_csv(ledger, out_path) -> None:
    """Fixed-order CSV of all scores: one row per (path, developer)."""
    out_path = Path(out_path)
    tmp = out_path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["path", "developer_key", "fa", "dl", "ac", "doa", "doa_n",
             "ownership_pct", "is_author", "is_major"]
        )
        for path in ledger.paths():
            for s in _scores(ledger, path):
                writer.writerow(
                    [
                        s.path,
                        s.developer_key,
                        s.fa,
                        s.dl,
                        s.ac,
                        f"{s.doa:.6f}",
                        f"{s.doa_n:.6f}",
                        f"{s.ownership_pct:.6f}",
                        "true" if s.is_author else "false",
                        "true" if s.is_major else "false",
                    ]
                )
    os.replace(tmp, out_path)
