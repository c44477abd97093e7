"""Corpus configuration: one declarative file describes the whole run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .mining import DEFAULT_SOURCE_EXTENSIONS
from .variability import GuardPolicy

__all__ = ["ProjectSpec", "CorpusConfig", "load_config"]


@dataclass(frozen=True)
class ProjectSpec:
    name: str
    repo: str  # local path or clone URL
    branch: str | None = None
    pinned_commit: str | None = None


@dataclass
class CorpusConfig:
    projects: list[ProjectSpec] = field(default_factory=list)
    guard_policy: GuardPolicy = field(default_factory=GuardPolicy)
    source_extensions: frozenset[str] = DEFAULT_SOURCE_EXTENSIONS
    aggregation: str = "micro"
    min_developers: int = 30
    min_constants: int = 50
    gini_basis: str = "lines"  # lines | commits
    plots: bool = True
    cache_dir: str | None = None

    def validate(self) -> None:
        names = [p.name for p in self.projects]
        if len(names) != len(set(names)):
            raise ConfigError("project names must be unique")
        if self.aggregation not in ("micro", "macro"):
            raise ConfigError(f"aggregation must be micro or macro, got {self.aggregation!r}")
        if self.gini_basis not in ("lines", "commits"):
            raise ConfigError(f"gini_basis must be lines or commits, got {self.gini_basis!r}")
        if self.min_developers < 0 or self.min_constants < 0:
            raise ConfigError("screening thresholds must be non-negative")


def load_config(path) -> CorpusConfig:
    """Read a YAML or JSON corpus description."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")

    projects = []
    for entry in data.get("projects", []):
        if "name" not in entry or "repo" not in entry:
            raise ConfigError(f"project entry needs name and repo: {entry}")
        projects.append(
            ProjectSpec(
                name=str(entry["name"]),
                repo=str(entry["repo"]),
                branch=entry.get("branch"),
                pinned_commit=entry.get("pinned_commit"),
            )
        )

    guard = data.get("guard_policy", "exclude")
    if isinstance(guard, str):
        policy = GuardPolicy(exclude_include_guards=(guard != "include"))
    else:
        policy = GuardPolicy(
            exclude_include_guards=bool(guard.get("exclude_include_guards", True)),
            count_if01=bool(guard.get("count_if01", True)),
        )

    exts = data.get("source_extensions")
    extensions = (
        frozenset(e.lower() if e.startswith(".") else f".{e.lower()}" for e in exts)
        if exts
        else DEFAULT_SOURCE_EXTENSIONS
    )

    config = CorpusConfig(
        projects=projects,
        guard_policy=policy,
        source_extensions=extensions,
        aggregation=data.get("aggregation", "micro"),
        min_developers=int(data.get("min_developers", 30)),
        min_constants=int(data.get("min_constants", 50)),
        gini_basis=data.get("gini_basis", "lines"),
        plots=bool(data.get("plots", True)),
        cache_dir=data.get("cache_dir"),
    )
    config.validate()
    return config
