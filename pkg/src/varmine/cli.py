"""Command-line interface.

    varmine analyze --config corpus.yaml --out results/
    varmine screen --in results/
    varmine fixtures generate --out fixtures/
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import VarmineError
from .fixtures import build_fixture_corpus
from .pipeline import emit_reports, run_pipeline, screen_corpus
from .variability import GuardPolicy


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varmine",
        description="Mine git histories of C/C++ preprocessor-based systems: "
        "variable vs. mandatory code engagement, expertise metrics, and "
        "workload concentration.",
    )
    parser.add_argument("--version", action="version", version=f"varmine {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run the full pipeline over a corpus")
    analyze.add_argument("--config", required=True, help="corpus config (YAML or JSON)")
    analyze.add_argument("--out", required=True, help="output directory")
    analyze.add_argument(
        "--format",
        default="json,csv",
        help="comma-separated output formats (json, csv)",
    )
    analyze.add_argument("--jobs", type=int, default=None,
                         help="parallel project workers (default: logical cores)")
    analyze.add_argument("--guard-policy", choices=["include", "exclude"], default=None,
                         help="count include guards as variable code or not")
    analyze.add_argument("--aggregation", choices=["micro", "macro"], default=None,
                         help="precision/recall pooling for the summary")
    analyze.add_argument("--no-cache", action="store_true",
                         help="ignore any existing history cache")
    analyze.add_argument("--no-plots", action="store_true",
                         help="skip figure rendering")

    screen = sub.add_parser("screen", help="apply corpus inclusion criteria to reports")
    screen.add_argument("--in", dest="in_dir", required=True,
                        help="directory containing <project>/report.json files")
    screen.add_argument("--min-developers", type=int, default=30)
    screen.add_argument("--min-constants", type=int, default=50)

    fixtures = sub.add_parser("fixtures", help="synthetic test repositories")
    fixtures_sub = fixtures.add_subparsers(dest="fixtures_command", required=True)
    generate = fixtures_sub.add_parser("generate", help="build the scripted fixture corpus")
    generate.add_argument("--out", required=True, help="destination directory")
    generate.add_argument("--throughput-commits", type=int, default=0,
                          help="also build a many-commit benchmark repository")
    return parser


def _cmd_analyze(args) -> int:
    config = load_config(args.config)
    if args.guard_policy is not None:
        config.guard_policy = GuardPolicy(
            exclude_include_guards=(args.guard_policy == "exclude"),
            count_if01=config.guard_policy.count_if01,
        )
    if args.aggregation is not None:
        config.aggregation = args.aggregation
    if args.no_plots:
        config.plots = False
    formats = {f.strip() for f in args.format.split(",") if f.strip()}
    unknown = formats - {"json", "csv"}
    if unknown:
        print(f"unknown formats: {', '.join(sorted(unknown))}", file=sys.stderr)
        return 2
    jobs = args.jobs if args.jobs is not None else (os_cpu_count())

    reports = run_pipeline(
        config, out_dir=args.out, jobs=jobs, use_cache=not args.no_cache
    )
    emit_reports(
        reports,
        args.out,
        formats=formats,
        plots=config.plots,
        aggregation=config.aggregation,
    )

    failed = 0
    for report in reports:
        if report.status == "ok":
            print(f"{report.name}: ok ({report.commits} commits, "
                  f"{report.developers} developers)")
        else:
            failed += 1
            print(f"{report.name}: FAILED ({report.error})")
    return 1 if failed else 0


def os_cpu_count() -> int:
    import os

    return os.cpu_count() or 1


def _cmd_screen(args) -> int:
    in_dir = Path(args.in_dir)
    docs = []
    for path in sorted(in_dir.glob("*/report.json")):
        with open(path, encoding="utf-8") as fh:
            docs.append(json.load(fh))
    if not docs:
        print(f"no report.json files under {in_dir}", file=sys.stderr)
        return 2
    result = screen_corpus(
        docs, min_developers=args.min_developers, min_constants=args.min_constants
    )
    print(json.dumps(result, indent=2))
    return 0


def _cmd_fixtures_generate(args) -> int:
    config_path = build_fixture_corpus(args.out, throughput_commits=args.throughput_commits)
    print(f"fixture corpus ready: {config_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "screen":
            return _cmd_screen(args)
        if args.command == "fixtures" and args.fixtures_command == "generate":
            return _cmd_fixtures_generate(args)
    except VarmineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
