"""Command line entry point for carnotgg."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .algebra import load_preset, preset_names
from .config import settings
from .domains import describe_domain, domain_names
from .errors import CarnotError, ConfigError, PresetNotFoundError
from .fields import describe_field, field_names
from .models import ScenarioKind
from .mollify import PROFILES
from .output import CsvReportWriter, JsonReportWriter, PrintReportWriter
from .runner import ScenarioRunner
from .scenario import load_config
from .utils.logging_utils import get_logger

logger = get_logger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _list_presets() -> List[str]:
    lines = ["groups:"]
    for name in preset_names():
        algebra = load_preset(name)
        lines.append(f"  {name:<14} layer_dims={list(algebra.layer_dims)} Q={algebra.hom_dimension}")
    lines.append("domains:")
    lines.extend(f"  {describe_domain(name)['name']:<22} {describe_domain(name)['description']}" for name in domain_names())
    lines.append("fields:")
    for name in field_names():
        info = describe_field(name)
        lines.append(f"  {name:<22} [{info['kind']}] {info['description']}")
    lines.append("mollifier profiles: " + ", ".join(sorted(PROFILES)))
    lines.append("scenario kinds: " + ", ".join(kind.value for kind in ScenarioKind))
    return lines


def describe(name: str) -> List[str]:
    """Human-readable description of a group, domain or field preset."""
    if name in preset_names():
        info = load_preset(name).describe()
        lines = [
            f"{info['name']}: step {info['step']}, layer_dims {info['layer_dims']}, m = {info['m']}, q = {info['q']}, Q = {info['Q']}",
            "coordinates: " + ", ".join(info["coordinates"]),
            "brackets:",
        ]
        lines.extend(f"  {line}" for line in info["brackets"])
        lines.append("frame:")
        lines.extend(f"  X{j + 1} = {row}" for j, row in enumerate(info["frame"]))
        return lines
    if name in domain_names():
        info = describe_domain(name)
        return [f"domain {info['name']}: {info['description']}"]
    if name in field_names():
        info = describe_field(name)
        return [f"{info['kind']} field {info['name']}: {info['description']}"]
    raise PresetNotFoundError(f"unknown preset '{name}'", path="describe")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser("carnotgg", description="Verify calculus identities on Carnot groups.")
    parser.add_argument("--config", default=None, help="Scenario configuration (YAML). Defaults to the shipped one.")
    parser.add_argument("--suite", default="smoke", help="Suite name (smoke, full) or a single scenario name.")
    parser.add_argument("--out", default=None, help="Output directory for the CSV and JSON reports.")
    parser.add_argument("--seed", type=int, default=None, help="Root seed; overrides the configuration.")
    parser.add_argument("--threads", type=int, default=None, help="Scenario-parallel workers (falls back to CGG_THREADS).")
    parser.add_argument("--list-presets", action="store_true", help="List groups, domains, fields and exit.")
    parser.add_argument("--describe", metavar="NAME", default=None, help="Describe one preset and exit.")
    parser.add_argument("--quiet", action="store_true", help="Do not print the report table.")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        if args.list_presets:
            print("\n".join(_list_presets()))
            return EXIT_PASS
        if args.describe:
            print("\n".join(describe(args.describe)))
            return EXIT_PASS
        if args.threads is not None and args.threads < 1:
            raise ConfigError("must be >= 1", path="--threads")

        config = load_config(args.config, seed=args.seed)
        scenarios = config.select(args.suite)
        threads = args.threads or config.threads or settings.threads
        out_dir = Path(args.out or config.output_dir)

        reports = ScenarioRunner(threads=threads).run_all(scenarios)

        resolved = dict(config.raw)
        resolved["scenarios"] = [s.raw for s in scenarios]
        resolved["suites"] = {args.suite: [s.name for s in scenarios]}
        CsvReportWriter(str(out_dir / config.csv_name)).write(reports, resolved)
        JsonReportWriter(str(out_dir / config.tree_name)).write(reports, resolved)
        if not args.quiet:
            PrintReportWriter().write(reports)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CarnotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    failed = [r.scenario for r in reports if not r.passed]
    if failed:
        logger.warning("%d report(s) failed: %s", len(failed), ", ".join(failed))
        return EXIT_FAIL
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
