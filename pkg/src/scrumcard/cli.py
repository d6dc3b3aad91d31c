"""Command-line entry point: ``scrumcard validate|assess|generate``.

Exit codes: 0 success, 1 validation errors, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import List, Optional

from . import __version__
from .compliance import IncompleteEvidenceError, assess
from .domain import ProjectConfig
from .ingest import (
    FORMATS, ParseError, export_report, load_config_file, load_dataset, serialize_dataset,
    validate,
)
from .render import render_card, render_summary
from .synth import SCENARIOS, ScenarioSpec, SpecError, generate

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def write_atomic(path: Path, data: bytes) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_set(items: List[str]) -> dict:
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep:
            raise _UsageError(f"--set expects key=value, got {item!r}")
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def _say(args, text: str, err: bool = False) -> None:
    if err:
        print(text, file=sys.stderr)
    elif not args.quiet:
        print(text)


def cmd_validate(args) -> int:
    code = EXIT_OK
    for raw in args.paths:
        path = Path(raw)
        if not path.exists():
            _say(args, f"{path}: cannot read: no such file or directory", err=True)
            code = max(code, EXIT_IO)
            continue
        warnings = []
        try:
            ds = load_dataset(path, args.format, warnings=warnings)
        except OSError as exc:
            _say(args, f"{path}: cannot read: {exc}", err=True)
            code = max(code, EXIT_IO)
            continue
        except (ParseError, ValueError) as exc:
            _say(args, f"{path}: error: {exc}")
            code = max(code, EXIT_INVALID)
            continue
        report = validate(ds)
        for issue in warnings + report.errors:
            _say(args, f"{path}: {issue}")
        if report.accepted:
            _say(args, f"{path}: OK")
        else:
            code = max(code, EXIT_INVALID)
    return code


def _effective_config(ds_config: ProjectConfig, file_values: dict, cli_values: dict) -> ProjectConfig:
    merged = ds_config.to_dict()
    merged.update(file_values)
    merged.update(cli_values)
    return ProjectConfig.from_mapping(merged)


def cmd_assess(args) -> int:
    file_values = {}
    if args.config:
        try:
            file_values = load_config_file(args.config)
        except OSError as exc:
            _say(args, f"{args.config}: cannot read: {exc}", err=True)
            return EXIT_IO
        except ValueError as exc:
            _say(args, f"{args.config}: {exc}", err=True)
            return EXIT_USAGE
    cli_values = _parse_set(args.set or [])
    out_dir = Path(args.out_dir)
    code = EXIT_OK
    for raw in args.paths:
        path = Path(raw)
        try:
            ds = load_dataset(path, args.format)
        except OSError as exc:
            _say(args, f"{path}: cannot read: {exc}", err=True)
            code = max(code, EXIT_IO)
            continue
        except (ParseError, ValueError) as exc:
            _say(args, f"{path}: skipped: {exc}")
            code = max(code, EXIT_INVALID)
            continue
        try:
            cfg = _effective_config(ds.config, file_values, cli_values)
        except (KeyError, TypeError, ValueError) as exc:
            _say(args, f"{path}: bad configuration: {exc}", err=True)
            return EXIT_USAGE
        ds = dataclasses.replace(ds, config=cfg)
        report = validate(ds)
        if not report.accepted:
            for issue in report.errors:
                _say(args, f"{path}: {issue}")
            _say(args, f"{path}: skipped: validation failed")
            code = max(code, EXIT_INVALID)
            continue
        try:
            assessment = assess(ds)
        except IncompleteEvidenceError as exc:
            _say(args, f"{path}: skipped: {exc}")
            code = max(code, EXIT_INVALID)
            continue
        outputs = [(f"{ds.team_id}.report.json", export_report(assessment))]
        if args.card:
            outputs.append((f"{ds.team_id}.card.svg", render_card(assessment, ds)))
        if args.summary:
            outputs.append((f"{ds.team_id}.summary.txt", render_summary(assessment).encode()))
        try:
            for name, data in outputs:
                write_atomic(out_dir / name, data)
        except OSError as exc:
            _say(args, f"{path}: cannot write outputs: {exc}", err=True)
            code = max(code, EXIT_IO)
            continue
        _say(args, f"{path}: {ds.team_id} final_grade {assessment.final_grade:.4f} "
                   f"-> {', '.join(n for n, _ in outputs)}")
    return code


def cmd_generate(args) -> int:
    if args.scenario not in SCENARIOS:
        _say(args, f"unknown scenario {args.scenario!r}; valid: {', '.join(SCENARIOS)}", err=True)
        return EXIT_USAGE
    try:
        spec = ScenarioSpec(args.scenario, args.team_size, args.seed)
    except SpecError as exc:
        _say(args, str(exc), err=True)
        return EXIT_USAGE
    data = serialize_dataset(generate(spec))
    try:
        write_atomic(Path(args.out), data)
    except OSError as exc:
        _say(args, f"{args.out}: cannot write: {exc}", err=True)
        return EXIT_IO
    target, description = SCENARIOS[args.scenario]
    _say(args, f"{args.scenario} (target: {target or 'none'}): {description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def globals_parser(default):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--format", choices=FORMATS, default=default,
                            help="input format (default: by extension; directories are CSV bundles)")
        common.add_argument("--quiet", action="store_true", default=default or False,
                            help="only print errors")
        return common

    # Subcommands accept the global flags too without clobbering earlier values.
    common = globals_parser(argparse.SUPPRESS)
    parser = _Parser(prog="scrumcard", description="Scrum process compliance assessment.",
                     parents=[globals_parser(None)])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check dataset files")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("assess", parents=[common], help="assess teams and write outputs")
    p.add_argument("paths", nargs="+")
    p.add_argument("-o", "--out-dir", default=".")
    p.add_argument("--card", action="store_true", help="also write <team>.card.svg")
    p.add_argument("--report", action="store_true",
                   help="write <team>.report.json (always written)")
    p.add_argument("--summary", action="store_true", help="also write <team>.summary.txt")
    p.add_argument("--config", help="JSON file with config overrides")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config value; wins over --config")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic dataset")
    p.add_argument("scenario", help=f"one of: {', '.join(SCENARIOS)}")
    p.add_argument("--team-size", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError:
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
