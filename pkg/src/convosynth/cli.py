"""Command-line interface: generate, stats, serve, validate-config.

`generate` accepts either a JSON config file, pure flags, or both (flags
override the file).  `build_batch_command` emits a flag-only invocation
that parses back to the identical configuration, which is what the web
UI's batch tab displays for copy-paste.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

from .config import BatchConfig, ConfigError
from .orchestrator import (
    STATUS_PASSED,
    compute_dataset_stats,
    read_manifest,
    run_batch,
    write_stats,
)
from .seeds import CATALOG_DIMENSIONS
from .types import LANGUAGES

PROGRAM = "convosynth"

_GATE_FLAGS = (
    ("min_consistency", "--min-consistency"),
    ("min_coherence", "--min-coherence"),
    ("min_naturalness", "--min-naturalness"),
    ("max_error_rate", "--max-error-rate"),
    ("min_mos", "--min-mos"),
    ("min_speaker_similarity", "--min-speaker-similarity"),
)


def _add_generate_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON batch config file")
    parser.add_argument("--output-dir", type=Path, help="batch output directory")
    parser.add_argument("--samples", type=int, help="number of dialogues to produce")
    parser.add_argument("--parallelism", type=int, help="max dialogues in flight")
    parser.add_argument("--rng-seed", type=int, help="batch random seed")
    parser.add_argument("--language", choices=LANGUAGES, help="dialogue language")
    parser.add_argument(
        "--custom-prompt",
        action="append",
        dest="custom_prompts",
        metavar="TEXT",
        help="custom scenario prompt; repeatable, cycled over samples",
    )
    for dimension in CATALOG_DIMENSIONS:
        parser.add_argument(
            f"--{dimension.replace('_', '-')}",
            dest=f"override_{dimension}",
            metavar="VALUE",
            help=f"fix the {dimension} seed dimension",
        )
    parser.add_argument(
        "--backend-mode", choices=("mock", "live"), help="backend mode override"
    )
    parser.add_argument("--mock-seed", type=int, help="seed for the mock backends")
    parser.add_argument(
        "--mock-latency", type=float, help="per-call mock latency in seconds"
    )
    parser.add_argument("--voice-bank", type=Path, help="voice manifest (TSV/CSV)")
    parser.add_argument("--seed-catalog", type=Path, help="scenario seed catalog JSON")
    parser.add_argument("--target-sample-rate", type=int, help="assembly sample rate in Hz")
    parser.add_argument("--shortlist-size", type=int, help="voice shortlist size")
    for _, flag in _GATE_FLAGS:
        parser.add_argument(flag, type=float, help="quality gate threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROGRAM, description="Synthetic speech-dialogue dataset pipeline"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    generate = subparsers.add_parser("generate", help="run a production batch")
    _add_generate_arguments(generate)

    stats = subparsers.add_parser("stats", help="dataset statistics from a manifest")
    stats.add_argument("manifest", type=Path, help="path to manifest.jsonl")
    stats.add_argument("--format", choices=("table", "json"), default="table")
    stats.add_argument(
        "--statuses",
        default=STATUS_PASSED,
        help="comma-separated statuses to include (default: passed)",
    )

    serve = subparsers.add_parser("serve", help="run the inspection HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8321)
    serve.add_argument("--config", type=Path, help="JSON config file for backends")

    validate = subparsers.add_parser("validate-config", help="check a config file")
    validate.add_argument("config", type=Path)

    return parser


def config_from_args(args: argparse.Namespace) -> BatchConfig:
    """Merge config file (if given) with flag overrides into a BatchConfig."""

    if args.config is not None:
        base = BatchConfig.from_file(args.config)
        data = base.to_dict()
    else:
        data = BatchConfig(output_dir=Path(".")).to_dict()
        data["output_dir"] = None

    if args.output_dir is not None:
        data["output_dir"] = str(args.output_dir)
    if args.samples is not None:
        data["sample_count"] = args.samples
    if args.parallelism is not None:
        data["parallelism"] = args.parallelism
    if args.rng_seed is not None:
        data["rng_seed"] = args.rng_seed
    if args.language is not None:
        data["language"] = args.language
    if args.custom_prompts:
        data["custom_prompts"] = list(args.custom_prompts)
    for dimension in CATALOG_DIMENSIONS:
        value = getattr(args, f"override_{dimension}")
        if value is not None:
            data["seed_overrides"][dimension] = value
    if args.backend_mode is not None:
        data["backends"]["mode"] = args.backend_mode
    if args.mock_seed is not None:
        data["backends"]["mock_seed"] = args.mock_seed
    if args.mock_latency is not None:
        data["backends"]["mock_latency_seconds"] = args.mock_latency
    if args.voice_bank is not None:
        data["voice_bank"] = str(args.voice_bank)
    if args.seed_catalog is not None:
        data["seed_catalog"] = str(args.seed_catalog)
    if args.target_sample_rate is not None:
        data["target_sample_rate"] = args.target_sample_rate
    if args.shortlist_size is not None:
        data["shortlist_size"] = args.shortlist_size
    for name, _ in _GATE_FLAGS:
        value = getattr(args, name)
        if value is not None:
            data["gates"][name] = value

    if not data.get("output_dir"):
        raise ConfigError(["output_dir is required (set --output-dir or the config file)"])
    return BatchConfig.from_dict(data)


def parse_generate_args(argv: Sequence[str]) -> BatchConfig:
    """Parse `generate` flags (without the program/subcommand prefix)."""

    parser = argparse.ArgumentParser(prog=f"{PROGRAM} generate", exit_on_error=False)
    _add_generate_arguments(parser)
    try:
        args = parser.parse_args(list(argv))
    except (argparse.ArgumentError, SystemExit) as exc:
        raise ValueError(f"unparseable generate arguments: {exc}") from exc
    return config_from_args(args)


def build_batch_command(form: Mapping[str, Any]) -> str:
    """Emit the exact CLI invocation reproducing a batch form.

    Parsing the returned string back through `parse_generate_args` yields
    the identical BatchConfig (round-trip property).
    """

    known = {
        "output_dir",
        "samples",
        "parallelism",
        "rng_seed",
        "language",
        "custom_prompts",
        "seed_overrides",
        "backend_mode",
        "mock_seed",
        "mock_latency",
        "voice_bank",
        "seed_catalog",
        "target_sample_rate",
        "shortlist_size",
        "gates",
    }
    unknown = set(form) - known
    if unknown:
        raise ValueError(f"unknown batch form fields: {sorted(unknown)}")
    if not str(form.get("output_dir", "")).strip():
        raise ValueError("output_dir is required")
    language = form.get("language")
    if language is not None and language not in LANGUAGES:
        raise ValueError(f"language must be one of {LANGUAGES}")

    parts: list[str] = [PROGRAM, "generate", "--output-dir", str(form["output_dir"])]

    def add(flag: str, value: Any) -> None:
        parts.extend([flag, str(value)])

    if "samples" in form:
        add("--samples", int(form["samples"]))
    if "parallelism" in form:
        add("--parallelism", int(form["parallelism"]))
    if "rng_seed" in form:
        add("--rng-seed", int(form["rng_seed"]))
    if language is not None:
        add("--language", language)
    for prompt in form.get("custom_prompts", ()) or ():
        if not str(prompt).strip():
            raise ValueError("custom prompts must be non-empty")
        add("--custom-prompt", prompt)
    overrides = form.get("seed_overrides", {}) or {}
    for dimension, value in overrides.items():
        if dimension not in CATALOG_DIMENSIONS:
            raise ValueError(f"unknown seed dimension {dimension!r}")
        add(f"--{dimension.replace('_', '-')}", value)
    if "backend_mode" in form:
        if form["backend_mode"] not in ("mock", "live"):
            raise ValueError("backend_mode must be 'mock' or 'live'")
        add("--backend-mode", form["backend_mode"])
    if "mock_seed" in form:
        add("--mock-seed", int(form["mock_seed"]))
    if "mock_latency" in form:
        add("--mock-latency", float(form["mock_latency"]))
    if "voice_bank" in form:
        add("--voice-bank", form["voice_bank"])
    if "seed_catalog" in form:
        add("--seed-catalog", form["seed_catalog"])
    if "target_sample_rate" in form:
        add("--target-sample-rate", int(form["target_sample_rate"]))
    if "shortlist_size" in form:
        add("--shortlist-size", int(form["shortlist_size"]))
    gates = form.get("gates", {}) or {}
    flag_by_name = dict(_GATE_FLAGS)
    for name, value in gates.items():
        if name not in flag_by_name:
            raise ValueError(f"unknown gate threshold {name!r}")
        add(flag_by_name[name], float(value))
    return shlex.join(parts)


def parse_batch_command(command: str) -> BatchConfig:
    """Parse a command string produced by `build_batch_command`."""

    tokens = shlex.split(command)
    if tokens[:2] != [PROGRAM, "generate"]:
        raise ValueError(f"expected a '{PROGRAM} generate' command")
    return parse_generate_args(tokens[2:])


def _print_summary(records) -> None:
    counts: dict[str, int] = {}
    for record in records:
        counts[record.status] = counts.get(record.status, 0) + 1
    print("status counts:")
    for status in sorted(counts):
        print(f"  {status:16s} {counts[status]}")
    passed = [r for r in records if r.status == STATUS_PASSED]
    if passed:
        def mean(key: str) -> float:
            values = [r.quality.get(key) for r in passed if r.quality.get(key) is not None]
            return sum(values) / len(values) if values else float("nan")

        print("mean scores over passed dialogues:")
        for key in ("consistency", "coherence", "naturalness", "mos", "error_rate"):
            print(f"  {key:16s} {mean(key):.3f}")


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        config = config_from_args(args)
        records = run_batch(config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    _print_summary(records)
    passed = [r for r in records if r.status == STATUS_PASSED]
    if passed:
        stats = compute_dataset_stats(records)
        stats_path = write_stats(config.output_dir, stats)
        print(f"stats written to {stats_path}")
    print(f"manifest: {Path(config.output_dir) / 'manifest.jsonl'}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    records, corrupt = read_manifest(args.manifest)
    if corrupt:
        print(f"warning: {len(corrupt)} corrupt manifest lines ignored", file=sys.stderr)
    statuses = tuple(s.strip() for s in args.statuses.split(",") if s.strip())
    try:
        stats = compute_dataset_stats(records, statuses=statuses)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = stats.to_dict()
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        width = max(len(k) for k in payload)
        for key, value in payload.items():
            print(f"{key:<{width}}  {value}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    service_config = (
        ServiceConfig.from_file(args.config) if args.config else ServiceConfig()
    )
    app = create_app(service_config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_validate_config(args: argparse.Namespace) -> int:
    try:
        config = BatchConfig.from_file(args.config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    problems = config.validate()
    if problems:
        for problem in problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    print(f"config ok (digest {config.digest()[:12]})")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate":
        return cmd_generate(args)
    if args.command == "stats":
        return cmd_stats(args)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "validate-config":
        return cmd_validate_config(args)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
