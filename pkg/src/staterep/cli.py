"""Command-line entry point: run experiment grids, compare logs, replay records.

Precedence for every setting: command-line flag > config file > built-in
default (the environment's rollout length for episodes). Credentials are read
from environment variables only.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .core import ConfigError, StateRepError
from .encoders.spec import RepresentationSpec
from .evaluation import (
    EpisodeRecord,
    RunConfig,
    bootstrap_mean_diff,
    emit_report,
    read_records,
    replay_record,
    run_experiment,
    scored,
)
from .llm import Backend, Gateway, ModelConfig, mock_policy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("staterep")

EXIT_OK, EXIT_VALIDATION, EXIT_INCIDENT, EXIT_REPLAY = 0, 1, 2, 3

CONDITION_KEYS = ("environment", "granularity", "structure", "grounding", "oracle_flags")
TOP_KEYS = {"run_seed", "episodes", "parallelism", "out", "baseline", "resamples", "model", "conditions"}
MODEL_KEYS = set(ModelConfig.__dataclass_fields__)


def _as_list(value: Any) -> list[Any]:
    return value if isinstance(value, list) else [value]


def _flag_options(value: Any) -> list[list[str]]:
    """oracle_flags: a flat list is one flag set; a list of lists is a grid axis."""
    if value is None or value == []:
        return [[]]
    if isinstance(value, str):
        return [[value]]
    if all(isinstance(v, list) for v in value):
        return value
    return [value]


def expand_conditions(doc: dict[str, Any]) -> list[tuple[str, RepresentationSpec]]:
    entries = doc.get("conditions")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("conditions: at least one [[conditions]] table is required")
    cells = []
    for i, entry in enumerate(entries):
        unknown = set(entry) - set(CONDITION_KEYS)
        if unknown:
            raise ConfigError(f"conditions[{i}]: unknown key(s) {sorted(unknown)}")
        if "environment" not in entry:
            raise ConfigError(f"conditions[{i}].environment is required")
        axes = [
            _as_list(entry["environment"]),
            _as_list(entry.get("granularity", "LongForm")),
            _as_list(entry.get("structure", "NaturalLanguage")),
            _as_list(entry.get("grounding", "TextOnly")),
            _flag_options(entry.get("oracle_flags")),
        ]
        for env, gran, struct, ground, flags in itertools.product(*axes):
            try:
                rep = RepresentationSpec(gran, struct, ground, frozenset(flags))
            except ConfigError as exc:
                raise ConfigError(f"conditions[{i}]: {exc}") from None
            cells.append((env, rep))
    return cells


def build_model(doc: dict[str, Any], mock: str | None) -> ModelConfig:
    raw = dict(doc.get("model", {}))
    unknown = set(raw) - MODEL_KEYS
    if unknown:
        raise ConfigError(f"model: unknown key(s) {sorted(unknown)}")
    if mock:
        raw.update(backend=Backend.MOCK.value, mock_policy=mock, model_name=f"mock:{mock}")
    elif raw.get("backend", Backend.MOCK.value) == Backend.MOCK.value:
        raw.setdefault("model_name", f"mock:{raw.get('mock_policy')}")
    try:
        model = ModelConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"model: {exc}") from None
    if model.backend is Backend.MOCK:
        mock_policy(model.mock_policy)  # unknown policy names fail here
    else:
        model.resolved_endpoint()
    return model


def build_runs(doc: dict[str, Any], args: argparse.Namespace) -> list[RunConfig]:
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    model = build_model(doc, args.mock)
    seeds = [args.seed] if args.seed is not None else _as_list(doc.get("run_seed", 0))
    episodes = args.episodes if args.episodes is not None else doc.get("episodes")
    parallelism = args.parallelism if args.parallelism is not None else doc.get("parallelism", 1)
    runs, seen = [], set()
    for env, rep in expand_conditions(doc):
        for seed in seeds:
            if not isinstance(seed, int) or isinstance(seed, bool):
                raise ConfigError(f"run_seed: {seed!r} is not an integer")
            cfg = RunConfig(env, rep, model, episodes, seed, parallelism)
            key = (cfg.environment, cfg.condition, seed)
            if key in seen:
                raise ConfigError(f"conditions: duplicate cell {cfg.environment}/{cfg.condition} seed {seed}")
            seen.add(key)
            runs.append(cfg)
    return runs


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_config(path: str) -> tuple[dict[str, Any], bytes]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        return tomllib.loads(raw.decode("utf-8")), raw
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from None


def cmd_run(args: argparse.Namespace) -> int:
    try:
        doc, raw = load_config(args.config)
        runs = build_runs(doc, args)
        out = Path(args.out or doc.get("out", "runs"))
        baseline = doc.get("baseline")
        resamples = int(doc.get("resamples", 10_000))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    artifacts: list[Path] = []
    by_env: dict[str, dict[str, list[EpisodeRecord]]] = {}
    incidents = 0
    with Gateway(runs[0].model) as gateway:
        for cfg in runs:
            log_path = out / cfg.environment / cfg.condition / f"run-{cfg.run_seed}.jsonl"
            records = run_experiment(cfg, gateway, log_path)
            artifacts.append(log_path)
            by_env.setdefault(cfg.environment, {}).setdefault(cfg.condition, []).extend(records)
            incidents += sum(r.is_incident for r in records)
            mean = [r.normalized_score for r in scored(records)]
            shown = f"{sum(mean) / len(mean):.3f}" if mean else "n/a"
            print(f"{cfg.environment:22s} {cfg.condition:55s} seed={cfg.run_seed} mean={shown}")

    for env, groups in by_env.items():
        if not any(scored(recs) for recs in groups.values()):
            continue
        usable = {k: v for k, v in groups.items() if scored(v)}
        base = baseline if baseline in usable else None
        artifacts += emit_report(usable, out / env, baseline=base, resamples=resamples, seed=runs[0].run_seed)

    manifest = {
        "config_file": str(args.config),
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "episodes": runs[0].episodes if len({r.episodes for r in runs}) == 1 else None,
        "run_seeds": sorted({r.run_seed for r in runs}),
        "parallelism": runs[0].parallelism,
        "model": {k: v for k, v in runs[0].model.__dict__.items() if k != "backend"}
        | {"backend": runs[0].model.backend.value},
        "cells": [
            {"environment": r.environment, "condition": r.condition, "run_seed": r.run_seed, "episodes": r.episodes}
            for r in runs
        ],
        "incidents": incidents,
        "artifacts": {p.relative_to(out).as_posix(): sha256_file(p) for p in artifacts},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for env in by_env:
        md = out / env / "report.md"
        if md.exists():
            print(f"\n## {env}\n{md.read_text(encoding='utf-8')}")
    if incidents:
        print(f"{incidents} episode(s) aborted by transport/protocol incidents", file=sys.stderr)
        return EXIT_INCIDENT
    return EXIT_OK


def _load_logs(target: str) -> list[EpisodeRecord]:
    path = Path(target)
    files = sorted(path.rglob("*.jsonl")) if path.is_dir() else [path]
    if not files or not all(f.is_file() for f in files):
        raise ConfigError(f"no episode logs found at {target}")
    return [rec for f in files for rec in read_records(f)]


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        recs_a, recs_b = _load_logs(args.log_dir_a), _load_logs(args.log_dir_b)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    envs = {r.environment for r in recs_a} | {r.environment for r in recs_b}
    if len(envs) != 1:
        print(f"refusing to compare logs from different environments: {sorted(envs)}", file=sys.stderr)
        return EXIT_VALIDATION
    a = [r.normalized_score for r in scored(recs_a)]
    b = [r.normalized_score for r in scored(recs_b)]
    if not a or not b:
        print("error: a side has no scored episodes", file=sys.stderr)
        return EXIT_VALIDATION
    result = bootstrap_mean_diff(a, b, resamples=args.resamples, seed=args.seed)
    payload = {**result.__dict__, "stars": result.stars, "environment": envs.pop()}
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(
        f"mean_a={result.mean_a:.4f} mean_b={result.mean_b:.4f} diff={result.mean_diff:+.4f}"
        f" CI=[{result.ci_low:+.4f}, {result.ci_high:+.4f}] significant={result.significant}{result.stars}"
    )
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        records = _load_logs(args.log_file)
    except (ConfigError, OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for rec in records:
        result = replay_record(rec)
        if not result.ok:
            print(
                f"replay MISMATCH: {rec.environment}/{rec.condition} seed {rec.run_seed} "
                f"episode {rec.episode_index}: {result.message}"
            )
            return EXIT_REPLAY
    print(f"replay OK ({len(records)} records)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="staterep", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every cell of an experiment config")
    run.add_argument("--config", required=True, help="TOML experiment file")
    run.add_argument("--mock", metavar="POLICY", help="substitute the scripted backend with this policy")
    run.add_argument("--episodes", type=int, help="episodes per run (default: the environment's rollout)")
    run.add_argument("--seed", type=int, help="run seed (overrides run_seed in the file)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--parallelism", type=int, help="episodes executed concurrently")
    run.set_defaults(func=cmd_run)

    cmp = sub.add_parser("compare", help="bootstrap comparison of two log directories")
    cmp.add_argument("log_dir_a")
    cmp.add_argument("log_dir_b")
    cmp.add_argument("--resamples", type=int, default=10_000)
    cmp.add_argument("--seed", type=int, default=0)
    cmp.add_argument("--out", help="write the result JSON here instead of stdout")
    cmp.set_defaults(func=cmd_compare)

    rep = sub.add_parser("replay", help="re-execute logged actions and verify rewards")
    rep.add_argument("log_file", help="a JSONL log or a directory of them")
    rep.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except StateRepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
