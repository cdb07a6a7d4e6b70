"""Episode orchestration, replayable JSONL logs, and run statistics."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .core import ConfigError, EpisodeSeed, ProtocolError, StateRepError, derive_rng, env_spec, make_env
from .encoders import encode_observation
from .encoders.spec import Granularity, RepresentationSpec
from .encoders.vot import oracle_vot_map
from .envs import family, manual_for
from .llm import Gateway, ModelConfig, TransportError
from .memory import TrajectoryMemory, oracle_summary_hanoi, update_summary
from .prompting import build_agent_prompt, choose_action

log = logging.getLogger(__name__)

INCIDENT = "Incident"


class UndefinedMetricError(StateRepError):
    """A statistic has no defined value for the given records."""


@dataclass(frozen=True)
class RunConfig:
    environment: str
    representation: RepresentationSpec
    model: ModelConfig
    episodes: int | None = None
    run_seed: int = 0
    parallelism: int = 1

    def __post_init__(self) -> None:
        spec = env_spec(self.environment)  # ConfigError for unknown names
        object.__setattr__(self, "environment", spec.name)
        self.representation.validate_for(family(spec.name))
        if self.episodes is None:
            object.__setattr__(self, "episodes", spec.rollout)
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        EpisodeSeed(self.run_seed, 0)  # range check

    @property
    def condition(self) -> str:
        return self.representation.label


@dataclass(frozen=True)
class StepEntry:
    timestep: int
    prompt_hash: str
    encoded_obs: str
    action: int
    reward: float
    input_tokens: int
    output_tokens: int
    agent_calls: int = 1
    fallback_used: bool = False
    reason: str = ""
    summary_text: str | None = None
    summary_input_tokens: int = 0
    summary_output_tokens: int = 0


@dataclass(frozen=True)
class EpisodeRecord:
    environment: str
    condition: str
    run_seed: int
    episode_index: int
    steps: tuple[StepEntry, ...]
    normalized_score: float | None
    termination_cause: str
    representation: dict[str, Any] = field(default_factory=dict)
    model_name: str = ""
    incident: str | None = None
    summary_violations: int = 0
    summary_failures: int = 0

    @property
    def is_incident(self) -> bool:
        return self.incident is not None

    @property
    def seed(self) -> EpisodeSeed:
        return EpisodeSeed(self.run_seed, self.episode_index)

    @property
    def fallback_count(self) -> int:
        return sum(s.fallback_used for s in self.steps)

    def mean_input_tokens(self) -> float:
        """Average agent-prompt input tokens per call; summariser calls excluded."""
        calls = sum(s.agent_calls for s in self.steps)
        if calls == 0:
            raise UndefinedMetricError("episode made no agent calls")
        return sum(s.input_tokens for s in self.steps) / calls

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> EpisodeRecord:
        data = json.loads(line)
        data["steps"] = tuple(StepEntry(**s) for s in data["steps"])
        return cls(**data)


def write_records(records: Iterable[EpisodeRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")
    return path


def read_records(path: str | Path) -> list[EpisodeRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        return [EpisodeRecord.from_json(line) for line in fh if line.strip()]


def run_episode(config: RunConfig, gateway: Gateway, episode_index: int) -> EpisodeRecord:
    rep = config.representation
    seed = EpisodeSeed(config.run_seed, episode_index)
    env = make_env(config.environment)
    spec = env.spec
    fam = family(spec.name)
    observation = env.reset(seed)
    manual = manual_for(env)
    memory = TrajectoryMemory()
    fallback_rng = derive_rng(seed, "fallback")
    steps: list[StepEntry] = []
    encoded = encode_observation(observation, rep)
    incident = None
    try:
        while not env.terminal:
            t = env.timestep
            summary_text = None
            s_in = s_out = 0
            if rep.granularity is Granularity.SUMMARY:
                if rep.oracle_summary:
                    memory.rolling_summary = oracle_summary_hanoi(env.state)
                else:
                    summary_replies: list = []
                    update_summary(memory, manual, gateway, spec.history_window, summary_replies)
                    s_in = sum(r.input_tokens for r in summary_replies)
                    s_out = sum(r.output_tokens for r in summary_replies)
                summary_text = memory.rolling_summary
            bundle = build_agent_prompt(
                rep, manual, encoded, memory, spec.action_labels,
                family=fam, window=spec.history_window,
                oracle_map=oracle_vot_map(env.state) if rep.oracle_vot else None,
            )
            parsed, replies = choose_action(gateway, bundle, fallback_rng)
            outcome = env.step(parsed.action_index)
            steps.append(StepEntry(
                timestep=t,
                prompt_hash=bundle.digest(),
                encoded_obs=encoded.text,
                action=parsed.action_index,
                reward=outcome.reward,
                input_tokens=sum(r.input_tokens for r in replies),
                output_tokens=sum(r.output_tokens for r in replies),
                agent_calls=len(replies),
                fallback_used=parsed.fallback_used,
                reason=parsed.reason,
                summary_text=summary_text,
                summary_input_tokens=s_in,
                summary_output_tokens=s_out,
            ))
            encoded = encode_observation(outcome.observation, rep)
            memory.append(t, encoded.text, spec.action_labels[parsed.action_index - 1], outcome.reward)
    except (TransportError, ProtocolError) as exc:
        incident = f"{type(exc).__name__}: {exc}"
        log.error("episode %d aborted: %s", episode_index, incident)
    return EpisodeRecord(
        environment=spec.name,
        condition=config.condition,
        run_seed=config.run_seed,
        episode_index=episode_index,
        steps=tuple(steps),
        normalized_score=None if incident else env.normalized_score(),
        termination_cause=INCIDENT if incident else env.termination_cause.value,
        representation=rep.to_dict(),
        model_name=config.model.model_name,
        incident=incident,
        summary_violations=memory.summary_violations,
        summary_failures=memory.summary_failures,
    )


def run_experiment(
    config: RunConfig, gateway: Gateway | None = None, log_path: str | Path | None = None
) -> list[EpisodeRecord]:
    """Run every episode of one condition; records come back in episode order."""
    owned = gateway is None
    gw = gateway or Gateway(config.model)
    try:
        indices = range(config.episodes)
        if config.parallelism == 1:
            records = [run_episode(config, gw, i) for i in indices]
        else:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                records = list(pool.map(lambda i: run_episode(config, gw, i), indices))
    finally:
        if owned:
            gw.close()
    if log_path is not None:
        write_records(records, log_path)
    return records


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    divergent_step: int | None = None
    message: str = "replay OK"


def replay_record(record: EpisodeRecord) -> ReplayResult:
    """Re-execute the logged actions in a fresh, identically seeded environment."""
    env = make_env(record.environment)
    env.reset(record.seed)
    for entry in record.steps:
        if env.terminal:
            return ReplayResult(False, entry.timestep, f"step {entry.timestep}: environment already terminal")
        if entry.timestep != env.timestep:
            return ReplayResult(False, entry.timestep, f"step {entry.timestep}: logged timestep, env is at {env.timestep}")
        outcome = env.step(entry.action)
        if outcome.reward != entry.reward:
            return ReplayResult(
                False, entry.timestep,
                f"step {entry.timestep}: reward logged {entry.reward!r}, replayed {outcome.reward!r}",
            )
    if record.is_incident:
        if env.terminal:
            return ReplayResult(False, None, "incident record, but the replayed episode terminated")
        return ReplayResult(True)
    cause = env.termination_cause.value if env.termination_cause else "None"
    if cause != record.termination_cause:
        return ReplayResult(False, None, f"termination logged {record.termination_cause}, replayed {cause}")
    if env.normalized_score() != record.normalized_score:
        return ReplayResult(
            False, None, f"score logged {record.normalized_score!r}, replayed {env.normalized_score()!r}"
        )
    return ReplayResult(True)


def scored(records: Iterable[EpisodeRecord]) -> list[EpisodeRecord]:
    return [r for r in records if not r.is_incident]


def _mean(values: Sequence[float]) -> float:
    # fsum is exactly rounded, so the result ignores record order
    return math.fsum(values) / len(values)


def _sd(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    m = _mean(values)
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / (len(values) - 1))


def score_per_kilo_token(records: Iterable[EpisodeRecord]) -> float:
    """mean(normalized score) / mean(per-episode agent input tokens) x 1000."""
    recs = scored(records)
    if not recs:
        raise UndefinedMetricError("no scored episodes")
    tokens = _mean([r.mean_input_tokens() for r in recs])
    if tokens == 0:
        raise UndefinedMetricError("mean input tokens is zero")
    return _mean([r.normalized_score for r in recs]) / tokens * 1000


@dataclass(frozen=True)
class ComparisonResult:
    mean_a: float
    mean_b: float
    sd_a: float
    sd_b: float
    mean_diff: float
    ci_low: float
    ci_high: float
    significant: bool
    resamples: int
    level: float = 0.95

    @property
    def stars(self) -> str:
        return "*" if self.significant else ""


def _bootstrap_means(sample: np.ndarray, resamples: int, rng: np.random.Generator) -> np.ndarray:
    n = len(sample)
    rows = max(1, 2_000_000 // n)
    out = np.empty(resamples)
    for start in range(0, resamples, rows):
        stop = min(resamples, start + rows)
        out[start:stop] = sample[rng.integers(0, n, size=(stop - start, n))].mean(axis=1)
    return out


def bootstrap_mean_diff(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    resamples: int = 10_000,
    level: float = 0.95,
    seed: int = 0,
) -> ComparisonResult:
    """Percentile bootstrap CI for mean(a) - mean(b), groups resampled independently.

    Samples are sorted and the two groups drawn in a canonical order, so
    permuting inputs changes nothing and swapping a/b exactly negates the
    difference and mirrors the interval.
    """
    a = np.sort(np.asarray(scores_a, dtype=float))
    b = np.sort(np.asarray(scores_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    if resamples < 1 or not 0 < level < 1:
        raise ValueError("resamples must be >= 1 and level in (0, 1)")
    digest = hashlib.sha256(f"bootstrap:{seed}".encode()).digest()
    rng = np.random.Generator(np.random.Philox(key=int.from_bytes(digest[:16], "little")))
    a_first = (a.size, a.tobytes()) <= (b.size, b.tobytes())
    first, second = (a, b) if a_first else (b, a)
    m_first = _bootstrap_means(first, resamples, rng)
    m_second = _bootstrap_means(second, resamples, rng)
    m_a, m_b = (m_first, m_second) if a_first else (m_second, m_first)
    diffs = np.sort(m_a - m_b)
    k = int(math.floor((1 - level) / 2 * resamples + 1e-9))
    lo, hi = float(diffs[k]), float(diffs[resamples - 1 - k])
    mean_a, mean_b = _mean(a.tolist()), _mean(b.tolist())
    return ComparisonResult(
        mean_a=mean_a,
        mean_b=mean_b,
        sd_a=_sd(a.tolist()),
        sd_b=_sd(b.tolist()),
        mean_diff=mean_a - mean_b,
        ci_low=lo,
        ci_high=hi,
        significant=not (lo <= 0.0 <= hi),
        resamples=resamples,
        level=level,
    )


@dataclass(frozen=True)
class ConditionSummary:
    condition: str
    environment: str
    episodes: int
    incidents: int
    mean: float
    sd_episodes: float
    runs: int
    sd_runs: float | None
    score_per_kilo_token: float | None
    fallback_rate: float
    summary_violations: int
    comparison: ComparisonResult | None = None


def fallback_rate(records: Iterable[EpisodeRecord]) -> float:
    recs = list(records)
    decisions = sum(len(r.steps) for r in recs)
    if decisions == 0:
        return 0.0
    return sum(r.fallback_count for r in recs) / decisions


def summarize_condition(name: str, records: Sequence[EpisodeRecord]) -> ConditionSummary:
    recs = scored(records)
    if not recs:
        raise UndefinedMetricError(f"condition {name!r} has no scored episodes")
    scores = [r.normalized_score for r in recs]
    by_run: dict[int, list[float]] = {}
    for r in recs:
        by_run.setdefault(r.run_seed, []).append(r.normalized_score)
    run_means = [_mean(v) for v in by_run.values()]
    try:
        per_token = score_per_kilo_token(recs)
    except UndefinedMetricError:
        per_token = None
    return ConditionSummary(
        condition=name,
        environment=recs[0].environment,
        episodes=len(recs),
        incidents=len(records) - len(recs),
        mean=_mean(scores),
        sd_episodes=_sd(scores),
        runs=len(run_means),
        sd_runs=_sd(run_means) if len(run_means) > 1 else None,
        score_per_kilo_token=per_token,
        fallback_rate=fallback_rate(records),
        summary_violations=sum(r.summary_violations for r in records),
    )


def _fmt(value: float | None, digits: int = 3) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


CSV_FIELDS = [
    "condition", "environment", "episodes", "incidents", "mean", "sd_episodes", "runs", "sd_runs",
    "score_per_kilo_token", "fallback_rate", "summary_violations",
    "mean_diff", "ci_low", "ci_high", "significant",
]


def emit_report(
    groups: dict[str, Sequence[EpisodeRecord]],
    out_dir: str | Path,
    baseline: str | None = None,
    resamples: int = 10_000,
    seed: int = 0,
) -> list[Path]:
    """Write report.csv and report.md; comparisons are against `baseline` (default: first group)."""
    if not groups:
        raise ValueError("at least one condition group is required")
    baseline = baseline or next(iter(groups))
    if baseline not in groups:
        raise ConfigError(f"baseline condition {baseline!r} not among {sorted(groups)}")
    base_scores = [r.normalized_score for r in scored(groups[baseline])]
    summaries = []
    for name, records in groups.items():
        summary = summarize_condition(name, records)
        if name != baseline:
            scores = [r.normalized_score for r in scored(records)]
            cmp = bootstrap_mean_diff(scores, base_scores, resamples=resamples, seed=seed)
            summary = ConditionSummary(**{**summary.__dict__, "comparison": cmp})
        summaries.append(summary)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, md_path = out / "report.csv", out / "report.md"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for s in summaries:
            c = s.comparison
            writer.writerow({
                "condition": s.condition,
                "environment": s.environment,
                "episodes": s.episodes,
                "incidents": s.incidents,
                "mean": repr(s.mean),
                "sd_episodes": repr(s.sd_episodes),
                "runs": s.runs,
                "sd_runs": "" if s.sd_runs is None else repr(s.sd_runs),
                "score_per_kilo_token": "" if s.score_per_kilo_token is None else repr(s.score_per_kilo_token),
                "fallback_rate": repr(s.fallback_rate),
                "summary_violations": s.summary_violations,
                "mean_diff": "" if c is None else repr(c.mean_diff),
                "ci_low": "" if c is None else repr(c.ci_low),
                "ci_high": "" if c is None else repr(c.ci_high),
                "significant": "" if c is None else str(c.significant).lower(),
            })

    lines = [
        f"Baseline: {baseline}",
        "",
        "| Condition | Env | Episodes | Mean ± SD (episodes) | SD (runs) | Score/kTok | Diff vs baseline [95% CI] | Fallback rate |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for s in summaries:
        c = s.comparison
        diff = "baseline" if c is None else f"{c.mean_diff:+.3f} [{c.ci_low:+.3f}, {c.ci_high:+.3f}]{c.stars}"
        lines.append(
            f"| {s.condition}{c.stars if c else ''} | {s.environment} | {s.episodes} | "
            f"{s.mean:.3f} ± {s.sd_episodes:.3f} | {_fmt(s.sd_runs)} | {_fmt(s.score_per_kilo_token, 4)} | "
            f"{diff} | {s.fallback_rate:.3f} |"
        )
    lines += ["", "\\* significant: the bootstrap CI of the difference excludes 0."]
    incidents = [(n, r) for n, recs in groups.items() for r in recs if r.is_incident]
    if incidents:
        lines += ["", "Incidents (excluded from all statistics):"]
        lines += [f"- {n}: episode {r.episode_index} (run seed {r.run_seed}): {r.incident}" for n, r in incidents]
    md_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [csv_path, md_path]
