from __future__ import annotations

import csv
import dataclasses
import math
import random

import httpx
import numpy as np
import pytest

from staterep.core import ConfigError
from staterep.encoders import RepresentationSpec
from staterep.evaluation import (
    EpisodeRecord,
    RunConfig,
    StepEntry,
    UndefinedMetricError,
    bootstrap_mean_diff,
    emit_report,
    fallback_rate,
    read_records,
    replay_record,
    run_experiment,
    score_per_kilo_token,
    summarize_condition,
    write_records,
)
from staterep.llm import Gateway, ModelConfig

LONG = RepresentationSpec("LongForm", "TaggedList")
ORACLE = RepresentationSpec("Summary", "TaggedList", oracle_flags={"OracleSummary"})


def _config(env="Hanoi", rep=LONG, policy="optimal", **kw):
    return RunConfig(env, rep, ModelConfig(mock_policy=policy), **kw)


def _record(score, tokens, *, calls=1, seed=0, index=0, cond="c", env="Hanoi", fallback=False):
    step = StepEntry(1, "h", "obs", 1, 0.0, tokens * calls, 1, agent_calls=calls, fallback_used=fallback)
    return EpisodeRecord(env, cond, seed, index, (step,), score, "GoalReached")


def test_run_config_defaults_and_validation():
    assert _config().episodes == 10
    assert _config("Messenger", RepresentationSpec()).episodes == 20
    assert _config("babyai-goto", RepresentationSpec()).environment == "BabyAI-Goto"
    with pytest.raises(ConfigError):
        _config("Messenger", RepresentationSpec("LongForm", "Matrix"))
    with pytest.raises(ConfigError):
        _config(episodes=0)
    with pytest.raises(ConfigError):
        _config(parallelism=0)


def test_optimal_mock_solves_every_hanoi_episode():
    records = run_experiment(_config())
    assert len(records) == 10
    for rec in records:
        assert rec.normalized_score == 1.0 and len(rec.steps) == 7
        assert rec.termination_cause == "GoalReached"
        assert [s.timestep for s in rec.steps] == list(range(1, 8))


def test_gibberish_messenger_ends_within_ten_steps():
    records = run_experiment(_config("Messenger", RepresentationSpec(), "gibberish"))
    for rec in records:
        assert len(rec.steps) <= 10
        assert rec.termination_cause in ("Timeout", "Failure", "GoalReached")
        assert all(s.fallback_used and s.agent_calls == 2 for s in rec.steps)
    assert fallback_rate(records) == 1.0


def test_oracle_summary_is_logged_and_costs_no_summariser_tokens():
    records = run_experiment(_config(rep=ORACLE, episodes=2))
    first = records[0].steps[0]
    assert first.summary_text.startswith("Peg A has disks 2, 1, and 0")
    assert all(s.summary_input_tokens == 0 for r in records for s in r.steps)


def test_llm_summary_tokens_are_kept_apart():
    rep = RepresentationSpec("Summary", "TaggedList")
    rec = run_experiment(_config(rep=rep, episodes=1))[0]
    assert rec.steps[0].summary_text == "Start of game" and rec.steps[0].summary_input_tokens == 0
    assert all(s.summary_input_tokens > 0 for s in rec.steps[1:])
    assert rec.steps[1].summary_text == "scripted summary."
    assert rec.mean_input_tokens() == sum(s.input_tokens for s in rec.steps) / len(rec.steps)


def test_repeat_runs_are_byte_identical(tmp_path):
    a = write_records(run_experiment(_config(rep=ORACLE, episodes=3)), tmp_path / "a.jsonl")
    b = write_records(run_experiment(_config(rep=ORACLE, episodes=3)), tmp_path / "b.jsonl")
    assert a.read_bytes() == b.read_bytes()
    assert read_records(a) == run_experiment(_config(rep=ORACLE, episodes=3))


def test_parallel_equals_serial():
    serial = run_experiment(_config("BabyAI-Goto", RepresentationSpec(), "random", episodes=6))
    parallel = run_experiment(_config("BabyAI-Goto", RepresentationSpec(), "random", episodes=6, parallelism=4))
    assert serial == parallel


def test_replay_detects_tampering():
    rec = run_experiment(_config("Messenger", RepresentationSpec(), "random", episodes=1))[0]
    assert replay_record(rec).ok
    steps = list(rec.steps)
    k = len(steps) // 2
    steps[k] = dataclasses.replace(steps[k], reward=steps[k].reward + 0.25)
    result = replay_record(dataclasses.replace(rec, steps=tuple(steps)))
    assert not result.ok and result.divergent_step == steps[k].timestep
    bad_cause = replay_record(dataclasses.replace(rec, termination_cause="GoalReached" if rec.termination_cause != "GoalReached" else "Timeout"))
    assert not bad_cause.ok


def test_transport_failure_marks_incident_and_run_continues():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] == 3:
            return httpx.Response(500)
        return httpx.Response(200, json={"choices": [{"message": {"content": "Action: 2. Reason: r"}}]})

    cfg = RunConfig(
        "Hanoi", LONG,
        ModelConfig(backend="Remote", endpoint_url="http://stub", max_retries=0, backoff_base=0.0),
        episodes=3,
    )
    gw = Gateway(cfg.model, transport=httpx.MockTransport(handler), sleep=lambda s: None)
    records = run_experiment(cfg, gw)
    assert [r.is_incident for r in records] == [True, False, False]
    assert records[0].termination_cause == "Incident" and records[0].normalized_score is None
    assert replay_record(records[0]).ok
    summary = summarize_condition("c", records)
    assert summary.episodes == 2 and summary.incidents == 1


def test_score_per_kilo_token_examples():
    assert score_per_kilo_token([_record(0.5, 2000)]) == pytest.approx(0.25, rel=1e-12)
    assert score_per_kilo_token([_record(0.0, 100), _record(0.0, 5000)]) == 0.0
    assert score_per_kilo_token([_record(1.0, 1000), _record(0.0, 3000)]) == pytest.approx(0.25, rel=1e-12)
    # retries repeat the same prompt, so the per-call mean is unchanged
    assert score_per_kilo_token([_record(0.5, 2000, calls=2)]) == pytest.approx(0.25, rel=1e-12)
    with pytest.raises(UndefinedMetricError):
        score_per_kilo_token([_record(1.0, 0)])
    with pytest.raises(UndefinedMetricError):
        score_per_kilo_token([])


def test_bootstrap_degenerate_cases():
    same = bootstrap_mean_diff([0.5] * 10, [0.5] * 10, resamples=500)
    assert same.mean_diff == 0.0 and not same.significant
    gap = bootstrap_mean_diff([10.0] * 8, [0.0] * 8, resamples=500)
    assert (gap.ci_low, gap.ci_high) == (10.0, 10.0) and gap.significant
    with pytest.raises(ValueError):
        bootstrap_mean_diff([], [1.0])


def test_bootstrap_is_seeded_and_order_free():
    rng = random.Random(1)
    a = [rng.random() for _ in range(15)]
    b = [rng.random() for _ in range(12)]
    r1 = bootstrap_mean_diff(a, b, resamples=2000, seed=4)
    assert r1 == bootstrap_mean_diff(list(reversed(a)), b, resamples=2000, seed=4)
    assert r1 != bootstrap_mean_diff(a, b, resamples=2000, seed=5)


def test_bootstrap_antisymmetry_is_exact():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = rng.random(int(rng.integers(3, 30))).round(2)
        b = rng.random(int(rng.integers(3, 30))).round(2)
        ab = bootstrap_mean_diff(a, b, resamples=1000, seed=3)
        ba = bootstrap_mean_diff(b, a, resamples=1000, seed=3)
        assert ba.mean_diff == -ab.mean_diff
        assert (ba.ci_low, ba.ci_high) == (-ab.ci_high, -ab.ci_low)
        assert ba.significant == ab.significant


def test_bootstrap_interval_brackets_the_difference_on_typical_samples():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a, b = rng.normal(0.5, 0.2, 20), rng.normal(0.4, 0.2, 20)
        r = bootstrap_mean_diff(a, b, resamples=2000, seed=1)
        assert r.ci_low <= r.mean_diff <= r.ci_high
        assert r.significant == (not r.ci_low <= 0 <= r.ci_high)


def _group(scores, cond, seed=0):
    return [_record(s, 1000, seed=seed, index=i, cond=cond) for i, s in enumerate(scores)]


def test_report_values_match_hand_computation(tmp_path):
    groups = {"base": _group([1.0, 0.0, 1.0, 0.0], "base"), "alt": _group([1.0, 1.0, 1.0, 0.5], "alt")}
    csv_path, md_path = emit_report(groups, tmp_path, resamples=1000)
    rows = {r["condition"]: r for r in csv.DictReader(csv_path.open())}
    assert float(rows["base"]["mean"]) == 0.5
    assert float(rows["base"]["sd_episodes"]) == pytest.approx(math.sqrt(1 / 3), rel=1e-12)
    assert float(rows["alt"]["mean"]) == 0.875
    assert float(rows["alt"]["sd_episodes"]) == pytest.approx(0.25, rel=1e-12)
    assert float(rows["alt"]["mean_diff"]) == 0.375
    assert rows["base"]["mean_diff"] == ""
    assert float(rows["alt"]["score_per_kilo_token"]) == pytest.approx(0.875, rel=1e-12)
    assert "0.500 ± 0.577" in md_path.read_text()


def test_baseline_vs_itself_has_no_stars(tmp_path):
    g = _group([1.0, 0.0, 0.5], "base")
    _, md = emit_report({"base": g, "copy": [dataclasses.replace(r, condition="copy") for r in g]}, tmp_path, resamples=500)
    assert "*" not in md.read_text().split("\n\\*")[0]


def test_stars_follow_significance(tmp_path):
    groups = {"base": _group([0.0] * 6, "base"), "good": _group([1.0] * 6, "good"), "same": _group([0.0] * 6, "same")}
    csv_path, md_path = emit_report(groups, tmp_path, resamples=500)
    rows = {r["condition"]: r for r in csv.DictReader(csv_path.open())}
    assert rows["good"]["significant"] == "true" and rows["same"]["significant"] == "false"
    lines = md_path.read_text().splitlines()
    assert any(line.startswith("| good*") for line in lines)
    assert any(line.startswith("| same |") for line in lines)


def test_report_is_permutation_invariant(tmp_path):
    rng = random.Random(3)
    base = _group([rng.random() for _ in range(9)], "base")
    alt = _group([rng.random() for _ in range(9)], "alt")
    emit_report({"base": base, "alt": alt}, tmp_path / "a", resamples=500)
    rng.shuffle(base)
    rng.shuffle(alt)
    emit_report({"base": base, "alt": alt}, tmp_path / "b", resamples=500)
    for name in ("report.csv", "report.md"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_level_sd_needs_two_runs():
    one = summarize_condition("c", _group([1.0, 0.0], "c"))
    assert one.sd_runs is None
    two = summarize_condition("c", _group([1.0, 1.0], "c", seed=1) + _group([0.0, 0.0], "c", seed=2))
    assert two.runs == 2 and two.sd_runs == pytest.approx(math.sqrt(0.5))


def test_incidents_listed_in_report_footer(tmp_path):
    ok = _group([1.0, 0.5], "base")
    bad = dataclasses.replace(ok[0], episode_index=9, normalized_score=None, termination_cause="Incident", incident="TransportError: boom")
    _, md = emit_report({"base": ok + [bad]}, tmp_path)
    assert "episode 9" in md.read_text() and "TransportError: boom" in md.read_text()
