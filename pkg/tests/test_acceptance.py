"""Acceptance suite: one test per release criterion, each printing a
pass line.  Everything runs on mock backends only."""

from __future__ import annotations

import json
import math
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from convosynth.audio import AudioClip, read_wav, write_wav
from convosynth.backends.mock import MockBackendSuite, MockChatBackend
from convosynth.cli import main as cli_main
from convosynth.config import BatchConfig
from convosynth.judging import evaluate_coherence, evaluate_consistency, load_checklist
from convosynth.metrics import edit_distance, error_rate, normalize_text, speaker_consistency
from convosynth.orchestrator import (
    STATUS_CONTENT_FAILED,
    TERMINAL_STATUSES,
    ManifestRecord,
    compute_dataset_stats,
    dialogue_id_for,
    read_manifest,
    run_batch,
)
from convosynth.synthesis import SynthesizedTurn, assemble_dialogue_audio
from convosynth.types import validate_dialogue, validate_metadata
from convosynth.voices import assign_voices, default_voice_bank, retrieve_candidates, score_voice
from conftest import VALID_METADATA
from test_metrics import brute_force_distance
from test_voices import entry, profile


def _pass(message: str) -> None:
    print(f"[PASS] {message}")


def _mock_config(tmp_path: Path, **overrides) -> BatchConfig:
    data = {
        "output_dir": str(tmp_path),
        "sample_count": 10,
        "parallelism": 4,
        "rng_seed": 424242,
        "language": "en",
        "backends": {"mode": "mock", "mock_seed": 99},
    }
    data.update(overrides)
    return BatchConfig.from_dict(data)


def test_edit_distance_oracle():
    rng = random.Random(20240601)
    tokens = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"]
    start = time.perf_counter()
    cases = 0
    for _ in range(220):
        ref = [rng.choice(tokens) for _ in range(rng.randint(0, 8))]
        hyp = [rng.choice(tokens) for _ in range(rng.randint(0, 8))]
        assert edit_distance(ref, hyp) == brute_force_distance(ref, hyp)
        cases += 1
    elapsed = time.perf_counter() - start
    assert cases >= 200
    assert elapsed < 5.0
    _pass(f"edit-distance oracle: {cases} random pairs exact in {elapsed:.2f}s")


def test_wer_cer_worked_cases():
    assert error_rate("the cat sat", "the cat sit", "en") == 1 / 3
    assert error_rate("Hello, World!", "hello world", "en") == 0.0
    assert normalize_text("Hello, World!", "en") == ["hello", "world"]
    assert normalize_text("你好，世界", "zh") == ["你", "好", "世", "界"]
    assert error_rate("今天天气很好", "今天天汽很好", "zh") == 1 / 6
    _pass("WER/CER worked cases exact (en 1/3, case+punct 0, zh per-character)")


def test_speaker_consistency_flagging():
    base = [1.0, 0.0]
    low = [0.85, math.sqrt(1 - 0.85**2)]
    sections, flags = speaker_consistency(
        [("A", base), ("B", base), ("A", low), ("B", base)], threshold=0.9
    )
    assert len(flags) == 1
    assert flags[0].speaker_name == "A"
    assert flags[0].similarity == pytest.approx(0.85)

    _, clean_flags = speaker_consistency(
        [("A", base), ("B", base), ("A", base), ("B", base)], threshold=0.9
    )
    assert clean_flags == []
    _pass("speaker-consistency flagging: one 0.85 pair flagged at 0.9, identical clean")


def test_assembly_conservation():
    rng = random.Random(7321)
    target = 16000
    for case in range(50):
        turn_count = rng.randint(1, 6)
        names = ("Maya", "Omar")
        metadata = validate_metadata(json.loads(json.dumps(VALID_METADATA)))
        pauses = [0.0] + [round(rng.uniform(0.0, 4.0), 3) for _ in range(turn_count - 1)]
        draft_turns = []
        synthesized = []
        expected_samples = 0
        for i in range(turn_count):
            source_rate = rng.choice([8000, 16000, 24000, 48000])
            length = rng.randint(1000, 30000)
            clip = AudioClip(np.full(length, 0.05), source_rate)
            synthesized.append(SynthesizedTurn(turn_index=i, clip=clip, voice_id="v"))
            expected_samples += round(length * target / source_rate)
            if i > 0:
                expected_samples += round(pauses[i] * target)
            draft_turns.append(
                {
                    "turn_index": i,
                    "speaker_name": names[i % 2],
                    "text": f"turn {i}",
                    "emotion": "calm",
                    "speech_rate": "medium",
                    "pause_before_seconds": pauses[i],
                }
            )
        dialogue = validate_dialogue(
            {"dialogue_id": f"fixture-{case}", "turns": draft_turns}, metadata
        )
        assembled = assemble_dialogue_audio(synthesized, dialogue, target_rate=target)
        assert len(assembled.clip) == expected_samples
        offsets = assembled.turn_offsets
        assert offsets[0][1] == 0
        assert offsets[-1][2] == len(assembled.clip)
        for (idx, start, end), (nidx, nstart, _) in zip(offsets, offsets[1:]):
            assert end <= nstart
            assert nstart - end == round(pauses[nidx] * target)
    _pass("assembly conservation: 50 randomized fixtures exact, offsets partition")


def test_checklist_arithmetic(scenario_seed, metadata, dialogue, library):
    checklist = load_checklist()
    counts: dict[str, int] = {}
    for question in checklist:
        counts[question.dimension] = counts.get(question.dimension, 0) + 1
    assert counts == {"scenario_metadata": 5, "metadata_internal": 7, "cross_component": 7}

    from test_judging import _script, aspect_response, checklist_answers

    chat = MockChatBackend(seed=0)
    chat.queue_response(
        json.dumps(
            {
                "answers": checklist_answers(
                    {"scenario_metadata": 80, "metadata_internal": 90, "cross_component": 100}
                )
            }
        )
    )
    report = evaluate_consistency(scenario_seed, metadata, _script(), dialogue, chat, library)
    scores = [answer.score for answer in report.answers]
    assert len(scores) == 19
    mean = sum(scores) / 19
    assert abs(report.overall - mean) <= math.ulp(mean)
    assert report.overall == pytest.approx(1730 / 19)
    assert all(0 <= s <= 100 for s in scores)

    chat.queue_response(aspect_response([[100] * 5, [80] * 5] * 2))
    coherence = evaluate_coherence(metadata, _script(), dialogue, chat, library)
    grid = [s for per_turn in coherence.per_turn for s in per_turn.scores]
    assert coherence.overall == sum(grid) / len(grid) == 90.0
    _pass("checklist arithmetic: overall = mean of 19 to 1 ulp, (5,7,7) enforced, grid mean exact")


def test_pipeline_gating(tmp_path):
    config = _mock_config(tmp_path / "gate", sample_count=4)
    digest = config.digest()
    fail_ids = {dialogue_id_for(digest, 1), dialogue_id_for(digest, 3)}
    suite = MockBackendSuite(seed=99)
    suite.chat.fail_naturalness_ids = fail_ids
    records = run_batch(config, backends=suite.as_backend_set())
    by_id = {record.dialogue_id: record for record in records}
    for failed_id in fail_ids:
        assert by_id[failed_id].status == STATUS_CONTENT_FAILED
        dialogue_dir = Path(config.output_dir) / failed_id
        assert not (dialogue_dir / "dialogue.wav").exists()
        assert not (dialogue_dir / "audio").exists()
    synthesized = [r for r in records if r.dialogue_id not in fail_ids]
    expected_calls = sum(r.stats["turn_count"] for r in synthesized)
    assert suite.tts.call_count == expected_calls
    all_failed_suite = MockBackendSuite(seed=99)
    all_failed_suite.chat.fail_naturalness_ids = {
        dialogue_id_for(digest, index) for index in range(4)
    }
    config_all = _mock_config(tmp_path / "gate_all", sample_count=4)
    run_batch(config_all, backends=all_failed_suite.as_backend_set())
    assert all_failed_suite.tts.call_count == 0
    _pass("pipeline gating: naturalness-failed ids are content_failed with zero TTS calls")


def _strip_timing(manifest_path: Path) -> list[str]:
    lines = []
    for line in manifest_path.read_text(encoding="utf-8").splitlines():
        payload = json.loads(line)
        payload.pop("timing", None)
        lines.append(json.dumps(payload, sort_keys=True, ensure_ascii=False))
    return lines


def test_end_to_end_determinism(tmp_path):
    start = time.perf_counter()
    first = _mock_config(tmp_path / "run_a")
    second = _mock_config(tmp_path / "run_b")
    run_batch(first)
    run_batch(second)
    elapsed = time.perf_counter() - start
    lines_a = _strip_timing(Path(first.output_dir) / "manifest.jsonl")
    lines_b = _strip_timing(Path(second.output_dir) / "manifest.jsonl")
    assert lines_a == lines_b
    assert len(lines_a) == 10
    assert elapsed < 60.0
    _pass(f"end-to-end determinism: manifests byte-identical modulo timestamps ({elapsed:.1f}s)")


def test_resume_after_kill(tmp_path):
    out_dir = tmp_path / "killed"
    config = _mock_config(
        out_dir,
        parallelism=1,
        backends={"mode": "mock", "mock_seed": 99, "mock_latency_seconds": 0.012},
    )
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config.to_dict()))

    process = subprocess.Popen(
        [sys.executable, "-m", "convosynth.cli", "generate", "--config", str(config_path)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    manifest = out_dir / "manifest.jsonl"
    deadline = time.time() + 90
    try:
        while time.time() < deadline:
            if manifest.is_file() and len(manifest.read_text().splitlines()) >= 4:
                break
            time.sleep(0.01)
        else:
            pytest.fail("batch never reached 4 completions")
    finally:
        process.kill()
        process.wait()

    interrupted, _ = read_manifest(manifest)
    assert len(interrupted) >= 4

    assert cli_main(["generate", "--config", str(config_path)]) == 0
    records, corrupt = read_manifest(manifest)
    assert corrupt == []
    terminal = [record for record in records if record.status in TERMINAL_STATUSES]
    terminal_ids = [record.dialogue_id for record in terminal]
    assert len(terminal_ids) == 10
    assert len(set(terminal_ids)) == 10
    digest = config.digest()
    assert set(terminal_ids) == {dialogue_id_for(digest, index) for index in range(10)}
    _pass("resume: killed after >=4 completions, resumed to exactly 10 unique terminal records")


def test_stats_cross_check():
    records = []
    for index in range(3168):
        turn_count = 11 if index < 341 else 10
        duration = 139.0 if index < 167 else 138.0
        records.append(
            ManifestRecord(
                dialogue_id=f"d{index:05d}",
                index=index,
                status="passed",
                stats={
                    "turn_count": turn_count,
                    "duration_seconds": duration,
                    "voice_ids": [f"v{index % 17}"],
                    "topic": f"topic {index % 16}",
                    "emotions": [f"emotion {index % 17}"],
                },
            )
        )
    stats = compute_dataset_stats(records)
    assert stats.num_turns == 32021
    assert stats.total_duration_seconds == 437351.0
    assert stats.num_dialogues == 3168
    assert round(stats.avg_duration_per_turn_seconds, 3) == 13.658
    assert round(stats.avg_turns_per_dialogue, 3) == 10.108
    assert round(stats.avg_duration_per_dialogue_seconds, 3) == 138.053
    assert stats.num_voices == 17 and stats.num_topics == 16 and stats.num_emotions == 17
    _pass("stats cross-check: 437351/32021=13.658 and 32021/3168=10.108 reproduced")


def test_retrieval_determinism_and_formula(metadata):
    value = score_voice(profile(), entry(age_bucket="fifties", locale="fr-FR"))
    assert value == 0.55

    from convosynth.voices import VoiceBank

    bank = VoiceBank(entries=(entry(voice_id="bbb"), entry(voice_id="aaa")))
    ranked = retrieve_candidates(profile(), bank, k=2)
    assert [e.voice_id for e, _ in ranked] == ["aaa", "bbb"]

    fixture_bank = default_voice_bank()
    assignments = [assign_voices(metadata, fixture_bank, rng_seed=77) for _ in range(3)]
    ids = [{name: e.voice_id for name, e in a.items()} for a in assignments]
    assert ids[0] == ids[1] == ids[2]
    assert len(set(ids[0].values())) == 2
    _pass("retrieval: 0.55 fixture exact, tie-break stable, assignment distinct+deterministic")


def test_wav_round_trip_bound(tmp_path):
    rng = np.random.default_rng(5150)
    bound = 1 / 32768
    for case in range(100):
        rate = int(rng.choice([8000, 16000, 22050, 24000, 48000]))
        n = int(rng.integers(1, 5000))
        clip = AudioClip(rng.uniform(-1.0, 1.0, n), rate)
        path = tmp_path / f"clip_{case}.wav"
        write_wav(clip, path)
        loaded = read_wav(path)
        assert loaded.sample_rate == rate and len(loaded) == n
        assert np.max(np.abs(loaded.samples - clip.samples)) <= bound
    _pass("WAV round-trip: 100 random clips within 1/32768")
