from __future__ import annotations

import json
import random

import numpy as np
import pytest

from convosynth.audio import AudioClip, read_wav
from convosynth.backends.mock import MockBackendSuite
from convosynth.synthesis import (
    AssembledDialogueAudio,
    DialogueSynthesisError,
    SynthesizedTurn,
    assemble_dialogue_audio,
    build_control_prompt,
    persist_dialogue_audio,
    synthesize_turns,
)
from convosynth.types import Turn, validate_dialogue
from convosynth.voices import default_voice_bank, assign_voices


def turn(index=0, rate="fast", emotion="excited", pause=0.0):
    return Turn(
        turn_index=index,
        speaker_name="Maya",
        text="some words here",
        emotion=emotion,
        speech_rate=rate,
        pause_before_seconds=pause,
    )


def test_control_prompt_exact_strings():
    assert build_control_prompt(turn(), "en") == "Speak fast, in an excited tone."
    assert (
        build_control_prompt(turn(rate="medium", emotion="neutral"), "en")
        == "Speak at a natural pace, in a neutral tone."
    )
    assert build_control_prompt(turn(rate="slow", emotion="somber"), "en") == (
        "Speak slowly, in a somber tone."
    )


def test_control_prompt_zh():
    text = build_control_prompt(turn(rate="fast", emotion="激动"), "zh")
    assert "较快" in text and "激动" in text


def test_control_prompt_unsupported_backend():
    assert build_control_prompt(turn(), "en", supported=False) == ""


def _ten_turn_dialogue(metadata):
    turns = []
    names = metadata.character_names
    for i in range(10):
        turns.append(
            {
                "turn_index": i,
                "speaker_name": names[i % 2],
                "text": f"turn {i} words about the plan and the site",
                "emotion": "calm",
                "speech_rate": "medium",
                "pause_before_seconds": 0.0 if i == 0 else 0.5,
            }
        )
    return validate_dialogue({"dialogue_id": "d-ten", "turns": turns}, metadata)


def test_synthesize_turns_order_and_count(metadata):
    dialogue = _ten_turn_dialogue(metadata)
    suite = MockBackendSuite(seed=0)
    assignment = assign_voices(metadata, default_voice_bank(), rng_seed=1)
    turns = synthesize_turns(dialogue, assignment, suite.tts, "en")
    assert [t.turn_index for t in turns] == list(range(10))
    assert all(t.control_prompt_used for t in turns)
    assert suite.tts.call_count == 10


def test_synthesize_turns_parallel_matches_serial(metadata):
    dialogue = _ten_turn_dialogue(metadata)
    assignment = assign_voices(metadata, default_voice_bank(), rng_seed=1)
    serial = synthesize_turns(dialogue, assignment, MockBackendSuite(seed=2).tts, "en")
    parallel = synthesize_turns(
        dialogue, assignment, MockBackendSuite(seed=2).tts, "en", max_workers=4
    )
    for a, b in zip(serial, parallel):
        assert a.turn_index == b.turn_index
        assert np.array_equal(a.clip.samples, b.clip.samples)


def test_synthesize_turns_failure_names_turn(metadata):
    dialogue = _ten_turn_dialogue(metadata)
    suite = MockBackendSuite(seed=0)
    suite.tts.fail_if_text_contains = "turn 3"
    assignment = assign_voices(metadata, default_voice_bank(), rng_seed=1)
    with pytest.raises(DialogueSynthesisError) as excinfo:
        synthesize_turns(dialogue, assignment, suite.tts, "en")
    assert excinfo.value.turn_index == 3


def test_synthesize_turns_missing_voice(metadata):
    dialogue = _ten_turn_dialogue(metadata)
    suite = MockBackendSuite(seed=0)
    with pytest.raises(ValueError, match="no assigned voice"):
        synthesize_turns(dialogue, {}, suite.tts, "en")


def _synth(index, seconds, rate=16000, voice="v"):
    return SynthesizedTurn(
        turn_index=index,
        clip=AudioClip(np.full(round(seconds * rate), 0.1), rate),
        voice_id=voice,
    )


def _dialogue_with_pauses(metadata, pauses):
    names = metadata.character_names
    turns = []
    for i, pause in enumerate(pauses):
        turns.append(
            {
                "turn_index": i,
                "speaker_name": names[i % 2],
                "text": f"utterance {i}",
                "emotion": "calm",
                "speech_rate": "medium",
                "pause_before_seconds": pause,
            }
        )
    return validate_dialogue({"dialogue_id": "d-p", "turns": turns}, metadata)


def test_assemble_exact_sample_count(metadata):
    dialogue = _dialogue_with_pauses(metadata, [0.0, 0.5])
    assembled = assemble_dialogue_audio(
        [_synth(0, 1.0), _synth(1, 1.0)], dialogue, target_rate=16000
    )
    assert len(assembled.clip) == 16000 + 8000 + 16000
    assert assembled.turn_offsets == ((0, 0, 16000), (1, 24000, 40000))


def test_assemble_single_turn_identity(metadata):
    dialogue = _dialogue_with_pauses(metadata, [0.0])
    source = _synth(0, 0.7)
    assembled = assemble_dialogue_audio([source], dialogue, target_rate=16000)
    assert np.array_equal(assembled.clip.samples, source.clip.samples)


def test_assemble_zero_pause_sums_exactly(metadata):
    dialogue = _dialogue_with_pauses(metadata, [0.0, 0.0, 0.0])
    clips = [_synth(0, 0.3), _synth(1, 0.4), _synth(2, 0.5)]
    assembled = assemble_dialogue_audio(clips, dialogue, target_rate=16000)
    assert len(assembled.clip) == sum(len(c.clip) for c in clips)


def test_assemble_missing_turn(metadata):
    dialogue = _dialogue_with_pauses(metadata, [0.0, 0.5])
    with pytest.raises(ValueError, match="missing synthesized turns"):
        assemble_dialogue_audio([_synth(0, 1.0)], dialogue, target_rate=16000)


def test_assemble_offsets_partition(metadata):
    rng = random.Random(99)
    pauses = [0.0] + [round(rng.uniform(0, 3), 2) for _ in range(4)]
    dialogue = _dialogue_with_pauses(metadata, pauses)
    clips = [_synth(i, rng.uniform(0.2, 1.5)) for i in range(5)]
    assembled = assemble_dialogue_audio(clips, dialogue, target_rate=16000)
    offsets = assembled.turn_offsets
    assert offsets[0][1] == 0
    for (idx, start, end), (next_idx, next_start, _) in zip(offsets, offsets[1:]):
        gap = next_start - end
        assert gap == round(pauses[next_idx] * 16000)
    assert offsets[-1][2] == len(assembled.clip)


def test_assemble_resamples_heterogeneous_rates(metadata):
    dialogue = _dialogue_with_pauses(metadata, [0.0, 1.0])
    clips = [_synth(0, 1.0, rate=8000), _synth(1, 1.0, rate=16000)]
    assembled = assemble_dialogue_audio(clips, dialogue, target_rate=16000)
    assert assembled.clip.sample_rate == 16000
    assert len(assembled.clip) == 16000 + 16000 + 16000


def test_persist_dialogue_audio_layout(tmp_path, metadata):
    dialogue = _dialogue_with_pauses(metadata, [0.0, 0.5])
    turns = [_synth(0, 1.0), _synth(1, 1.0)]
    assembled = assemble_dialogue_audio(turns, dialogue, target_rate=16000)
    paths = persist_dialogue_audio(tmp_path, turns, assembled)
    assert (tmp_path / "audio" / "turn_000.wav").is_file()
    assert (tmp_path / "audio" / "turn_001.wav").is_file()
    assert (tmp_path / "dialogue.wav").is_file()
    offsets = json.loads((tmp_path / "offsets.json").read_text())
    assert offsets["sample_rate"] == 16000
    assert offsets["turn_offsets"][1]["start_sample"] == 24000
    assert len(read_wav(tmp_path / "dialogue.wav")) == 40000
    assert paths["dialogue_audio"] == "dialogue.wav"
