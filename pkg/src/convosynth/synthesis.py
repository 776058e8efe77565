"""Turns a validated dialogue plus voice assignment into conversation audio.

One TTS call per turn (optionally fanned out across workers), then a
sequential deterministic assembly: turn clips resampled to the target
rate, joined with silences matching each turn's pause annotation.  Any
turn failing synthesis fails the whole dialogue; partial audio never
advances.
"""

from __future__ import annotations

import json
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .assets import load_asset_json
from .audio import AudioClip, concatenate, make_silence, read_wav, resample, write_wav
from .backends.base import BackendError, TtsBackend, VoicePrompt
from .types import Dialogue, Turn
from .voices import VoiceEntry

DEFAULT_TARGET_SAMPLE_RATE = 24000

_VOWELS = "aeiou"


class DialogueSynthesisError(RuntimeError):
    def __init__(self, turn_index: int, cause: Exception):
        self.turn_index = turn_index
        super().__init__(f"synthesis failed at turn {turn_index}: {cause}")


@dataclass(frozen=True)
class SynthesizedTurn:
    turn_index: int
    clip: AudioClip
    voice_id: str
    control_prompt_used: str | None = None

    def __post_init__(self) -> None:
        if self.clip.is_empty():
            raise ValueError("synthesized turn clip must be non-empty")


@dataclass(frozen=True)
class AssembledDialogueAudio:
    clip: AudioClip
    turn_offsets: tuple[tuple[int, int, int], ...]


_control_config: dict | None = None


def _control_templates() -> dict:
    global _control_config
    if _control_config is None:
        _control_config = load_asset_json("control_prompts.json")
    return _control_config


def build_control_prompt(turn: Turn, language: str, supported: bool = True) -> str:
    """Render the natural-language rate/emotion instruction for one turn.

    Returns "" when the backend declares no control-prompt support.
    """

    if not supported:
        return ""
    config = _control_templates()
    template = config["templates"].get(language, config["templates"]["en"])
    rate_word = config["rate_words"].get(language, config["rate_words"]["en"])[turn.speech_rate]
    emotion = turn.emotion.strip()
    article = "an" if emotion[:1].lower() in _VOWELS else "a"
    return string.Template(template).substitute(
        rate=rate_word, emotion=emotion, article=article
    )


def load_voice_prompt(entry: VoiceEntry) -> VoicePrompt:
    return VoicePrompt(
        voice_id=entry.voice_id, clip=read_wav(entry.audio_path), transcript=entry.transcript
    )


def synthesize_turns(
    dialogue: Dialogue,
    assignment: dict[str, VoiceEntry],
    backend: TtsBackend,
    language: str,
    max_workers: int = 1,
) -> list[SynthesizedTurn]:
    """Synthesize every turn; order preserved regardless of worker timing."""

    missing = {turn.speaker_name for turn in dialogue.turns} - set(assignment)
    if missing:
        raise ValueError(f"no assigned voice for speakers: {sorted(missing)}")
    prompts = {name: load_voice_prompt(entry) for name, entry in assignment.items()}
    supported = getattr(backend, "supports_control_prompts", False)

    def render_one(turn: Turn) -> SynthesizedTurn:
        control = build_control_prompt(turn, language, supported) or None
        try:
            clip = backend.synthesize(turn.text, prompts[turn.speaker_name], control)
        except BackendError as exc:
            raise DialogueSynthesisError(turn.turn_index, exc) from exc
        if clip.is_empty():
            raise DialogueSynthesisError(
                turn.turn_index, BackendError("backend returned empty audio")
            )
        return SynthesizedTurn(
            turn_index=turn.turn_index,
            clip=clip,
            voice_id=assignment[turn.speaker_name].voice_id,
            control_prompt_used=control,
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(render_one, dialogue.turns))
    else:
        results = [render_one(turn) for turn in dialogue.turns]
    return results


def assemble_dialogue_audio(
    turns: list[SynthesizedTurn],
    dialogue: Dialogue,
    target_rate: int = DEFAULT_TARGET_SAMPLE_RATE,
) -> AssembledDialogueAudio:
    """Concatenate turn clips with pause silences at the target rate.

    Layout: turn_0 | silence(pause_1) | turn_1 | ...; offsets record the
    exact sample span of every turn.
    """

    by_index = {t.turn_index: t for t in turns}
    expected = [turn.turn_index for turn in dialogue.turns]
    missing = [i for i in expected if i not in by_index]
    if missing:
        raise ValueError(f"missing synthesized turns for indices {missing}")

    pieces: list[AudioClip] = []
    offsets: list[tuple[int, int, int]] = []
    cursor = 0
    for turn in dialogue.turns:
        if pieces:
            silence = make_silence(turn.pause_before_seconds, target_rate)
            pieces.append(silence)
            cursor += len(silence)
        clip = resample(by_index[turn.turn_index].clip, target_rate)
        pieces.append(clip)
        offsets.append((turn.turn_index, cursor, cursor + len(clip)))
        cursor += len(clip)
    return AssembledDialogueAudio(
        clip=concatenate(pieces, target_rate), turn_offsets=tuple(offsets)
    )


def persist_dialogue_audio(
    directory: str | Path,
    turns: list[SynthesizedTurn],
    assembled: AssembledDialogueAudio,
) -> dict[str, str]:
    """Write audio/turn_XXX.wav files, dialogue.wav and offsets.json.

    Returns the artifact paths relative to `directory`.
    """

    root = Path(directory)
    audio_dir = root / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, str] = {}
    for turn in turns:
        name = f"audio/turn_{turn.turn_index:03d}.wav"
        write_wav(turn.clip, root / name)
        paths[f"turn_{turn.turn_index:03d}"] = name
    write_wav(assembled.clip, root / "dialogue.wav")
    paths["dialogue_audio"] = "dialogue.wav"
    offsets_payload = {
        "sample_rate": assembled.clip.sample_rate,
        "turn_offsets": [
            {"turn_index": i, "start_sample": start, "end_sample": end}
            for i, start, end in assembled.turn_offsets
        ],
    }
    (root / "offsets.json").write_text(
        json.dumps(offsets_payload, indent=2) + "\n", encoding="utf-8"
    )
    paths["offsets"] = "offsets.json"
    return paths
