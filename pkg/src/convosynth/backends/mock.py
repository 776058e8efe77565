"""Deterministic offline stand-ins for the five model services.

Every mock output is a pure function of (call inputs, configured seed):
hashes come from sha256 and randomness from seeded generators, so results
are byte-identical across runs and processes.  The suite wires the mocks
together the way real services behave: synthesized clips are remembered so
the ASR mock can transcribe them back and the embedder can recognize the
speaker.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import time
from collections import deque
from typing import Any, Iterable

import numpy as np

from ..audio import AudioClip, pcm16_bytes
from .base import (
    BackendError,
    BackendSet,
    ChatRequest,
    VoicePrompt,
    require_clip,
    require_tts_inputs,
)

MOCK_TTS_SAMPLE_RATE = 24000
# Fixed mock duration rule: 0.08 s per whitespace word, floored at 0.5 s.
SECONDS_PER_WORD = 0.08
MIN_CLIP_SECONDS = 0.5

EMOTIONS = (
    "excited",
    "concerned",
    "curious",
    "calm",
    "enthusiastic",
    "grateful",
    "reflective",
    "confident",
    "supportive",
    "cautious",
    "anxious",
    "amused",
    "somber",
    "frustrated",
    "hopeful",
    "surprised",
    "neutral",
)

_NAMES = {
    "en": ("Alex", "Jordan", "Maya", "Ethan", "Priya", "Noah", "Sofia", "Liam", "Grace", "Omar"),
    "zh": ("李伟", "王芳", "张敏", "刘洋", "陈静", "杨帆", "赵磊", "黄丽"),
}
_OCCUPATIONS = {
    "en": ("teacher", "engineer", "archaeologist", "nurse", "chef", "journalist", "designer", "farmer"),
    "zh": ("教师", "工程师", "医生", "厨师", "记者", "设计师", "农民", "学生"),
}
_TRAITS = ("patient", "witty", "serious", "optimistic", "meticulous", "blunt", "warm", "skeptical")
_STYLES = ("measured and precise", "fast and animated", "soft-spoken", "direct and plain")
_WORDS = (
    "well you know the river keeps rising and we should check the old maps before "
    "anyone decides anything because last season the readings were off and people "
    "still talk about that strange light near the market every evening"
).split()
_ZH_PHRASES = ("我觉得这个想法不错", "今天的天气真好", "我们应该再确认一下", "这件事情很重要", "你说得有道理", "让我再想一想")


def stable_digest(*parts: str) -> str:
    return hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()


def clip_key(clip: AudioClip) -> str:
    digest = hashlib.sha256()
    digest.update(str(clip.sample_rate).encode())
    digest.update(pcm16_bytes(clip))
    return digest.hexdigest()


def _rng_from(*parts: str) -> random.Random:
    return random.Random(int(stable_digest(*parts)[:16], 16))


def _np_rng_from(*parts: str) -> np.random.Generator:
    return np.random.default_rng(int(stable_digest(*parts)[:16], 16))


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)\s*```", re.IGNORECASE | re.DOTALL)


def _embedded_payloads(text: str) -> list[Any]:
    payloads = []
    for block in _FENCE_RE.findall(text):
        try:
            payloads.append(json.loads(block))
        except json.JSONDecodeError:
            continue
    return payloads


def _find_payload(payloads: Iterable[Any], *required_keys: str) -> dict | None:
    for payload in payloads:
        if isinstance(payload, dict) and all(k in payload for k in required_keys):
            return payload
    return None


class MockChatBackend:
    """Schema-aware chat mock fabricating valid pipeline documents.

    Dispatches on the `title` of the request schema.  Tests can inject
    scripted raw responses via `queue_response` (consumed first) or force
    permanently malformed output with `always_malformed`.
    """

    def __init__(self, seed: int = 0, latency_seconds: float = 0.0):
        self.seed = seed
        self.latency_seconds = latency_seconds
        self.calls: list[ChatRequest] = []
        self.queued: deque[str] = deque()
        self.always_malformed = False
        self.fail_naturalness_ids: set[str] = set()

    @property
    def call_count(self) -> int:
        return len(self.calls)

    def calls_for(self, schema_title: str) -> int:
        return sum(
            1
            for request in self.calls
            if request.schema is not None and request.schema.get("title") == schema_title
        )

    def queue_response(self, raw_text: str) -> None:
        self.queued.append(raw_text)

    def complete(self, request: ChatRequest) -> str:
        if self.latency_seconds:
            time.sleep(self.latency_seconds)
        self.calls.append(request)
        if self.queued:
            return self.queued.popleft()
        if self.always_malformed:
            return "this is { not valid json"
        title = (request.schema or {}).get("title", "")
        rng = _rng_from(str(self.seed), title, request.system_prompt, request.user_prompt)
        payloads = _embedded_payloads(request.user_prompt)
        if title == "scenario_seed":
            return self._make_seed(rng, request.user_prompt)
        if title == "dialogue_metadata":
            return self._make_metadata(rng, payloads)
        if title == "dialogue_script":
            return self._make_script(rng, payloads)
        if title == "dialogue_turns":
            return self._make_dialogue(rng, payloads)
        if title == "consistency_checklist":
            return self._make_checklist(rng, payloads)
        if title in ("coherence_aspects", "naturalness_aspects"):
            low = title == "naturalness_aspects" and any(
                f'"{dialogue_id}"' in request.user_prompt
                for dialogue_id in self.fail_naturalness_ids
            )
            return self._make_aspects(rng, payloads, low=low)
        return f"mock response {stable_digest(str(self.seed), request.user_prompt)[:12]}"

    def _make_seed(self, rng: random.Random, prompt: str) -> str:
        match = re.search(r"\b(en|zh)\b", prompt)
        language = match.group(1) if match else "en"
        payload = {
            "dialogue_type": rng.choice(["casual conversation", "professional discussion"]),
            "temporal_context": rng.choice(["present day", "early morning", "the 1920s"]),
            "spatial_context": rng.choice(["a quiet cafe", "a research lab", "a city park"]),
            "cultural_background": rng.choice(["urban professional", "rural community"]),
            "language": language,
        }
        return json.dumps(payload, ensure_ascii=False)

    def _make_metadata(self, rng: random.Random, payloads: list[Any]) -> str:
        seed = _find_payload(payloads, "dialogue_type", "language") or {}
        language = seed.get("language", "en")
        names = rng.sample(_NAMES.get(language, _NAMES["en"]), 2)
        turn_count = rng.randint(6, 14)
        profiles = []
        for i, name in enumerate(names):
            profiles.append(
                {
                    "name": name,
                    "gender": rng.choice(["female", "male"]),
                    "age": rng.randint(22, 68),
                    "occupation": rng.choice(_OCCUPATIONS.get(language, _OCCUPATIONS["en"])),
                    "nationality": "China" if language == "zh" else rng.choice(
                        ["United States", "United Kingdom", "Canada", "India", "Egypt"]
                    ),
                    "personality_traits": rng.sample(_TRAITS, 2),
                    "speaking_style": rng.choice(_STYLES),
                    "relationship_to_other": "colleague" if i == 0 else "longtime friend",
                }
            )
        payload = {
            "settings": {
                "scene_description": (
                    f"{seed.get('spatial_context', 'a shared space')} during "
                    f"{seed.get('temporal_context', 'the present day')}"
                ),
                "temporal_context": seed.get("temporal_context", "present day"),
                "spatial_context": seed.get("spatial_context", "a shared space"),
                "language": language,
                "expected_turn_count": turn_count,
                "expected_duration_seconds": round(turn_count * rng.uniform(8.0, 16.0), 1),
            },
            "character_profiles": profiles,
            "conversation_context": {
                "topic": f"{seed.get('dialogue_type', 'conversation')} about shared plans",
                "main_goal": "reach a concrete agreement on next steps",
                "key_points": [
                    "compare notes on the current situation",
                    "raise one unexpected complication",
                    "settle on a plan both accept",
                ],
                "emotional_arc": rng.choice(
                    ["curious, then animated, then settled", "tense at first, warming to agreement"]
                ),
            },
        }
        return json.dumps(payload, ensure_ascii=False)

    def _make_script(self, rng: random.Random, payloads: list[Any]) -> str:
        metadata = _find_payload(payloads, "character_profiles", "settings") or {}
        profiles = metadata.get("character_profiles", [])
        names = [p.get("name", f"Speaker {i}") for i, p in enumerate(profiles)] or ["A", "B"]
        turn_count = metadata.get("settings", {}).get("expected_turn_count", 8)
        phase_count = max(2, min(4, turn_count // 3))
        payload = {
            "scene": metadata.get("settings", {}).get(
                "scene_description", "two people talking in a shared space"
            ),
            "narrative_flow": [
                f"phase {i + 1}: the conversation {step}"
                for i, step in enumerate(
                    ["opens with small talk", "turns to the main topic", "hits a snag", "resolves"][
                        :phase_count
                    ]
                )
            ],
            "character_behaviors": {
                name: f"{name} speaks {rng.choice(_STYLES)} and "
                f"{rng.choice(['asks frequent questions', 'offers concrete examples'])}"
                for name in names
            },
            "emotional_progression": [
                "light and exploratory at the start",
                "focused and slightly tense in the middle",
                "warm and settled by the end",
            ],
        }
        return json.dumps(payload, ensure_ascii=False)

    def _make_dialogue(self, rng: random.Random, payloads: list[Any]) -> str:
        metadata = _find_payload(payloads, "character_profiles", "settings") or {}
        profiles = metadata.get("character_profiles", [])
        names = [p.get("name", f"Speaker {i}") for i, p in enumerate(profiles)] or ["A", "B"]
        settings = metadata.get("settings", {})
        turn_count = settings.get("expected_turn_count", 8)
        language = settings.get("language", "en")
        turns = []
        speaker_index = rng.randint(0, 1)
        repeats = 0
        for i in range(turn_count):
            if language == "zh":
                text = "".join(rng.choice(_ZH_PHRASES) for _ in range(rng.randint(1, 3)))
            else:
                count = rng.randint(5, 14)
                text = " ".join(rng.choice(_WORDS) for _ in range(count))
            turns.append(
                {
                    "turn_index": i,
                    "speaker_name": names[speaker_index],
                    "text": text,
                    "emotion": rng.choice(EMOTIONS),
                    "speech_rate": rng.choice(["slow", "medium", "fast"]),
                    "pause_before_seconds": 0.0 if i == 0 else round(rng.uniform(0.2, 1.5), 2),
                }
            )
            if repeats == 0 and rng.random() < 0.15:
                repeats = 1  # let the same speaker hold one more turn
            else:
                repeats = 0
                speaker_index = 1 - speaker_index
        return json.dumps({"turns": turns}, ensure_ascii=False)

    def _make_checklist(self, rng: random.Random, payloads: list[Any]) -> str:
        questions = None
        for payload in payloads:
            if isinstance(payload, list) and payload and isinstance(payload[0], dict):
                if "question_id" in payload[0] or "id" in payload[0]:
                    questions = payload
                    break
        if questions is None:
            questions = [{"question_id": f"q{i:02d}"} for i in range(1, 20)]
        answers = []
        for question in questions:
            qid = question.get("question_id", question.get("id"))
            answers.append(
                {
                    "question_id": qid,
                    "score": rng.randint(82, 100),
                    "rationale": "checked against the provided artifacts",
                }
            )
        return json.dumps({"answers": answers}, ensure_ascii=False)

    def _make_aspects(self, rng: random.Random, payloads: list[Any], low: bool) -> str:
        dialogue = _find_payload(payloads, "turns", "dialogue_id")
        indices = (
            [t.get("turn_index", i) for i, t in enumerate(dialogue["turns"])]
            if dialogue
            else [0, 1]
        )
        lo, hi = (40, 60) if low else (84, 100)
        per_turn = [
            {
                "turn_index": index,
                "scores": [rng.randint(lo, hi) for _ in range(5)],
                "rationale": "assessed in context",
            }
            for index in indices
        ]
        return json.dumps({"per_turn": per_turn}, ensure_ascii=False)


class MockTtsBackend:
    """Sine-plus-noise synthesizer with the fixed duration rule.

    Registers each produced clip with the suite's ASR and embedder
    registries so downstream mocks behave like consistent real services.
    """

    supports_control_prompts = True

    def __init__(
        self,
        seed: int = 0,
        sample_rate: int = MOCK_TTS_SAMPLE_RATE,
        latency_seconds: float = 0.0,
        asr_registry: dict[str, str] | None = None,
        speaker_registry: dict[str, str] | None = None,
    ):
        self.seed = seed
        self.sample_rate = sample_rate
        self.latency_seconds = latency_seconds
        self.asr_registry = asr_registry if asr_registry is not None else {}
        self.speaker_registry = speaker_registry if speaker_registry is not None else {}
        self.calls: list[tuple[str, str, str | None]] = []
        self.fail_if_text_contains: str | None = None

    @property
    def call_count(self) -> int:
        return len(self.calls)

    def synthesize(
        self, text: str, voice_prompt: VoicePrompt, control_prompt: str | None = None
    ) -> AudioClip:
        require_tts_inputs(text, voice_prompt)
        if self.latency_seconds:
            time.sleep(self.latency_seconds)
        self.calls.append((text, voice_prompt.voice_id, control_prompt))
        if self.fail_if_text_contains and self.fail_if_text_contains in text:
            raise BackendError(f"mock TTS scripted failure for text containing "
                               f"{self.fail_if_text_contains!r}")
        duration = max(MIN_CLIP_SECONDS, SECONDS_PER_WORD * len(text.split()))
        n = round(duration * self.sample_rate)
        base_freq = 110.0 + int(stable_digest("voice", voice_prompt.voice_id)[:8], 16) % 170
        t = np.arange(n) / self.sample_rate
        rng = _np_rng_from(str(self.seed), "tts", voice_prompt.voice_id, text, control_prompt or "")
        samples = 0.3 * np.sin(2 * np.pi * base_freq * t) + 0.02 * rng.standard_normal(n)
        clip = AudioClip(np.clip(samples, -1.0, 1.0), self.sample_rate)
        key = clip_key(clip)
        self.asr_registry[key] = text
        self.speaker_registry[key] = voice_prompt.voice_id
        return clip


class MockAsrBackend:
    """Transcribes clips it has seen registered; unknown clips yield ""."""

    def __init__(self, registry: dict[str, str] | None = None, latency_seconds: float = 0.0):
        self.registry = registry if registry is not None else {}
        self.latency_seconds = latency_seconds
        self.unregistered_keys: list[str] = []
        self.call_count = 0

    def register(self, clip: AudioClip, text: str) -> None:
        self.registry[clip_key(clip)] = text

    def transcribe(self, clip: AudioClip, language: str) -> str:
        if clip.is_empty():
            raise ValueError("cannot transcribe a zero-length clip")
        if self.latency_seconds:
            time.sleep(self.latency_seconds)
        self.call_count += 1
        key = clip_key(clip)
        if key not in self.registry:
            self.unregistered_keys.append(key)
            return ""
        return self.registry[key]


class MockMosBackend:
    """MOS estimate derived from a stable hash of the PCM payload."""

    def __init__(self, latency_seconds: float = 0.0):
        self.latency_seconds = latency_seconds
        self.call_count = 0

    def score(self, clip: AudioClip) -> float:
        require_clip(clip, 0.1, "MOS scoring")
        if self.latency_seconds:
            time.sleep(self.latency_seconds)
        self.call_count += 1
        bucket = int(clip_key(clip), 16) % 1000
        return 1.0 + 4.0 * bucket / 1000.0


class MockSpeakerEmbedder:
    """16-dim speaker embeddings: a per-speaker base plus per-clip jitter."""

    dimension = 16

    def __init__(
        self,
        seed: int = 0,
        registry: dict[str, str] | None = None,
        latency_seconds: float = 0.0,
    ):
        self.seed = seed
        self.registry = registry if registry is not None else {}
        self.latency_seconds = latency_seconds
        self.call_count = 0

    def register(self, clip: AudioClip, speaker_id: str) -> None:
        self.registry[clip_key(clip)] = speaker_id

    def embed(self, clip: AudioClip) -> np.ndarray:
        require_clip(clip, 0.5, "speaker embedding")
        if self.latency_seconds:
            time.sleep(self.latency_seconds)
        self.call_count += 1
        key = clip_key(clip)
        speaker_id = self.registry.get(key, f"anon-{key[:12]}")
        base = _np_rng_from(str(self.seed), "spk", speaker_id).standard_normal(self.dimension)
        base /= np.linalg.norm(base)
        # Jitter small enough that same-speaker cosine stays >= 0.99.
        jitter = 0.005 * _np_rng_from(str(self.seed), "clip", key).standard_normal(self.dimension)
        vector = base + jitter
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            raise BackendError("embedding backend returned a zero vector")
        return vector / norm


class MockBackendSuite:
    """All five mocks wired together with shared clip registries."""

    def __init__(
        self,
        seed: int = 0,
        latency_seconds: float = 0.0,
        tts_sample_rate: int = MOCK_TTS_SAMPLE_RATE,
    ):
        asr_registry: dict[str, str] = {}
        speaker_registry: dict[str, str] = {}
        self.chat = MockChatBackend(seed=seed, latency_seconds=latency_seconds)
        self.tts = MockTtsBackend(
            seed=seed,
            sample_rate=tts_sample_rate,
            latency_seconds=latency_seconds,
            asr_registry=asr_registry,
            speaker_registry=speaker_registry,
        )
        self.asr = MockAsrBackend(registry=asr_registry, latency_seconds=latency_seconds)
        self.mos = MockMosBackend(latency_seconds=latency_seconds)
        self.embedder = MockSpeakerEmbedder(
            seed=seed, registry=speaker_registry, latency_seconds=latency_seconds
        )

    def as_backend_set(self) -> BackendSet:
        return BackendSet(
            chat=self.chat,
            judge=self.chat,
            tts=self.tts,
            asr=self.asr,
            mos=self.mos,
            embedder=self.embedder,
        )
