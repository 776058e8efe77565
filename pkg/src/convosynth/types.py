"""Domain types for the dialogue synthesis pipeline.

Every artifact that crosses a stage boundary (scenario seed, metadata,
script, dialogue, quality report) is defined here together with its
canonical JSON serialization and structural validation.  Values are
immutable after construction and therefore safe to share across workers.

Validation is deliberately strict: generated drafts are checked field by
field and every broken invariant is reported with its path, so a caller
can feed the full violation list back to the generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

LANGUAGES = ("en", "zh")
SPEECH_RATES = ("slow", "medium", "fast")

MIN_TURN_COUNT = 2
MAX_TURN_COUNT = 50
MIN_AGE = 18
MAX_AGE = 100
PAUSE_MIN_SECONDS = 0.0
PAUSE_MAX_SECONDS = 5.0
# Pause applied when the generator omits one on a non-initial turn.
DEFAULT_PAUSE_SECONDS = 0.5
# Validation heuristic: a speaker may hold at most this many turns in a row.
MAX_CONSECUTIVE_SPEAKER_TURNS = 2

SETTINGS_FIELDS = (
    "scene_description",
    "temporal_context",
    "spatial_context",
    "language",
    "expected_turn_count",
    "expected_duration_seconds",
)
PROFILE_FIELDS = (
    "name",
    "gender",
    "age",
    "occupation",
    "nationality",
    "personality_traits",
    "speaking_style",
    "relationship_to_other",
)
CONTEXT_FIELDS = ("topic", "main_goal", "key_points", "emotional_arc")
# 6 settings + 2 x 8 profile + 4 context = 26 named fields.
METADATA_FIELD_COUNT = (
    len(SETTINGS_FIELDS) + 2 * len(PROFILE_FIELDS) + len(CONTEXT_FIELDS)
)


@dataclass(frozen=True)
class Violation:
    """A single broken invariant, addressed by the path of the bad field."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class SchemaViolationError(ValueError):
    """Raised when a draft record breaks one or more invariants."""

    def __init__(self, violations: Iterable[Violation], artifact: str = "record"):
        self.violations = list(violations)
        self.artifact = artifact
        summary = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid {artifact}: {summary}")


@dataclass(frozen=True)
class ScenarioSeed:
    """Five-dimension initialization record steering metadata generation."""

    dialogue_type: str
    temporal_context: str
    spatial_context: str
    cultural_background: str
    language: str
    custom_prompt: str | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.language not in LANGUAGES:
            raise SchemaViolationError(
                [Violation("language", f"must be one of {LANGUAGES}")], "scenario seed"
            )
        for name in ("dialogue_type", "temporal_context", "spatial_context", "cultural_background"):
            if not getattr(self, name):
                raise SchemaViolationError(
                    [Violation(name, "must be non-empty")], "scenario seed"
                )
        if not isinstance(self.rng_seed, int) or isinstance(self.rng_seed, bool) or self.rng_seed < 0:
            raise SchemaViolationError(
                [Violation("rng_seed", "must be a non-negative integer")], "scenario seed"
            )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "dialogue_type": self.dialogue_type,
            "temporal_context": self.temporal_context,
            "spatial_context": self.spatial_context,
            "cultural_background": self.cultural_background,
            "language": self.language,
            "rng_seed": self.rng_seed,
        }
        if self.custom_prompt is not None:
            out["custom_prompt"] = self.custom_prompt
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioSeed":
        return cls(
            dialogue_type=data["dialogue_type"],
            temporal_context=data["temporal_context"],
            spatial_context=data["spatial_context"],
            cultural_background=data["cultural_background"],
            language=data["language"],
            custom_prompt=data.get("custom_prompt"),
            rng_seed=data.get("rng_seed", 0),
        )


@dataclass(frozen=True)
class DialogueSettings:
    scene_description: str
    temporal_context: str
    spatial_context: str
    language: str
    expected_turn_count: int
    expected_duration_seconds: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "scene_description": self.scene_description,
            "temporal_context": self.temporal_context,
            "spatial_context": self.spatial_context,
            "language": self.language,
            "expected_turn_count": self.expected_turn_count,
            "expected_duration_seconds": self.expected_duration_seconds,
        }


@dataclass(frozen=True)
class CharacterProfile:
    name: str
    gender: str
    age: int
    occupation: str
    nationality: str
    personality_traits: tuple[str, ...]
    speaking_style: str
    relationship_to_other: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "gender": self.gender,
            "age": self.age,
            "occupation": self.occupation,
            "nationality": self.nationality,
            "personality_traits": list(self.personality_traits),
            "speaking_style": self.speaking_style,
            "relationship_to_other": self.relationship_to_other,
        }


@dataclass(frozen=True)
class ConversationContext:
    topic: str
    main_goal: str
    key_points: tuple[str, ...]
    emotional_arc: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "topic": self.topic,
            "main_goal": self.main_goal,
            "key_points": list(self.key_points),
            "emotional_arc": self.emotional_arc,
        }


@dataclass(frozen=True)
class DialogueMetadata:
    """The 26-field structured foundation of a dialogue.

    Construct through :func:`validate_metadata`; direct construction skips
    the invariant checks.
    """

    settings: DialogueSettings
    character_profiles: tuple[CharacterProfile, CharacterProfile]
    conversation_context: ConversationContext

    @property
    def character_names(self) -> tuple[str, str]:
        return (self.character_profiles[0].name, self.character_profiles[1].name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "settings": self.settings.to_dict(),
            "character_profiles": [p.to_dict() for p in self.character_profiles],
            "conversation_context": self.conversation_context.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DialogueMetadata":
        return validate_metadata(data)


@dataclass(frozen=True)
class DialogueScript:
    """Natural-language blueprint derived from metadata."""

    scene: str
    narrative_flow: tuple[str, ...]
    character_behaviors: Mapping[str, str]
    emotional_progression: tuple[str, ...]

    def __post_init__(self) -> None:
        # Freeze the behavior map so the value stays shareable.
        object.__setattr__(self, "character_behaviors", dict(self.character_behaviors))

    def to_dict(self) -> dict[str, Any]:
        return {
            "scene": self.scene,
            "narrative_flow": list(self.narrative_flow),
            "character_behaviors": dict(self.character_behaviors),
            "emotional_progression": list(self.emotional_progression),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DialogueScript":
        return cls(
            scene=data["scene"],
            narrative_flow=tuple(data["narrative_flow"]),
            character_behaviors=dict(data["character_behaviors"]),
            emotional_progression=tuple(data["emotional_progression"]),
        )


@dataclass(frozen=True)
class Turn:
    """One utterance with its paralinguistic annotations."""

    turn_index: int
    speaker_name: str
    text: str
    emotion: str
    speech_rate: str
    pause_before_seconds: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn_index": self.turn_index,
            "speaker_name": self.speaker_name,
            "text": self.text,
            "emotion": self.emotion,
            "speech_rate": self.speech_rate,
            "pause_before_seconds": self.pause_before_seconds,
        }


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    turns: tuple[Turn, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "dialogue_id": self.dialogue_id,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], metadata: "DialogueMetadata") -> "Dialogue":
        return validate_dialogue(data, metadata)


@dataclass(frozen=True)
class ConsistencyAnswer:
    question_id: str
    dimension: str
    score: float
    rationale: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "dimension": self.dimension,
            "score": self.score,
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class ConsistencyReport:
    """Checklist-based cross-pipeline consistency scores."""

    answers: tuple[ConsistencyAnswer, ...]
    overall: float

    def to_dict(self) -> dict[str, Any]:
        return {"answers": [a.to_dict() for a in self.answers], "overall": self.overall}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ConsistencyReport":
        return cls(
            answers=tuple(
                ConsistencyAnswer(
                    question_id=a["question_id"],
                    dimension=a["dimension"],
                    score=a["score"],
                    rationale=a["rationale"],
                )
                for a in data["answers"]
            ),
            overall=data["overall"],
        )


@dataclass(frozen=True)
class TurnAspectScores:
    turn_index: int
    scores: tuple[float, ...]
    rationale: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn_index": self.turn_index,
            "scores": list(self.scores),
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class AspectReport:
    """Per-turn aspect scores (coherence or naturalness) plus the mean."""

    aspect_names: tuple[str, ...]
    per_turn: tuple[TurnAspectScores, ...]
    overall: float
    context_flag: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "aspect_names": list(self.aspect_names),
            "per_turn": [t.to_dict() for t in self.per_turn],
            "overall": self.overall,
        }
        if self.context_flag is not None:
            out["context_flag"] = self.context_flag
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AspectReport":
        return cls(
            aspect_names=tuple(data["aspect_names"]),
            per_turn=tuple(
                TurnAspectScores(
                    turn_index=t["turn_index"],
                    scores=tuple(t["scores"]),
                    rationale=t["rationale"],
                )
                for t in data["per_turn"]
            ),
            overall=data["overall"],
            context_flag=data.get("context_flag"),
        )


@dataclass(frozen=True)
class SpeakerSimilarity:
    """Consecutive-utterance embedding similarities for one speaker."""

    speaker_name: str
    pair_turn_indices: tuple[tuple[int, int], ...]
    similarities: tuple[float, ...]
    minimum: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "speaker_name": self.speaker_name,
            "pair_turn_indices": [list(p) for p in self.pair_turn_indices],
            "similarities": list(self.similarities),
            "minimum": self.minimum,
        }


@dataclass(frozen=True)
class ConsistencyFlag:
    speaker_name: str
    pair_turn_indices: tuple[int, int]
    similarity: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "speaker_name": self.speaker_name,
            "pair_turn_indices": list(self.pair_turn_indices),
            "similarity": self.similarity,
        }


@dataclass(frozen=True)
class SpeechReport:
    """Objective speech metrics for one synthesized dialogue."""

    per_turn_mos: tuple[float, ...]
    dialogue_mos: float
    per_turn_error_rate: tuple[float, ...]
    dialogue_error_rate: float
    metric_kind: str
    speaker_consistency: tuple[SpeakerSimilarity, ...]
    flags: tuple[ConsistencyFlag, ...]

    def min_pair_similarity(self) -> float | None:
        mins = [s.minimum for s in self.speaker_consistency if s.minimum is not None]
        return min(mins) if mins else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_turn_mos": list(self.per_turn_mos),
            "dialogue_mos": self.dialogue_mos,
            "per_turn_error_rate": list(self.per_turn_error_rate),
            "dialogue_error_rate": self.dialogue_error_rate,
            "metric_kind": self.metric_kind,
            "speaker_consistency": [s.to_dict() for s in self.speaker_consistency],
            "flags": [f.to_dict() for f in self.flags],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SpeechReport":
        return cls(
            per_turn_mos=tuple(data["per_turn_mos"]),
            dialogue_mos=data["dialogue_mos"],
            per_turn_error_rate=tuple(data["per_turn_error_rate"]),
            dialogue_error_rate=data["dialogue_error_rate"],
            metric_kind=data["metric_kind"],
            speaker_consistency=tuple(
                SpeakerSimilarity(
                    speaker_name=s["speaker_name"],
                    pair_turn_indices=tuple(tuple(p) for p in s["pair_turn_indices"]),
                    similarities=tuple(s["similarities"]),
                    minimum=s["minimum"],
                )
                for s in data["speaker_consistency"]
            ),
            flags=tuple(
                ConsistencyFlag(
                    speaker_name=f["speaker_name"],
                    pair_turn_indices=tuple(f["pair_turn_indices"]),
                    similarity=f["similarity"],
                )
                for f in data["flags"]
            ),
        )


@dataclass(frozen=True)
class GateFailure:
    metric: str
    value: float
    threshold: float

    def to_dict(self) -> dict[str, Any]:
        return {"metric": self.metric, "value": self.value, "threshold": self.threshold}


@dataclass(frozen=True)
class GateDecision:
    passed: bool
    failures: tuple[GateFailure, ...] = ()

    def __post_init__(self) -> None:
        if self.passed != (len(self.failures) == 0):
            raise ValueError("gate decision passed iff failures empty")

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "failures": [f.to_dict() for f in self.failures]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GateDecision":
        return cls(
            passed=data["passed"],
            failures=tuple(
                GateFailure(f["metric"], f["value"], f["threshold"])
                for f in data["failures"]
            ),
        )


@dataclass(frozen=True)
class QualityReport:
    """Combined content and speech quality scores plus the gate verdict."""

    consistency: ConsistencyReport | None
    coherence: AspectReport
    naturalness: AspectReport
    gate: GateDecision
    speech: SpeechReport | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "consistency": self.consistency.to_dict() if self.consistency else None,
            "coherence": self.coherence.to_dict(),
            "naturalness": self.naturalness.to_dict(),
            "speech": self.speech.to_dict() if self.speech else None,
            "gate": self.gate.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "QualityReport":
        return cls(
            consistency=(
                ConsistencyReport.from_dict(data["consistency"])
                if data.get("consistency")
                else None
            ),
            coherence=AspectReport.from_dict(data["coherence"]),
            naturalness=AspectReport.from_dict(data["naturalness"]),
            speech=SpeechReport.from_dict(data["speech"]) if data.get("speech") else None,
            gate=GateDecision.from_dict(data["gate"]),
        )


def dump_json(value: Any, *, indent: int = 2) -> str:
    """Canonical artifact serialization: UTF-8 JSON, stable key order."""

    payload = value.to_dict() if hasattr(value, "to_dict") else value
    return json.dumps(payload, indent=indent, ensure_ascii=False) + "\n"


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _check_str(
    data: Mapping[str, Any], key: str, path: str, violations: list[Violation]
) -> str | None:
    if key not in data:
        violations.append(Violation(_join(path, key), "missing field"))
        return None
    value = data[key]
    if not isinstance(value, str):
        violations.append(Violation(_join(path, key), "must be a string"))
        return None
    if not value.strip():
        violations.append(Violation(_join(path, key), "must be non-empty"))
        return None
    return value


def _check_int(
    data: Mapping[str, Any],
    key: str,
    path: str,
    violations: list[Violation],
    minimum: int | None = None,
    maximum: int | None = None,
) -> int | None:
    if key not in data:
        violations.append(Violation(_join(path, key), "missing field"))
        return None
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        violations.append(Violation(_join(path, key), "must be an integer"))
        return None
    if minimum is not None and value < minimum or maximum is not None and value > maximum:
        violations.append(
            Violation(_join(path, key), f"must be in [{minimum}, {maximum}], got {value}")
        )
        return None
    return value


def _check_number(
    data: Mapping[str, Any],
    key: str,
    path: str,
    violations: list[Violation],
    minimum: float | None = None,
    maximum: float | None = None,
    exclusive_minimum: bool = False,
) -> float | None:
    if key not in data:
        violations.append(Violation(_join(path, key), "missing field"))
        return None
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        violations.append(Violation(_join(path, key), "must be a number"))
        return None
    value = float(value)
    if minimum is not None:
        if exclusive_minimum and value <= minimum:
            violations.append(Violation(_join(path, key), f"must be > {minimum}"))
            return None
        if not exclusive_minimum and value < minimum:
            violations.append(Violation(_join(path, key), f"must be >= {minimum}"))
            return None
    if maximum is not None and value > maximum:
        violations.append(Violation(_join(path, key), f"must be <= {maximum}"))
        return None
    return value


def _check_str_list(
    data: Mapping[str, Any], key: str, path: str, violations: list[Violation]
) -> tuple[str, ...] | None:
    if key not in data:
        violations.append(Violation(_join(path, key), "missing field"))
        return None
    value = data[key]
    if not isinstance(value, (list, tuple)) or not value:
        violations.append(Violation(_join(path, key), "must be a non-empty list"))
        return None
    if not all(isinstance(v, str) and v.strip() for v in value):
        violations.append(Violation(_join(path, key), "entries must be non-empty strings"))
        return None
    return tuple(value)


def _check_no_extras(
    data: Mapping[str, Any], allowed: Sequence[str], path: str, violations: list[Violation]
) -> None:
    for key in data:
        if key not in allowed:
            violations.append(Violation(_join(path, key), "unexpected field"))


def metadata_violations(
    draft: Any, *, enforce_age_range: bool = True
) -> list[Violation]:
    """Collect every invariant violation in a metadata draft.

    `enforce_age_range` relaxes the 18..100 bound for scenarios that
    explicitly call for out-of-range characters.
    """

    violations: list[Violation] = []
    if not isinstance(draft, Mapping):
        return [Violation("", "metadata must be a JSON object")]
    _check_no_extras(
        draft, ("settings", "character_profiles", "conversation_context"), "", violations
    )

    settings = draft.get("settings")
    if not isinstance(settings, Mapping):
        violations.append(Violation("settings", "missing or not an object"))
    else:
        _check_no_extras(settings, SETTINGS_FIELDS, "settings", violations)
        _check_str(settings, "scene_description", "settings", violations)
        _check_str(settings, "temporal_context", "settings", violations)
        _check_str(settings, "spatial_context", "settings", violations)
        language = _check_str(settings, "language", "settings", violations)
        if language is not None and language not in LANGUAGES:
            violations.append(
                Violation("settings.language", f"must be one of {LANGUAGES}")
            )
        _check_int(
            settings,
            "expected_turn_count",
            "settings",
            violations,
            minimum=MIN_TURN_COUNT,
            maximum=MAX_TURN_COUNT,
        )
        _check_number(
            settings,
            "expected_duration_seconds",
            "settings",
            violations,
            minimum=0.0,
            exclusive_minimum=True,
        )

    profiles = draft.get("character_profiles")
    names: list[str] = []
    if not isinstance(profiles, (list, tuple)):
        violations.append(Violation("character_profiles", "missing or not a list"))
    elif len(profiles) != 2:
        violations.append(
            Violation("character_profiles", f"exactly 2 profiles required, got {len(profiles)}")
        )
    else:
        for i, profile in enumerate(profiles):
            path = f"character_profiles[{i}]"
            if not isinstance(profile, Mapping):
                violations.append(Violation(path, "must be an object"))
                continue
            _check_no_extras(profile, PROFILE_FIELDS, path, violations)
            name = _check_str(profile, "name", path, violations)
            if name is not None:
                names.append(name)
            _check_str(profile, "gender", path, violations)
            if enforce_age_range:
                _check_int(profile, "age", path, violations, minimum=MIN_AGE, maximum=MAX_AGE)
            else:
                _check_int(profile, "age", path, violations, minimum=0)
            _check_str(profile, "occupation", path, violations)
            _check_str(profile, "nationality", path, violations)
            _check_str_list(profile, "personality_traits", path, violations)
            _check_str(profile, "speaking_style", path, violations)
            _check_str(profile, "relationship_to_other", path, violations)
        if len(names) == 2 and names[0] == names[1]:
            violations.append(
                Violation("character_profiles", f"duplicate character name {names[0]!r}")
            )

    context = draft.get("conversation_context")
    if not isinstance(context, Mapping):
        violations.append(Violation("conversation_context", "missing or not an object"))
    else:
        _check_no_extras(context, CONTEXT_FIELDS, "conversation_context", violations)
        _check_str(context, "topic", "conversation_context", violations)
        _check_str(context, "main_goal", "conversation_context", violations)
        _check_str_list(context, "key_points", "conversation_context", violations)
        _check_str(context, "emotional_arc", "conversation_context", violations)

    return violations


def validate_metadata(draft: Any, *, enforce_age_range: bool = True) -> DialogueMetadata:
    """Build a typed DialogueMetadata from a loosely-typed draft.

    Raises SchemaViolationError carrying every violation when any
    invariant is broken.
    """

    violations = metadata_violations(draft, enforce_age_range=enforce_age_range)
    if violations:
        raise SchemaViolationError(violations, "metadata")
    settings = draft["settings"]
    profiles = tuple(
        CharacterProfile(
            name=p["name"],
            gender=p["gender"],
            age=p["age"],
            occupation=p["occupation"],
            nationality=p["nationality"],
            personality_traits=tuple(p["personality_traits"]),
            speaking_style=p["speaking_style"],
            relationship_to_other=p["relationship_to_other"],
        )
        for p in draft["character_profiles"]
    )
    context = draft["conversation_context"]
    return DialogueMetadata(
        settings=DialogueSettings(
            scene_description=settings["scene_description"],
            temporal_context=settings["temporal_context"],
            spatial_context=settings["spatial_context"],
            language=settings["language"],
            expected_turn_count=settings["expected_turn_count"],
            expected_duration_seconds=float(settings["expected_duration_seconds"]),
        ),
        character_profiles=profiles,  # type: ignore[arg-type]
        conversation_context=ConversationContext(
            topic=context["topic"],
            main_goal=context["main_goal"],
            key_points=tuple(context["key_points"]),
            emotional_arc=context["emotional_arc"],
        ),
    )


def script_violations(draft: Any, metadata: DialogueMetadata) -> list[Violation]:
    violations: list[Violation] = []
    if not isinstance(draft, Mapping):
        return [Violation("", "script must be a JSON object")]
    _check_no_extras(
        draft,
        ("scene", "narrative_flow", "character_behaviors", "emotional_progression"),
        "",
        violations,
    )
    _check_str(draft, "scene", "", violations)
    flow = _check_str_list(draft, "narrative_flow", "", violations)
    if flow is not None and metadata.settings.expected_turn_count >= 6 and len(flow) < 2:
        violations.append(
            Violation(
                "narrative_flow",
                "at least 2 phases required for dialogues of 6+ expected turns",
            )
        )
    behaviors = draft.get("character_behaviors")
    if not isinstance(behaviors, Mapping):
        violations.append(Violation("character_behaviors", "missing or not an object"))
    else:
        expected = set(metadata.character_names)
        if set(behaviors) != expected:
            violations.append(
                Violation(
                    "character_behaviors",
                    f"keys must equal metadata character names {sorted(expected)}",
                )
            )
        for name, description in behaviors.items():
            if not isinstance(description, str) or not description.strip():
                violations.append(
                    Violation(f"character_behaviors.{name}", "must be a non-empty string")
                )
    _check_str_list(draft, "emotional_progression", "", violations)
    return violations


def validate_script(draft: Any, metadata: DialogueMetadata) -> DialogueScript:
    violations = script_violations(draft, metadata)
    if violations:
        raise SchemaViolationError(violations, "script")
    return DialogueScript(
        scene=draft["scene"],
        narrative_flow=tuple(draft["narrative_flow"]),
        character_behaviors=dict(draft["character_behaviors"]),
        emotional_progression=tuple(draft["emotional_progression"]),
    )


def dialogue_violations(
    draft: Any,
    metadata: DialogueMetadata,
    *,
    max_consecutive_speaker_turns: int | None = MAX_CONSECUTIVE_SPEAKER_TURNS,
) -> list[Violation]:
    """Collect every invariant violation in a dialogue draft.

    Pass ``max_consecutive_speaker_turns=None`` to disable the
    speaker-repetition heuristic.
    """

    violations: list[Violation] = []
    if not isinstance(draft, Mapping):
        return [Violation("", "dialogue must be a JSON object")]
    _check_no_extras(draft, ("dialogue_id", "turns"), "", violations)
    dialogue_id = draft.get("dialogue_id")
    if not isinstance(dialogue_id, str) or not dialogue_id:
        violations.append(Violation("dialogue_id", "must be a non-empty string"))

    turns = draft.get("turns")
    if not isinstance(turns, (list, tuple)) or not turns:
        violations.append(Violation("turns", "must be a non-empty list"))
        return violations

    known_names = set(metadata.character_names)
    run_speaker: str | None = None
    run_length = 0
    for i, turn in enumerate(turns):
        path = f"turns[{i}]"
        if not isinstance(turn, Mapping):
            violations.append(Violation(path, "must be an object"))
            continue
        allowed = (
            "turn_index",
            "speaker_name",
            "text",
            "emotion",
            "speech_rate",
            "pause_before_seconds",
        )
        _check_no_extras(turn, allowed, path, violations)
        index = _check_int(turn, "turn_index", path, violations, minimum=0)
        if index is not None and index != i:
            violations.append(
                Violation(f"{path}.turn_index", f"must be contiguous from 0, got {index}")
            )
        speaker = _check_str(turn, "speaker_name", path, violations)
        if speaker is not None and speaker not in known_names:
            violations.append(
                Violation(f"{path}.speaker_name", f"unknown speaker {speaker!r}")
            )
        _check_str(turn, "text", path, violations)
        _check_str(turn, "emotion", path, violations)
        rate = _check_str(turn, "speech_rate", path, violations)
        if rate is not None and rate not in SPEECH_RATES:
            violations.append(
                Violation(f"{path}.speech_rate", f"must be one of {SPEECH_RATES}")
            )
        if "pause_before_seconds" in turn:
            pause = _check_number(
                turn,
                "pause_before_seconds",
                path,
                violations,
                minimum=PAUSE_MIN_SECONDS,
                maximum=PAUSE_MAX_SECONDS,
            )
            if pause is not None and i == 0 and pause != 0.0:
                violations.append(
                    Violation(f"{path}.pause_before_seconds", "must be 0 for the first turn")
                )

        if speaker is not None:
            if speaker == run_speaker:
                run_length += 1
            else:
                run_speaker, run_length = speaker, 1
            if (
                max_consecutive_speaker_turns is not None
                and run_length > max_consecutive_speaker_turns
            ):
                violations.append(
                    Violation(
                        f"{path}.speaker_name",
                        f"speaker {speaker!r} holds more than "
                        f"{max_consecutive_speaker_turns} consecutive turns",
                    )
                )
    return violations


def validate_dialogue(
    draft: Any,
    metadata: DialogueMetadata,
    *,
    max_consecutive_speaker_turns: int | None = MAX_CONSECUTIVE_SPEAKER_TURNS,
) -> Dialogue:
    """Build a typed Dialogue from a draft, cross-checked against metadata.

    Omitted pauses default to 0 on the first turn and
    DEFAULT_PAUSE_SECONDS afterwards.
    """

    violations = dialogue_violations(
        draft, metadata, max_consecutive_speaker_turns=max_consecutive_speaker_turns
    )
    if violations:
        raise SchemaViolationError(violations, "dialogue")
    built = []
    for i, turn in enumerate(draft["turns"]):
        default_pause = 0.0 if i == 0 else DEFAULT_PAUSE_SECONDS
        built.append(
            Turn(
                turn_index=turn["turn_index"],
                speaker_name=turn["speaker_name"],
                text=turn["text"],
                emotion=turn["emotion"],
                speech_rate=turn["speech_rate"],
                pause_before_seconds=float(turn.get("pause_before_seconds", default_pause)),
            )
        )
    return Dialogue(dialogue_id=draft["dialogue_id"], turns=tuple(built))
