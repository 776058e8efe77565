"""Structural schemas for every constrained LLM output.

Each schema's `title` identifies the stage; backends (including the
mocks) and the structured-output layer dispatch on it.
"""

from __future__ import annotations

from .types import LANGUAGES, MAX_TURN_COUNT, MIN_TURN_COUNT, SPEECH_RATES

_NONEMPTY_STRING = {"type": "string", "minLength": 1}

SCENARIO_SEED_SCHEMA = {
    "title": "scenario_seed",
    "type": "object",
    "properties": {
        "dialogue_type": _NONEMPTY_STRING,
        "temporal_context": _NONEMPTY_STRING,
        "spatial_context": _NONEMPTY_STRING,
        "cultural_background": _NONEMPTY_STRING,
        "language": {"type": "string", "enum": list(LANGUAGES)},
    },
    "required": [
        "dialogue_type",
        "temporal_context",
        "spatial_context",
        "cultural_background",
        "language",
    ],
    "additionalProperties": False,
}

METADATA_SCHEMA = {
    "title": "dialogue_metadata",
    "type": "object",
    "properties": {
        "settings": {
            "type": "object",
            "properties": {
                "scene_description": _NONEMPTY_STRING,
                "temporal_context": _NONEMPTY_STRING,
                "spatial_context": _NONEMPTY_STRING,
                "language": {"type": "string", "enum": list(LANGUAGES)},
                "expected_turn_count": {
                    "type": "integer",
                    "minimum": MIN_TURN_COUNT,
                    "maximum": MAX_TURN_COUNT,
                },
                "expected_duration_seconds": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": [
                "scene_description",
                "temporal_context",
                "spatial_context",
                "language",
                "expected_turn_count",
                "expected_duration_seconds",
            ],
            "additionalProperties": False,
        },
        "character_profiles": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": {
                "type": "object",
                "properties": {
                    "name": _NONEMPTY_STRING,
                    "gender": _NONEMPTY_STRING,
                    "age": {"type": "integer"},
                    "occupation": _NONEMPTY_STRING,
                    "nationality": _NONEMPTY_STRING,
                    "personality_traits": {
                        "type": "array",
                        "minItems": 1,
                        "items": _NONEMPTY_STRING,
                    },
                    "speaking_style": _NONEMPTY_STRING,
                    "relationship_to_other": _NONEMPTY_STRING,
                },
                "required": [
                    "name",
                    "gender",
                    "age",
                    "occupation",
                    "nationality",
                    "personality_traits",
                    "speaking_style",
                    "relationship_to_other",
                ],
                "additionalProperties": False,
            },
        },
        "conversation_context": {
            "type": "object",
            "properties": {
                "topic": _NONEMPTY_STRING,
                "main_goal": _NONEMPTY_STRING,
                "key_points": {"type": "array", "minItems": 1, "items": _NONEMPTY_STRING},
                "emotional_arc": _NONEMPTY_STRING,
            },
            "required": ["topic", "main_goal", "key_points", "emotional_arc"],
            "additionalProperties": False,
        },
    },
    "required": ["settings", "character_profiles", "conversation_context"],
    "additionalProperties": False,
}

SCRIPT_SCHEMA = {
    "title": "dialogue_script",
    "type": "object",
    "properties": {
        "scene": _NONEMPTY_STRING,
        "narrative_flow": {"type": "array", "minItems": 1, "items": _NONEMPTY_STRING},
        "character_behaviors": {
            "type": "object",
            "minProperties": 2,
            "maxProperties": 2,
            "additionalProperties": _NONEMPTY_STRING,
        },
        "emotional_progression": {"type": "array", "minItems": 1, "items": _NONEMPTY_STRING},
    },
    "required": ["scene", "narrative_flow", "character_behaviors", "emotional_progression"],
    "additionalProperties": False,
}

DIALOGUE_SCHEMA = {
    "title": "dialogue_turns",
    "type": "object",
    "properties": {
        "turns": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "turn_index": {"type": "integer", "minimum": 0},
                    "speaker_name": _NONEMPTY_STRING,
                    "text": _NONEMPTY_STRING,
                    "emotion": _NONEMPTY_STRING,
                    "speech_rate": {"type": "string", "enum": list(SPEECH_RATES)},
                    "pause_before_seconds": {"type": "number", "minimum": 0, "maximum": 5},
                },
                "required": ["turn_index", "speaker_name", "text", "emotion", "speech_rate"],
                "additionalProperties": False,
            },
        }
    },
    "required": ["turns"],
    "additionalProperties": False,
}

CONSISTENCY_SCHEMA = {
    "title": "consistency_checklist",
    "type": "object",
    "properties": {
        "answers": {
            "type": "array",
            "minItems": 19,
            "maxItems": 19,
            "items": {
                "type": "object",
                "properties": {
                    "question_id": _NONEMPTY_STRING,
                    "score": {"type": "number", "minimum": 0, "maximum": 100},
                    "rationale": {"type": "string"},
                },
                "required": ["question_id", "score", "rationale"],
                "additionalProperties": False,
            },
        }
    },
    "required": ["answers"],
    "additionalProperties": False,
}


def _aspect_schema(title: str) -> dict:
    return {
        "title": title,
        "type": "object",
        "properties": {
            "per_turn": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "properties": {
                        "turn_index": {"type": "integer", "minimum": 0},
                        "scores": {
                            "type": "array",
                            "minItems": 5,
                            "maxItems": 5,
                            "items": {"type": "number", "minimum": 0, "maximum": 100},
                        },
                        "rationale": {"type": "string"},
                    },
                    "required": ["turn_index", "scores", "rationale"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["per_turn"],
        "additionalProperties": False,
    }


COHERENCE_SCHEMA = _aspect_schema("coherence_aspects")
NATURALNESS_SCHEMA = _aspect_schema("naturalness_aspects")
