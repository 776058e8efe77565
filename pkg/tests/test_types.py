from __future__ import annotations

import copy
import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convosynth.types import (
    GateDecision,
    GateFailure,
    SchemaViolationError,
    dialogue_violations,
    dump_json,
    metadata_violations,
    validate_dialogue,
    validate_metadata,
)
from conftest import VALID_METADATA


def test_valid_metadata_accepted(metadata_draft):
    metadata = validate_metadata(metadata_draft)
    assert metadata.character_names == ("Maya", "Omar")
    assert metadata.settings.expected_turn_count == 10


def test_turn_count_zero_rejected(metadata_draft):
    metadata_draft["settings"]["expected_turn_count"] = 0
    violations = metadata_violations(metadata_draft)
    assert len(violations) == 1
    assert violations[0].path == "settings.expected_turn_count"


def test_duplicate_character_names_rejected(metadata_draft):
    metadata_draft["character_profiles"][1]["name"] = "Maya"
    violations = metadata_violations(metadata_draft)
    assert len(violations) == 1
    assert violations[0].path == "character_profiles"
    assert "duplicate" in violations[0].message


# Each mutation breaks exactly one invariant and must produce exactly one
# violation at the mutated path.
METADATA_MUTATIONS = [
    (lambda d: d["settings"].pop("scene_description"), "settings.scene_description"),
    (lambda d: d["settings"].__setitem__("language", "fr"), "settings.language"),
    (lambda d: d["settings"].__setitem__("expected_turn_count", 51), "settings.expected_turn_count"),
    (lambda d: d["settings"].__setitem__("expected_turn_count", "ten"), "settings.expected_turn_count"),
    (lambda d: d["settings"].__setitem__("expected_duration_seconds", 0), "settings.expected_duration_seconds"),
    (lambda d: d["character_profiles"][0].__setitem__("age", 17), "character_profiles[0].age"),
    (lambda d: d["character_profiles"][1].__setitem__("age", 101), "character_profiles[1].age"),
    (lambda d: d["character_profiles"][0].__setitem__("personality_traits", []), "character_profiles[0].personality_traits"),
    (lambda d: d["character_profiles"][1].pop("occupation"), "character_profiles[1].occupation"),
    (lambda d: d["conversation_context"].__setitem__("topic", "  "), "conversation_context.topic"),
    (lambda d: d["conversation_context"].pop("key_points"), "conversation_context.key_points"),
    (lambda d: d["settings"].__setitem__("unexpected", 1), "settings.unexpected"),
]


@pytest.mark.parametrize("mutate, path", METADATA_MUTATIONS)
def test_single_mutation_single_violation(mutate, path):
    draft = copy.deepcopy(VALID_METADATA)
    mutate(draft)
    violations = metadata_violations(draft)
    assert [v.path for v in violations] == [path]


def test_validate_metadata_raises_with_all_violations(metadata_draft):
    metadata_draft["settings"]["expected_turn_count"] = 0
    metadata_draft["character_profiles"][0]["age"] = 5
    with pytest.raises(SchemaViolationError) as excinfo:
        validate_metadata(metadata_draft)
    paths = {v.path for v in excinfo.value.violations}
    assert paths == {"settings.expected_turn_count", "character_profiles[0].age"}


def test_age_range_override(metadata_draft):
    metadata_draft["character_profiles"][0]["age"] = 12
    assert metadata_violations(metadata_draft, enforce_age_range=False) == []


def test_metadata_round_trip(metadata):
    parsed = json.loads(dump_json(metadata))
    assert validate_metadata(parsed) == metadata


def test_valid_dialogue_accepted(metadata, dialogue_draft):
    dialogue = validate_dialogue(dialogue_draft, metadata)
    assert [t.turn_index for t in dialogue.turns] == [0, 1, 2, 3]
    assert dialogue.turns[0].pause_before_seconds == 0.0


def test_unknown_speaker_rejected(metadata, dialogue_draft):
    dialogue_draft["turns"][1]["speaker_name"] = "Narrator"
    violations = dialogue_violations(dialogue_draft, metadata)
    assert len(violations) == 1
    assert violations[0].path == "turns[1].speaker_name"
    assert "unknown speaker" in violations[0].message


def test_pause_out_of_range_rejected(metadata, dialogue_draft):
    dialogue_draft["turns"][2]["pause_before_seconds"] = 9.0
    violations = dialogue_violations(dialogue_draft, metadata)
    assert [v.path for v in violations] == ["turns[2].pause_before_seconds"]


def test_non_contiguous_indices_rejected(metadata, dialogue_draft):
    dialogue_draft["turns"][3]["turn_index"] = 7
    violations = dialogue_violations(dialogue_draft, metadata)
    assert [v.path for v in violations] == ["turns[3].turn_index"]


def test_invalid_speech_rate_rejected(metadata, dialogue_draft):
    dialogue_draft["turns"][0]["speech_rate"] = "very fast"
    violations = dialogue_violations(dialogue_draft, metadata)
    assert [v.path for v in violations] == ["turns[0].speech_rate"]


def test_first_turn_pause_must_be_zero(metadata, dialogue_draft):
    dialogue_draft["turns"][0]["pause_before_seconds"] = 0.5
    violations = dialogue_violations(dialogue_draft, metadata)
    assert [v.path for v in violations] == ["turns[0].pause_before_seconds"]


def test_speaker_repetition_rule(metadata, dialogue_draft):
    for turn in dialogue_draft["turns"][1:]:
        turn["speaker_name"] = "Maya"
    dialogue_draft["turns"][0]["speaker_name"] = "Maya"
    violations = dialogue_violations(dialogue_draft, metadata)
    assert violations
    assert all("consecutive" in v.message for v in violations)
    # heuristic is configurable off
    assert dialogue_violations(dialogue_draft, metadata, max_consecutive_speaker_turns=None) == []


def test_omitted_pause_defaults(metadata, dialogue_draft):
    for turn in dialogue_draft["turns"]:
        turn.pop("pause_before_seconds")
    dialogue = validate_dialogue(dialogue_draft, metadata)
    assert dialogue.turns[0].pause_before_seconds == 0.0
    assert all(t.pause_before_seconds == 0.5 for t in dialogue.turns[1:])


def test_dialogue_round_trip(metadata, dialogue):
    parsed = json.loads(dump_json(dialogue))
    assert validate_dialogue(parsed, metadata) == dialogue


def test_script_round_trip(metadata):
    from convosynth.types import DialogueScript, validate_script

    script = DialogueScript(
        scene="a cafe",
        narrative_flow=("opening", "closing"),
        character_behaviors={"Maya": "asks", "Omar": "answers"},
        emotional_progression=("calm", "warm"),
    )
    parsed = json.loads(dump_json(script))
    assert validate_script(parsed, metadata) == script


def test_types_immutable(metadata, dialogue):
    with pytest.raises(dataclasses.FrozenInstanceError):
        metadata.settings.language = "zh"
    with pytest.raises(dataclasses.FrozenInstanceError):
        dialogue.turns[0].text = "changed"


def test_quality_report_round_trip():
    from convosynth.types import (
        AspectReport,
        ConsistencyAnswer,
        ConsistencyReport,
        QualityReport,
        TurnAspectScores,
    )

    aspect = AspectReport(
        aspect_names=("a1", "a2", "a3", "a4", "a5"),
        per_turn=(TurnAspectScores(turn_index=0, scores=(90, 91, 92, 93, 94), rationale="r"),),
        overall=92.0,
    )
    report = QualityReport(
        consistency=ConsistencyReport(
            answers=(ConsistencyAnswer("q1", "scenario_metadata", 95.0, "ok"),),
            overall=95.0,
        ),
        coherence=aspect,
        naturalness=aspect,
        speech=None,
        gate=GateDecision(passed=True),
    )
    parsed = QualityReport.from_dict(json.loads(dump_json(report)))
    assert parsed == report


def test_gate_decision_invariant():
    assert GateDecision(passed=True).passed
    failure = GateFailure("mos", 2.5, 3.0)
    decision = GateDecision(passed=False, failures=(failure,))
    assert decision.failures[0].metric == "mos"
    with pytest.raises(ValueError):
        GateDecision(passed=True, failures=(failure,))
    with pytest.raises(ValueError):
        GateDecision(passed=False, failures=())


_name = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll")), min_size=1, max_size=12
)


@st.composite
def metadata_drafts(draw):
    names = draw(st.lists(_name, min_size=2, max_size=2, unique=True))
    def profile(name, other):
        return {
            "name": name,
            "gender": draw(st.sampled_from(["female", "male"])),
            "age": draw(st.integers(min_value=18, max_value=100)),
            "occupation": draw(_name),
            "nationality": draw(_name),
            "personality_traits": draw(st.lists(_name, min_size=1, max_size=3)),
            "speaking_style": draw(_name),
            "relationship_to_other": other,
        }
    return {
        "settings": {
            "scene_description": draw(_name),
            "temporal_context": draw(_name),
            "spatial_context": draw(_name),
            "language": draw(st.sampled_from(["en", "zh"])),
            "expected_turn_count": draw(st.integers(min_value=2, max_value=50)),
            "expected_duration_seconds": draw(
                st.floats(min_value=1.0, max_value=3600.0, allow_nan=False)
            ),
        },
        "character_profiles": [profile(names[0], "friend"), profile(names[1], "friend")],
        "conversation_context": {
            "topic": draw(_name),
            "main_goal": draw(_name),
            "key_points": draw(st.lists(_name, min_size=1, max_size=4)),
            "emotional_arc": draw(_name),
        },
    }


@settings(max_examples=50, deadline=None)
@given(metadata_drafts())
def test_metadata_round_trip_property(draft):
    metadata = validate_metadata(draft)
    parsed = json.loads(dump_json(metadata))
    assert validate_metadata(parsed) == metadata
