"""LLM-as-judge content evaluation: consistency, coherence, naturalness.

The judge only supplies per-question and per-turn scores; every aggregate
is recomputed locally and never trusted from the model.  Judge prompts are
pure renderings of their inputs, so identical inputs produce identical
prompt bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping

from . import schemas
from .assets import load_asset_json
from .backends.base import ChatBackend, ChatRequest
from .backends.structured import chat_complete_structured
from .templates import PromptLibrary
from .types import (
    AspectReport,
    ConsistencyAnswer,
    ConsistencyReport,
    Dialogue,
    DialogueMetadata,
    DialogueScript,
    ScenarioSeed,
    TurnAspectScores,
)

JUDGE_TEMPERATURE = 0.0

COHERENCE_ASPECTS = (
    "topic_relevance",
    "response_appropriateness",
    "logical_flow",
    "absence_of_contradictions",
    "overall_coherence",
)
NATURALNESS_ASPECTS = (
    "oral_style",
    "utterance_length_and_rhythm",
    "emotion_appropriateness",
    "content_emotion_fit",
    "vocabulary_naturalness",
)

CONSISTENCY_DIMENSIONS = ("scenario_metadata", "metadata_internal", "cross_component")
EXPECTED_DIMENSION_COUNTS = {"scenario_metadata": 5, "metadata_internal": 7, "cross_component": 7}

DIALOGUE_ONLY_FLAG = "dialogue_only"


@dataclass(frozen=True)
class ChecklistQuestion:
    question_id: str
    dimension: str
    text: str


def load_checklist() -> tuple[ChecklistQuestion, ...]:
    data = load_asset_json("consistency_checklist.json")
    questions = tuple(
        ChecklistQuestion(q["question_id"], q["dimension"], q["text"])
        for q in data["questions"]
    )
    counts = {dim: 0 for dim in CONSISTENCY_DIMENSIONS}
    for question in questions:
        counts[question.dimension] += 1
    if counts != EXPECTED_DIMENSION_COUNTS:
        raise ValueError(f"checklist asset has wrong dimension counts: {counts}")
    return questions


def _dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False)


def evaluate_consistency(
    seed: ScenarioSeed,
    metadata: DialogueMetadata,
    script: DialogueScript,
    dialogue: Dialogue,
    judge_backend: ChatBackend,
    library: PromptLibrary | None = None,
    max_retries: int = 2,
) -> ConsistencyReport:
    """Fill the 19-question checklist in one holistic judge call."""

    library = library or PromptLibrary()
    checklist = load_checklist()
    by_id = {q.question_id: q for q in checklist}
    system_tpl, user_tpl = library.pair("judge_consistency")
    request = ChatRequest(
        system_prompt=system_tpl.render({}),
        user_prompt=user_tpl.render(
            {
                "checklist_json": _dumps(
                    [
                        {"question_id": q.question_id, "dimension": q.dimension, "text": q.text}
                        for q in checklist
                    ]
                ),
                "seed_json": _dumps(seed.to_dict()),
                "metadata_json": _dumps(metadata.to_dict()),
                "script_json": _dumps(script.to_dict()),
                "dialogue_json": _dumps(dialogue.to_dict()),
            }
        ),
        schema=schemas.CONSISTENCY_SCHEMA,
        temperature=JUDGE_TEMPERATURE,
    )

    def build(parsed: Mapping[str, Any]) -> ConsistencyReport:
        raw_answers = parsed["answers"]
        if len(raw_answers) != len(checklist):
            raise ValueError(
                f"checklist incomplete: expected {len(checklist)} answers, "
                f"got {len(raw_answers)}"
            )
        answered_ids = [a["question_id"] for a in raw_answers]
        if sorted(answered_ids) != sorted(by_id):
            raise ValueError(
                "checklist incomplete: answers must cover every question_id exactly once"
            )
        answers = tuple(
            ConsistencyAnswer(
                question_id=a["question_id"],
                dimension=by_id[a["question_id"]].dimension,
                score=float(a["score"]),
                rationale=a["rationale"],
            )
            for a in raw_answers
        )
        overall = sum(a.score for a in answers) / len(answers)
        return ConsistencyReport(answers=answers, overall=overall)

    report, _ = chat_complete_structured(judge_backend, request, max_retries, postprocess=build)
    return report


def _evaluate_aspects(
    stage: str,
    schema: dict,
    aspect_names: tuple[str, ...],
    dialogue: Dialogue,
    judge_backend: ChatBackend,
    metadata: DialogueMetadata | None,
    script: DialogueScript | None,
    library: PromptLibrary | None,
    max_retries: int,
) -> AspectReport:
    if not dialogue.turns:
        raise ValueError("dialogue must have at least one turn")
    library = library or PromptLibrary()
    system_tpl, user_tpl = library.pair(stage)
    dialogue_only = metadata is None or script is None
    if dialogue_only:
        context_section = "\nJudge from the dialogue text alone; no metadata or script exists.\n"
    else:
        context_section = (
            "\nFull generation chain for context.\n\nMetadata:\n```json\n"
            + _dumps(metadata.to_dict())
            + "\n```\n\nScript:\n```json\n"
            + _dumps(script.to_dict())
            + "\n```\n"
        )
    request = ChatRequest(
        system_prompt=system_tpl.render({"aspects": ", ".join(aspect_names)}),
        user_prompt=user_tpl.render(
            {
                "context_section": context_section,
                "dialogue_json": _dumps(dialogue.to_dict()),
            }
        ),
        schema=schema,
        temperature=JUDGE_TEMPERATURE,
    )
    expected_indices = [turn.turn_index for turn in dialogue.turns]

    def build(parsed: Mapping[str, Any]) -> AspectReport:
        entries = parsed["per_turn"]
        got_indices = [entry["turn_index"] for entry in entries]
        if sorted(got_indices) != expected_indices:
            raise ValueError(
                f"per-turn scores must cover turn indices {expected_indices}, "
                f"got {sorted(got_indices)}"
            )
        per_turn = tuple(
            TurnAspectScores(
                turn_index=entry["turn_index"],
                scores=tuple(float(s) for s in entry["scores"]),
                rationale=entry["rationale"],
            )
            for entry in sorted(entries, key=lambda e: e["turn_index"])
        )
        all_scores = [score for turn in per_turn for score in turn.scores]
        return AspectReport(
            aspect_names=aspect_names,
            per_turn=per_turn,
            overall=sum(all_scores) / len(all_scores),
            context_flag=DIALOGUE_ONLY_FLAG if dialogue_only else None,
        )

    report, _ = chat_complete_structured(judge_backend, request, max_retries, postprocess=build)
    return report


def evaluate_coherence(
    metadata: DialogueMetadata | None,
    script: DialogueScript | None,
    dialogue: Dialogue,
    judge_backend: ChatBackend,
    library: PromptLibrary | None = None,
    max_retries: int = 2,
) -> AspectReport:
    """Score the five coherence aspects for every turn in one call.

    Pass metadata=None and script=None for dialogue-only evaluation (e.g.
    scoring an external corpus with no generation chain).
    """

    return _evaluate_aspects(
        "judge_coherence",
        schemas.COHERENCE_SCHEMA,
        COHERENCE_ASPECTS,
        dialogue,
        judge_backend,
        metadata,
        script,
        library,
        max_retries,
    )


def evaluate_naturalness(
    metadata: DialogueMetadata | None,
    script: DialogueScript | None,
    dialogue: Dialogue,
    judge_backend: ChatBackend,
    library: PromptLibrary | None = None,
    max_retries: int = 2,
) -> AspectReport:
    """Score the five naturalness aspects for every turn in one call."""

    return _evaluate_aspects(
        "judge_naturalness",
        schemas.NATURALNESS_SCHEMA,
        NATURALNESS_ASPECTS,
        dialogue,
        judge_backend,
        metadata,
        script,
        library,
        max_retries,
    )


@dataclass(frozen=True)
class ContentScores:
    """Overall content scores copied (never re-weighted) from the reports."""

    coherence: float
    naturalness: float
    consistency: float | None = None

    def to_dict(self) -> dict[str, float | None]:
        return {
            "consistency": self.consistency,
            "coherence": self.coherence,
            "naturalness": self.naturalness,
        }


def aggregate_content(
    coherence: AspectReport,
    naturalness: AspectReport,
    consistency: ConsistencyReport | None = None,
) -> ContentScores:
    return ContentScores(
        coherence=coherence.overall,
        naturalness=naturalness.overall,
        consistency=consistency.overall if consistency is not None else None,
    )
