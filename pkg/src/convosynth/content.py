"""The three content-generation stages plus seed completion.

Each stage is one structured chat call: render the stage templates, ask
for schema-constrained output, then validate the parsed document against
the domain invariants (validation failures re-prompt like parse failures).
With mock backends the whole chain is bit-deterministic for a fixed seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Mapping

from . import schemas
from .backends.base import ChatBackend, ChatRequest
from .backends.structured import chat_complete_structured
from .seeds import SeedCatalog
from .templates import PromptLibrary
from .types import (
    Dialogue,
    DialogueMetadata,
    DialogueScript,
    ScenarioSeed,
    validate_dialogue,
    validate_metadata,
    validate_script,
)

# Diversity-leaning decoding defaults per stage.
SEED_COMPLETION_TEMPERATURE = 0.7
METADATA_TEMPERATURE = 0.9
SCRIPT_TEMPERATURE = 0.8
SIMULATION_TEMPERATURE = 1.0

# Turn-count deviations beyond this fraction are flagged, not rejected.
TURN_COUNT_TOLERANCE = 0.3

FLAG_TURN_COUNT_DEVIATION = "turn_count_deviation"


@dataclass(frozen=True)
class SimulationResult:
    dialogue: Dialogue
    flags: tuple[str, ...] = ()


def _dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False)


def complete_seed_from_prompt(
    custom_prompt: str,
    catalog: SeedCatalog,
    backend: ChatBackend,
    library: PromptLibrary | None = None,
    rng_seed: int = 0,
    max_retries: int = 2,
) -> ScenarioSeed:
    """Let the LLM fill the five seed dimensions for a free-form request."""

    if not custom_prompt.strip():
        raise ValueError("custom_prompt must be non-empty")
    library = library or PromptLibrary()
    system_tpl, user_tpl = library.pair("seed_completion")
    languages = ", ".join(catalog.languages)
    request = ChatRequest(
        system_prompt=system_tpl.render({"languages": languages}),
        user_prompt=user_tpl.render({"custom_prompt": custom_prompt, "languages": languages}),
        schema=schemas.SCENARIO_SEED_SCHEMA,
        temperature=SEED_COMPLETION_TEMPERATURE,
    )

    def build(parsed: Mapping[str, Any]) -> ScenarioSeed:
        if parsed["language"] not in catalog.languages:
            raise ValueError(
                f"language {parsed['language']!r} not supported by the catalog"
            )
        return ScenarioSeed(
            dialogue_type=parsed["dialogue_type"],
            temporal_context=parsed["temporal_context"],
            spatial_context=parsed["spatial_context"],
            cultural_background=parsed["cultural_background"],
            language=parsed["language"],
            custom_prompt=custom_prompt,
            rng_seed=rng_seed,
        )

    seed, _ = chat_complete_structured(backend, request, max_retries, postprocess=build)
    return seed


def generate_metadata(
    seed: ScenarioSeed,
    backend: ChatBackend,
    library: PromptLibrary | None = None,
    max_retries: int = 2,
) -> DialogueMetadata:
    """Generate and validate the 26-field metadata record for a seed."""

    library = library or PromptLibrary()
    system_tpl, user_tpl = library.pair("metadata_generation")
    custom_section = (
        f"\nUser request to honor:\n{seed.custom_prompt}\n" if seed.custom_prompt else ""
    )
    request = ChatRequest(
        system_prompt=system_tpl.render({}),
        user_prompt=user_tpl.render(
            {"seed_json": _dumps(seed.to_dict()), "custom_prompt_section": custom_section}
        ),
        schema=schemas.METADATA_SCHEMA,
        temperature=METADATA_TEMPERATURE,
    )

    def build(parsed: Mapping[str, Any]) -> DialogueMetadata:
        metadata = validate_metadata(parsed)
        if metadata.settings.language != seed.language:
            raise ValueError(
                f"metadata language {metadata.settings.language!r} must equal "
                f"seed language {seed.language!r}"
            )
        return metadata

    metadata, _ = chat_complete_structured(backend, request, max_retries, postprocess=build)
    return metadata


def generate_script(
    metadata: DialogueMetadata,
    backend: ChatBackend,
    library: PromptLibrary | None = None,
    max_retries: int = 2,
) -> DialogueScript:
    """Translate metadata into the four-part natural-language script."""

    library = library or PromptLibrary()
    system_tpl, user_tpl = library.pair("script_generation")
    request = ChatRequest(
        system_prompt=system_tpl.render({}),
        user_prompt=user_tpl.render({"metadata_json": _dumps(metadata.to_dict())}),
        schema=schemas.SCRIPT_SCHEMA,
        temperature=SCRIPT_TEMPERATURE,
    )
    script, _ = chat_complete_structured(
        backend, request, max_retries, postprocess=lambda parsed: validate_script(parsed, metadata)
    )
    return script


def default_dialogue_id(metadata: DialogueMetadata, script: DialogueScript) -> str:
    digest = hashlib.sha256()
    digest.update(_dumps(metadata.to_dict()).encode("utf-8"))
    digest.update(_dumps(script.to_dict()).encode("utf-8"))
    return f"dlg-{digest.hexdigest()[:12]}"


def simulate_dialogue(
    metadata: DialogueMetadata,
    script: DialogueScript,
    backend: ChatBackend,
    library: PromptLibrary | None = None,
    dialogue_id: str | None = None,
    max_retries: int = 2,
) -> SimulationResult:
    """Simulate the whole conversation in one structured-generation pass.

    Exactly one chat call is made (plus schema-repair retries); there is
    no per-turn iteration.  A turn count more than TURN_COUNT_TOLERANCE
    away from the expected count is flagged, not rejected.
    """

    library = library or PromptLibrary()
    dialogue_id = dialogue_id or default_dialogue_id(metadata, script)
    system_tpl, user_tpl = library.pair("dialogue_simulation")
    request = ChatRequest(
        system_prompt=system_tpl.render({}),
        user_prompt=user_tpl.render(
            {
                "metadata_json": _dumps(metadata.to_dict()),
                "script_json": _dumps(script.to_dict()),
                "expected_turn_count": str(metadata.settings.expected_turn_count),
            }
        ),
        schema=schemas.DIALOGUE_SCHEMA,
        temperature=SIMULATION_TEMPERATURE,
    )

    def build(parsed: Mapping[str, Any]) -> Dialogue:
        draft = {"dialogue_id": dialogue_id, "turns": parsed["turns"]}
        return validate_dialogue(draft, metadata)

    dialogue, _ = chat_complete_structured(backend, request, max_retries, postprocess=build)

    flags: tuple[str, ...] = ()
    expected = metadata.settings.expected_turn_count
    if abs(len(dialogue.turns) - expected) / expected > TURN_COUNT_TOLERANCE:
        flags = (FLAG_TURN_COUNT_DEVIATION,)
    return SimulationResult(dialogue=dialogue, flags=flags)
