"""Schema-constrained chat completion with parse-and-reprompt retries."""

from __future__ import annotations

import json
import re
from typing import Any, Callable

import jsonschema

from .base import ChatBackend, ChatRequest, StructuredOutputError

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)\s*```", re.IGNORECASE | re.DOTALL)

REPAIR_INSTRUCTION = (
    "The previous response could not be used:\n{error}\n\n"
    "Previous response:\n{raw}\n\n"
    "Respond again with only a valid JSON document matching the schema."
)


def extract_json(text: str) -> Any:
    """Parse the first JSON document in `text`, tolerating code fences."""

    candidates: list[str] = []
    fenced = _FENCE_RE.search(text)
    if fenced and fenced.group(1):
        candidates.append(fenced.group(1))
    stripped = text.strip()
    if stripped:
        candidates.append(stripped)
    decoder = json.JSONDecoder()
    for candidate in candidates:
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            pass
    starts = [i for i in (text.find("{"), text.find("[")) if i != -1]
    if starts:
        try:
            value, _ = decoder.raw_decode(text[min(starts):])
            return value
        except json.JSONDecodeError:
            pass
    raise json.JSONDecodeError("no JSON document found in response", text, 0)


def chat_complete_structured(
    backend: ChatBackend,
    request: ChatRequest,
    max_retries: int = 2,
    postprocess: Callable[[Any], Any] | None = None,
) -> tuple[Any, int]:
    """Run a chat completion whose output must parse under request.schema.

    On parse/validation failure the request is re-issued with the error
    appended, up to `max_retries` extra attempts.  `postprocess` may apply
    domain validation (raising ValueError) on the parsed document; its
    return value is what the caller receives.  Returns (value, attempts).
    """

    if request.schema is None:
        raise ValueError("chat_complete_structured requires request.schema")

    current = request
    raw = ""
    last_error = ""
    attempts = 0
    for attempt in range(1 + max_retries):
        attempts = attempt + 1
        raw = backend.complete(current)
        try:
            parsed = extract_json(raw)
            jsonschema.validate(parsed, request.schema)
            value = postprocess(parsed) if postprocess is not None else parsed
            return value, attempts
        except (json.JSONDecodeError, jsonschema.ValidationError, ValueError) as exc:
            last_error = str(exc)
            current = ChatRequest(
                system_prompt=request.system_prompt,
                user_prompt=(
                    request.user_prompt
                    + "\n\n"
                    + REPAIR_INSTRUCTION.format(error=last_error, raw=raw[:2000])
                ),
                schema=request.schema,
                temperature=request.temperature,
                max_output_tokens=request.max_output_tokens,
            )
    raise StructuredOutputError(
        f"structured output failed: {last_error}", raw_text=raw, attempts=attempts
    )
