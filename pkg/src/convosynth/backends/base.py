"""Shared contracts for the five external model services.

A backend set bundles one client per service: chat LLM, TTS, ASR, MOS
scorer, and speaker embedder.  Live HTTP clients and deterministic mocks
implement the same call signatures, so the pipeline never knows which it
is talking to.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Protocol, runtime_checkable

import numpy as np

from ..audio import AudioClip


class BackendError(RuntimeError):
    """Base class for backend failures."""


class TransportError(BackendError):
    """Connection-level failure (after retries were exhausted)."""


class BackendTimeoutError(TransportError):
    """Request exceeded the configured timeout."""


class HTTPStatusError(BackendError):
    def __init__(self, status_code: int, detail: str = ""):
        self.status_code = status_code
        super().__init__(f"HTTP {status_code}: {detail}" if detail else f"HTTP {status_code}")


class StructuredOutputError(BackendError):
    """Model output never parsed under the requested schema."""

    def __init__(self, message: str, raw_text: str, attempts: int):
        self.raw_text = raw_text
        self.attempts = attempts
        super().__init__(f"{message} (after {attempts} attempts)")


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_prompt: str
    schema: dict[str, Any] | None = None
    temperature: float = 1.0
    max_output_tokens: int = 4096

    def __post_init__(self) -> None:
        if not self.system_prompt.strip() or not self.user_prompt.strip():
            raise ValueError("prompts must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class VoicePrompt:
    """Reference recording plus transcript conditioning a cloning TTS."""

    voice_id: str
    clip: AudioClip
    transcript: str


@dataclass(frozen=True)
class BackendConfig:
    endpoint_url: str
    model_name: str = ""
    auth_token: str | None = None
    timeout_seconds: float = 60.0
    max_retries: int = 2
    requests_per_second: float | None = None

    def __post_init__(self) -> None:
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


@runtime_checkable
class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


@runtime_checkable
class TtsBackend(Protocol):
    supports_control_prompts: bool

    def synthesize(
        self, text: str, voice_prompt: VoicePrompt, control_prompt: str | None = None
    ) -> AudioClip: ...


@runtime_checkable
class AsrBackend(Protocol):
    def transcribe(self, clip: AudioClip, language: str) -> str: ...


@runtime_checkable
class MosBackend(Protocol):
    def score(self, clip: AudioClip) -> float: ...


@runtime_checkable
class SpeakerEmbedder(Protocol):
    dimension: int

    def embed(self, clip: AudioClip) -> np.ndarray: ...


@dataclass
class BackendSet:
    """One client per external service; `judge` may alias `chat`."""

    chat: ChatBackend
    judge: ChatBackend
    tts: TtsBackend
    asr: AsrBackend
    mos: MosBackend
    embedder: SpeakerEmbedder


def require_clip(clip: AudioClip, min_seconds: float, what: str) -> None:
    if clip.duration_seconds < min_seconds:
        raise ValueError(
            f"{what} requires a clip of at least {min_seconds} s, "
            f"got {clip.duration_seconds:.3f} s"
        )


def require_tts_inputs(text: str, voice_prompt: VoicePrompt) -> None:
    if not text.strip():
        raise ValueError("text must be non-empty")
    require_clip(voice_prompt.clip, 1.0, "voice prompt")


def retry_delays(max_retries: int, base_seconds: float = 0.5, cap_seconds: float = 30.0):
    """Exponential backoff schedule; monotonically non-decreasing."""

    for attempt in range(max_retries):
        yield min(cap_seconds, base_seconds * (2**attempt))


def with_retries(
    call: Callable[[], Any],
    max_retries: int,
    retry_on: tuple[type[BaseException], ...],
    sleep: Callable[[float], None] = time.sleep,
    base_delay: float = 0.5,
) -> Any:
    """Run `call`, retrying up to max_retries times on the given errors.

    Total attempts never exceed 1 + max_retries.
    """

    delays = list(retry_delays(max_retries, base_delay))
    last: BaseException | None = None
    for attempt in range(1 + max_retries):
        try:
            return call()
        except retry_on as exc:
            last = exc
            if attempt < max_retries:
                sleep(delays[attempt])
    assert last is not None
    raise last


class TokenBucket:
    """Per-client rate limiter: `rate` tokens/s up to `capacity`."""

    def __init__(
        self,
        rate: float,
        capacity: float | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self._rate = rate
        self._capacity = capacity if capacity is not None else max(1.0, rate)
        self._tokens = self._capacity
        self._clock = clock
        self._sleep = sleep
        self._updated = clock()
        self._lock = threading.Lock()

    def acquire(self, tokens: float = 1.0) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(
                    self._capacity, self._tokens + (now - self._updated) * self._rate
                )
                self._updated = now
                if self._tokens >= tokens:
                    self._tokens -= tokens
                    return
                wait = (tokens - self._tokens) / self._rate
            self._sleep(wait)
