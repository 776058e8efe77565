"""HTTP clients for the five model services.

The chat client speaks the de-facto chat-completions JSON shape (messages
array, optional response_format schema) so any standard LLM server works.
The speech services use this repo's JSON + base64-WAV POST contract:

    POST {url}/synthesize  {"text", "voice": {"voice_id", "transcript",
                            "audio_wav_base64"}, "control_prompt"}
                           -> {"audio_wav_base64"}
    POST {url}/transcribe  {"audio_wav_base64", "language"} -> {"text"}
    POST {url}/score       {"audio_wav_base64"} -> {"mos"}
    POST {url}/embed       {"audio_wav_base64"} -> {"embedding": [...]}

Transient failures (connection errors, timeouts, HTTP 5xx) are retried
with exponential backoff up to the configured max_retries.
"""

from __future__ import annotations

import base64
import time
from typing import Any, Callable

import numpy as np
import requests

from ..audio import AudioClip, clip_from_wav_bytes, clip_to_wav_bytes
from .base import (
    BackendConfig,
    BackendError,
    BackendTimeoutError,
    ChatRequest,
    HTTPStatusError,
    TokenBucket,
    TransportError,
    VoicePrompt,
    require_clip,
    require_tts_inputs,
    with_retries,
)


class _RetryableStatus(BackendError):
    def __init__(self, status_code: int, detail: str):
        self.status_code = status_code
        super().__init__(f"HTTP {status_code}: {detail}")


class HttpClientBase:
    def __init__(
        self,
        config: BackendConfig,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._session = session or requests.Session()
        self._sleep = sleep
        self._bucket = (
            TokenBucket(config.requests_per_second)
            if config.requests_per_second is not None
            else None
        )

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        url = self.config.endpoint_url.rstrip("/") + path
        headers = {"Content-Type": "application/json"}
        if self.config.auth_token:
            headers["Authorization"] = f"Bearer {self.config.auth_token}"

        def attempt() -> dict[str, Any]:
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                response = self._session.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout_seconds
                )
            except requests.Timeout as exc:
                raise BackendTimeoutError(f"timeout after {self.config.timeout_seconds}s: {url}") from exc
            except requests.RequestException as exc:
                raise TransportError(f"transport failure for {url}: {exc}") from exc
            if response.status_code >= 500:
                raise _RetryableStatus(response.status_code, response.text[:500])
            if response.status_code >= 400:
                raise HTTPStatusError(response.status_code, response.text[:500])
            try:
                return response.json()
            except ValueError as exc:
                raise BackendError(f"non-JSON response from {url}") from exc

        return with_retries(
            attempt,
            max_retries=self.config.max_retries,
            retry_on=(TransportError, _RetryableStatus),
            sleep=self._sleep,
        )


class ChatHttpBackend(HttpClientBase):
    """Client for chat-completions style LLM servers."""

    def complete(self, request: ChatRequest) -> str:
        payload: dict[str, Any] = {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.schema is not None:
            payload["response_format"] = {
                "type": "json_schema",
                "json_schema": {
                    "name": request.schema.get("title", "response"),
                    "schema": request.schema,
                    "strict": True,
                },
            }
        data = self._post("/chat/completions", payload)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat completion response: {data}") from exc
        if not isinstance(content, str):
            raise BackendError("chat completion content is not text")
        return content


def _clip_b64(clip: AudioClip) -> str:
    return base64.b64encode(clip_to_wav_bytes(clip)).decode("ascii")


class TtsHttpBackend(HttpClientBase):
    supports_control_prompts = True

    def synthesize(
        self, text: str, voice_prompt: VoicePrompt, control_prompt: str | None = None
    ) -> AudioClip:
        require_tts_inputs(text, voice_prompt)
        data = self._post(
            "/synthesize",
            {
                "text": text,
                "voice": {
                    "voice_id": voice_prompt.voice_id,
                    "transcript": voice_prompt.transcript,
                    "audio_wav_base64": _clip_b64(voice_prompt.clip),
                },
                "control_prompt": control_prompt,
            },
        )
        encoded = data.get("audio_wav_base64")
        if not encoded:
            raise BackendError("TTS backend returned no audio")
        clip = clip_from_wav_bytes(base64.b64decode(encoded))
        if clip.is_empty():
            raise BackendError("TTS backend returned empty audio")
        return clip


class AsrHttpBackend(HttpClientBase):
    def transcribe(self, clip: AudioClip, language: str) -> str:
        if clip.is_empty():
            raise ValueError("cannot transcribe a zero-length clip")
        data = self._post(
            "/transcribe", {"audio_wav_base64": _clip_b64(clip), "language": language}
        )
        text = data.get("text")
        if not isinstance(text, str):
            raise BackendError("ASR backend returned no text field")
        return text


class MosHttpBackend(HttpClientBase):
    def score(self, clip: AudioClip) -> float:
        require_clip(clip, 0.1, "MOS scoring")
        data = self._post("/score", {"audio_wav_base64": _clip_b64(clip)})
        mos = data.get("mos")
        if not isinstance(mos, (int, float)) or not 1.0 <= float(mos) <= 5.0:
            raise BackendError(f"MOS backend returned invalid score: {mos!r}")
        return float(mos)


class EmbeddingHttpBackend(HttpClientBase):
    def __init__(self, config: BackendConfig, dimension: int = 512, **kwargs: Any):
        super().__init__(config, **kwargs)
        self.dimension = dimension

    def embed(self, clip: AudioClip) -> np.ndarray:
        require_clip(clip, 0.5, "speaker embedding")
        data = self._post("/embed", {"audio_wav_base64": _clip_b64(clip)})
        embedding = data.get("embedding")
        if not isinstance(embedding, list) or not embedding:
            raise BackendError("embedding backend returned no vector")
        vector = np.asarray(embedding, dtype=np.float64)
        if float(np.linalg.norm(vector)) == 0.0:
            raise BackendError("embedding backend returned a zero vector")
        return vector
