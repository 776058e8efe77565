"""Clients for the external model services plus deterministic mocks."""

from .base import (
    BackendConfig,
    BackendError,
    BackendSet,
    BackendTimeoutError,
    ChatBackend,
    ChatRequest,
    HTTPStatusError,
    StructuredOutputError,
    TokenBucket,
    TransportError,
    VoicePrompt,
)
from .http import (
    AsrHttpBackend,
    ChatHttpBackend,
    EmbeddingHttpBackend,
    MosHttpBackend,
    TtsHttpBackend,
)
from .mock import (
    MockAsrBackend,
    MockBackendSuite,
    MockChatBackend,
    MockMosBackend,
    MockSpeakerEmbedder,
    MockTtsBackend,
)
from .structured import chat_complete_structured, extract_json

__all__ = [
    "AsrHttpBackend",
    "BackendConfig",
    "BackendError",
    "BackendSet",
    "BackendTimeoutError",
    "ChatBackend",
    "ChatHttpBackend",
    "ChatRequest",
    "EmbeddingHttpBackend",
    "HTTPStatusError",
    "MockAsrBackend",
    "MockBackendSuite",
    "MockChatBackend",
    "MockMosBackend",
    "MockSpeakerEmbedder",
    "MockTtsBackend",
    "MosHttpBackend",
    "StructuredOutputError",
    "TokenBucket",
    "TransportError",
    "TtsHttpBackend",
    "VoicePrompt",
    "chat_complete_structured",
    "extract_json",
]
