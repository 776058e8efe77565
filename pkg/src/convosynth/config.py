"""Batch configuration: JSON file loading, env overrides, hashing.

Backend endpoints and credentials come from the config file's `backends`
section and may be overridden by environment variables of the form
CONVOSYNTH_<SERVICE>_<FIELD>, e.g. CONVOSYNTH_CHAT_ENDPOINT_URL or
CONVOSYNTH_TTS_AUTH_TOKEN.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .backends.base import BackendConfig, BackendSet
from .backends.http import (
    AsrHttpBackend,
    ChatHttpBackend,
    EmbeddingHttpBackend,
    MosHttpBackend,
    TtsHttpBackend,
)
from .backends.mock import MockBackendSuite
from .synthesis import DEFAULT_TARGET_SAMPLE_RATE
from .types import LANGUAGES
from .voices import DEFAULT_SHORTLIST_SIZE

SERVICES = ("chat", "judge", "tts", "asr", "mos", "embedding")
ENV_PREFIX = "CONVOSYNTH"
ENV_FIELDS = ("endpoint_url", "model_name", "auth_token")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class GateThresholds:
    """Quality gate cutoffs; defaults are repo calibration values except
    the speaker-similarity floor."""

    min_consistency: float = 70.0
    min_coherence: float = 85.0
    min_naturalness: float = 80.0
    max_error_rate: float = 0.10
    min_mos: float = 3.0
    min_speaker_similarity: float = 0.9

    def to_dict(self) -> dict[str, float]:
        return {
            "min_consistency": self.min_consistency,
            "min_coherence": self.min_coherence,
            "min_naturalness": self.min_naturalness,
            "max_error_rate": self.max_error_rate,
            "min_mos": self.min_mos,
            "min_speaker_similarity": self.min_speaker_similarity,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GateThresholds":
        known = set(cls().to_dict())
        unknown = set(data) - known
        if unknown:
            raise ConfigError(
                [f"unknown gate threshold {name!r}" for name in sorted(unknown)]
            )
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class BackendSettings:
    mode: str = "mock"
    mock_seed: int = 0
    mock_latency_seconds: float = 0.0
    services: dict[str, BackendConfig] = field(default_factory=dict)

    def to_dict(self, redact: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "mode": self.mode,
            "mock_seed": self.mock_seed,
            "mock_latency_seconds": self.mock_latency_seconds,
        }
        for name, config in sorted(self.services.items()):
            out[name] = {
                "endpoint_url": config.endpoint_url,
                "model_name": config.model_name,
                "auth_token": "***" if redact and config.auth_token else config.auth_token,
                "timeout_seconds": config.timeout_seconds,
                "max_retries": config.max_retries,
                "requests_per_second": config.requests_per_second,
            }
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BackendSettings":
        services = {}
        for name in SERVICES:
            if name in data and data[name] is not None:
                raw = dict(data[name])
                services[name] = BackendConfig(
                    endpoint_url=raw["endpoint_url"],
                    model_name=raw.get("model_name", ""),
                    auth_token=raw.get("auth_token"),
                    timeout_seconds=float(raw.get("timeout_seconds", 60.0)),
                    max_retries=int(raw.get("max_retries", 2)),
                    requests_per_second=raw.get("requests_per_second"),
                )
        return cls(
            mode=data.get("mode", "mock"),
            mock_seed=int(data.get("mock_seed", 0)),
            mock_latency_seconds=float(data.get("mock_latency_seconds", 0.0)),
            services=services,
        )


@dataclass(frozen=True)
class BatchConfig:
    output_dir: Path
    sample_count: int = 1
    parallelism: int = 1
    rng_seed: int = 0
    language: str = "en"
    seed_overrides: dict[str, str] = field(default_factory=dict)
    custom_prompts: tuple[str, ...] = ()
    gates: GateThresholds = field(default_factory=GateThresholds)
    backends: BackendSettings = field(default_factory=BackendSettings)
    voice_bank: Path | None = None
    seed_catalog: Path | None = None
    target_sample_rate: int = DEFAULT_TARGET_SAMPLE_RATE
    shortlist_size: int = DEFAULT_SHORTLIST_SIZE
    turn_parallelism: int = 1

    def validate(self) -> list[str]:
        problems = []
        if self.sample_count < 1:
            problems.append("sample_count must be >= 1")
        if self.parallelism < 1:
            problems.append("parallelism must be >= 1")
        if self.turn_parallelism < 1:
            problems.append("turn_parallelism must be >= 1")
        if self.language not in LANGUAGES:
            problems.append(f"language must be one of {LANGUAGES}")
        if not str(self.output_dir):
            problems.append("output_dir is required")
        if self.backends.mode not in ("mock", "live"):
            problems.append("backends.mode must be 'mock' or 'live'")
        if self.backends.mode == "live":
            for name in ("chat", "tts", "asr", "mos", "embedding"):
                if name not in self.backends.services:
                    problems.append(f"backends.{name} is required in live mode")
        if self.voice_bank is not None and not Path(self.voice_bank).is_file():
            problems.append(f"voice_bank manifest not found: {self.voice_bank}")
        if self.seed_catalog is not None and not Path(self.seed_catalog).is_file():
            problems.append(f"seed_catalog not found: {self.seed_catalog}")
        return problems

    def to_dict(self, redact: bool = False) -> dict[str, Any]:
        return {
            "output_dir": str(self.output_dir),
            "sample_count": self.sample_count,
            "parallelism": self.parallelism,
            "rng_seed": self.rng_seed,
            "language": self.language,
            "seed_overrides": dict(self.seed_overrides),
            "custom_prompts": list(self.custom_prompts),
            "gates": self.gates.to_dict(),
            "backends": self.backends.to_dict(redact=redact),
            "voice_bank": str(self.voice_bank) if self.voice_bank else None,
            "seed_catalog": str(self.seed_catalog) if self.seed_catalog else None,
            "target_sample_rate": self.target_sample_rate,
            "shortlist_size": self.shortlist_size,
            "turn_parallelism": self.turn_parallelism,
        }

    def digest(self) -> str:
        """Hash of the generation-determining configuration.

        output_dir is excluded (outputs are relocatable) and auth tokens
        are redacted so secrets never enter hashes or manifests.
        """

        payload = self.to_dict(redact=True)
        payload.pop("output_dir")
        canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BatchConfig":
        known = {
            "output_dir",
            "sample_count",
            "parallelism",
            "rng_seed",
            "language",
            "seed_overrides",
            "custom_prompts",
            "gates",
            "backends",
            "voice_bank",
            "seed_catalog",
            "target_sample_rate",
            "shortlist_size",
            "turn_parallelism",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError([f"unknown config field {name!r}" for name in sorted(unknown)])
        if "output_dir" not in data or not str(data["output_dir"]).strip():
            raise ConfigError(["output_dir is required"])
        return cls(
            output_dir=Path(data["output_dir"]),
            sample_count=int(data.get("sample_count", 1)),
            parallelism=int(data.get("parallelism", 1)),
            rng_seed=int(data.get("rng_seed", 0)),
            language=data.get("language", "en"),
            seed_overrides=dict(data.get("seed_overrides", {})),
            custom_prompts=tuple(data.get("custom_prompts", ())),
            gates=GateThresholds.from_dict(data.get("gates", {})),
            backends=BackendSettings.from_dict(data.get("backends", {})),
            voice_bank=Path(data["voice_bank"]) if data.get("voice_bank") else None,
            seed_catalog=Path(data["seed_catalog"]) if data.get("seed_catalog") else None,
            target_sample_rate=int(data.get("target_sample_rate", DEFAULT_TARGET_SAMPLE_RATE)),
            shortlist_size=int(data.get("shortlist_size", DEFAULT_SHORTLIST_SIZE)),
            turn_parallelism=int(data.get("turn_parallelism", 1)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "BatchConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError([f"config file not found: {path}"]) from None
        except json.JSONDecodeError as exc:
            raise ConfigError(
                [f"config file {path} is not valid JSON (line {exc.lineno}): {exc.msg}"]
            ) from exc
        if not isinstance(data, dict):
            raise ConfigError([f"config file {path} must contain a JSON object"])
        return cls.from_dict(data)


def apply_env_overrides(
    settings: BackendSettings, environ: Mapping[str, str] | None = None
) -> BackendSettings:
    """Override endpoint/model/token fields from the environment."""

    env = environ if environ is not None else os.environ
    services = dict(settings.services)
    for service in SERVICES:
        updates = {}
        for field_name in ENV_FIELDS:
            key = f"{ENV_PREFIX}_{service.upper()}_{field_name.upper()}"
            if key in env and env[key]:
                updates[field_name] = env[key]
        if not updates:
            continue
        current = services.get(service)
        if current is None:
            if "endpoint_url" not in updates:
                continue
            current = BackendConfig(endpoint_url=updates["endpoint_url"])
        services[service] = replace(current, **updates)
    return replace(settings, services=services)


def build_backend_set(settings: BackendSettings) -> BackendSet:
    """Construct live or mock clients for all five services."""

    if settings.mode == "mock":
        suite = MockBackendSuite(
            seed=settings.mock_seed, latency_seconds=settings.mock_latency_seconds
        )
        return suite.as_backend_set()
    services = settings.services
    missing = [n for n in ("chat", "tts", "asr", "mos", "embedding") if n not in services]
    if missing:
        raise ConfigError([f"backends.{name} is required in live mode" for name in missing])
    chat = ChatHttpBackend(services["chat"])
    judge = ChatHttpBackend(services["judge"]) if "judge" in services else chat
    return BackendSet(
        chat=chat,
        judge=judge,
        tts=TtsHttpBackend(services["tts"]),
        asr=AsrHttpBackend(services["asr"]),
        mos=MosHttpBackend(services["mos"]),
        embedder=EmbeddingHttpBackend(services["embedding"]),
    )
