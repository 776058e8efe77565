"""Batch execution of the full pipeline with quality gating and resume.

Per-dialogue stage order: content generation, content evaluation, content
gate, voice assignment, synthesis, speech evaluation, speech gate.  Every
attempt is persisted with all intermediates; a line-delimited manifest
(one JSON record per dialogue, appended in index order) makes interrupted
batches resumable and feeds dataset statistics.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .backends.base import BackendSet
from .config import BatchConfig, ConfigError, GateThresholds, apply_env_overrides, build_backend_set
from .content import (
    complete_seed_from_prompt,
    generate_metadata,
    generate_script,
    simulate_dialogue,
)
from .judging import (
    ContentScores,
    aggregate_content,
    evaluate_coherence,
    evaluate_consistency,
    evaluate_naturalness,
)
from .metrics import build_speech_report
from .seeds import SeedCatalog, sample_scenario_seed
from .synthesis import assemble_dialogue_audio, persist_dialogue_audio, synthesize_turns
from .templates import PromptLibrary
from .types import GateDecision, GateFailure, QualityReport, SpeechReport, dump_json
from .voices import VoiceBank, assign_voices, default_voice_bank, load_voice_bank

logger = logging.getLogger(__name__)

STATUS_PASSED = "passed"
STATUS_CONTENT_FAILED = "content_failed"
STATUS_SPEECH_FAILED = "speech_failed"
STATUS_ERROR = "error"
TERMINAL_STATUSES = (STATUS_PASSED, STATUS_CONTENT_FAILED, STATUS_SPEECH_FAILED)

MANIFEST_NAME = "manifest.jsonl"
QUARANTINE_NAME = "manifest.quarantine.jsonl"
STATS_NAME = "stats.json"


def apply_content_gate(scores: ContentScores, thresholds: GateThresholds) -> GateDecision:
    """Fail iff any content score is below its threshold; list every miss."""

    failures = []
    if scores.consistency is not None and scores.consistency < thresholds.min_consistency:
        failures.append(
            GateFailure("consistency", scores.consistency, thresholds.min_consistency)
        )
    if scores.coherence < thresholds.min_coherence:
        failures.append(GateFailure("coherence", scores.coherence, thresholds.min_coherence))
    if scores.naturalness < thresholds.min_naturalness:
        failures.append(
            GateFailure("naturalness", scores.naturalness, thresholds.min_naturalness)
        )
    return GateDecision(passed=not failures, failures=tuple(failures))


def apply_speech_gate(report: SpeechReport, thresholds: GateThresholds) -> GateDecision:
    failures = []
    if report.dialogue_mos < thresholds.min_mos:
        failures.append(GateFailure("mos", report.dialogue_mos, thresholds.min_mos))
    if report.dialogue_error_rate > thresholds.max_error_rate:
        failures.append(
            GateFailure("error_rate", report.dialogue_error_rate, thresholds.max_error_rate)
        )
    minimum = report.min_pair_similarity()
    if minimum is not None and minimum < thresholds.min_speaker_similarity:
        failures.append(
            GateFailure("speaker_similarity", minimum, thresholds.min_speaker_similarity)
        )
    return GateDecision(passed=not failures, failures=tuple(failures))


def merge_gates(content: GateDecision, speech: GateDecision | None) -> GateDecision:
    if speech is None:
        return content
    failures = content.failures + speech.failures
    return GateDecision(passed=not failures, failures=failures)


@dataclass(frozen=True)
class ManifestRecord:
    dialogue_id: str
    index: int
    status: str
    artifacts: dict[str, str] = field(default_factory=dict)
    quality: dict[str, Any] = field(default_factory=dict)
    stats: dict[str, Any] = field(default_factory=dict)
    flags: tuple[str, ...] = ()
    error: str | None = None
    config_digest: str = ""
    template_digest: str = ""
    timing: dict[str, Any] = field(default_factory=dict)

    def is_terminal(self) -> bool:
        return self.status in TERMINAL_STATUSES

    def to_dict(self) -> dict[str, Any]:
        return {
            "dialogue_id": self.dialogue_id,
            "index": self.index,
            "status": self.status,
            "artifacts": dict(self.artifacts),
            "quality": dict(self.quality),
            "stats": dict(self.stats),
            "flags": list(self.flags),
            "error": self.error,
            "config_digest": self.config_digest,
            "template_digest": self.template_digest,
            "timing": dict(self.timing),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ManifestRecord":
        return cls(
            dialogue_id=data["dialogue_id"],
            index=int(data["index"]),
            status=data["status"],
            artifacts=dict(data.get("artifacts", {})),
            quality=dict(data.get("quality", {})),
            stats=dict(data.get("stats", {})),
            flags=tuple(data.get("flags", ())),
            error=data.get("error"),
            config_digest=data.get("config_digest", ""),
            template_digest=data.get("template_digest", ""),
            timing=dict(data.get("timing", {})),
        )


def manifest_line(record: ManifestRecord) -> str:
    return json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False)


def read_manifest(path: str | Path) -> tuple[list[ManifestRecord], list[str]]:
    """Parse a manifest; corrupt lines are returned separately."""

    records: list[ManifestRecord] = []
    corrupt: list[str] = []
    manifest = Path(path)
    if not manifest.is_file():
        return records, corrupt
    for line in manifest.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            records.append(ManifestRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            corrupt.append(line)
    return records, corrupt


def latest_by_id(records: Iterable[ManifestRecord]) -> dict[str, ManifestRecord]:
    latest: dict[str, ManifestRecord] = {}
    for record in records:
        latest[record.dialogue_id] = record
    return latest


def dialogue_id_for(config_digest: str, index: int) -> str:
    short = hashlib.sha256(f"{config_digest}|{index}".encode()).hexdigest()[:8]
    return f"{index:05d}_{short}"


def _index_seed(config_digest: str, index: int) -> int:
    return int(hashlib.sha256(f"seed|{config_digest}|{index}".encode()).hexdigest()[:12], 16)


class _ManifestWriter:
    """Appends records atomically, strictly in ascending index order."""

    def __init__(self, path: Path, pending_indexes: list[int]):
        self.path = path
        self._lock = threading.Lock()
        self._queue = sorted(pending_indexes)
        self._ready: dict[int, ManifestRecord] = {}
        self.written: list[ManifestRecord] = []

    def submit(self, record: ManifestRecord, on_written: Callable[[ManifestRecord], None] | None):
        with self._lock:
            self._ready[record.index] = record
            while self._queue and self._queue[0] in self._ready:
                index = self._queue.pop(0)
                next_record = self._ready.pop(index)
                with self.path.open("a", encoding="utf-8") as handle:
                    handle.write(manifest_line(next_record) + "\n")
                    handle.flush()
                    os.fsync(handle.fileno())
                self.written.append(next_record)
                if on_written is not None:
                    on_written(next_record)


class _StageTimer:
    def __init__(self) -> None:
        self.seconds: dict[str, float] = {}

    def run(self, name: str, fn: Callable[[], Any]) -> Any:
        start = time.perf_counter()
        try:
            return fn()
        finally:
            self.seconds[name] = round(time.perf_counter() - start, 6)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _quality_summary(
    scores: ContentScores | None, speech: SpeechReport | None
) -> dict[str, Any]:
    summary: dict[str, Any] = {
        "consistency": scores.consistency if scores else None,
        "coherence": scores.coherence if scores else None,
        "naturalness": scores.naturalness if scores else None,
        "mos": None,
        "error_rate": None,
        "min_speaker_similarity": None,
    }
    if speech is not None:
        summary["mos"] = speech.dialogue_mos
        summary["error_rate"] = speech.dialogue_error_rate
        summary["min_speaker_similarity"] = speech.min_pair_similarity()
    return summary


def _produce_dialogue(
    index: int,
    config: BatchConfig,
    config_digest: str,
    backends: BackendSet,
    catalog: SeedCatalog,
    bank: VoiceBank,
    library: PromptLibrary,
    template_digest: str,
) -> ManifestRecord:
    dialogue_id = dialogue_id_for(config_digest, index)
    dialogue_dir = Path(config.output_dir) / dialogue_id
    dialogue_dir.mkdir(parents=True, exist_ok=True)
    timer = _StageTimer()
    started_at = _utc_now()
    artifacts: dict[str, str] = {}
    flags: tuple[str, ...] = ()

    def rel(name: str) -> str:
        return f"{dialogue_id}/{name}"

    def persist(name: str, value: Any) -> None:
        (dialogue_dir / name).write_text(dump_json(value), encoding="utf-8")
        artifacts[name.rsplit(".", 1)[0]] = rel(name)

    try:
        index_seed = _index_seed(config_digest, index)
        if config.custom_prompts:
            prompt = config.custom_prompts[index % len(config.custom_prompts)]
            seed = timer.run(
                "seed",
                lambda: complete_seed_from_prompt(
                    prompt, catalog, backends.chat, library, rng_seed=index_seed
                ),
            )
        else:
            overrides = {"language": config.language, **config.seed_overrides}
            seed = timer.run(
                "seed", lambda: sample_scenario_seed(catalog, overrides, rng_seed=index_seed)
            )
        persist("seed.json", seed)

        metadata = timer.run(
            "metadata", lambda: generate_metadata(seed, backends.chat, library)
        )
        persist("metadata.json", metadata)

        script = timer.run("script", lambda: generate_script(metadata, backends.chat, library))
        persist("script.json", script)

        simulation = timer.run(
            "dialogue",
            lambda: simulate_dialogue(
                metadata, script, backends.chat, library, dialogue_id=dialogue_id
            ),
        )
        dialogue = simulation.dialogue
        flags = simulation.flags
        persist("dialogue.json", dialogue)

        def run_content_eval():
            consistency = evaluate_consistency(
                seed, metadata, script, dialogue, backends.judge, library
            )
            coherence = evaluate_coherence(metadata, script, dialogue, backends.judge, library)
            naturalness = evaluate_naturalness(
                metadata, script, dialogue, backends.judge, library
            )
            return consistency, coherence, naturalness

        consistency, coherence, naturalness = timer.run("content_eval", run_content_eval)
        scores = aggregate_content(coherence, naturalness, consistency)
        content_gate = apply_content_gate(scores, config.gates)

        if not content_gate.passed:
            quality = QualityReport(
                consistency=consistency,
                coherence=coherence,
                naturalness=naturalness,
                speech=None,
                gate=content_gate,
            )
            persist("quality.json", quality)
            return ManifestRecord(
                dialogue_id=dialogue_id,
                index=index,
                status=STATUS_CONTENT_FAILED,
                artifacts=artifacts,
                quality=_quality_summary(scores, None),
                stats=_dialogue_stats(dialogue, metadata, None, None),
                flags=flags,
                config_digest=config_digest,
                template_digest=template_digest,
                timing={
                    "started_at": started_at,
                    "finished_at": _utc_now(),
                    "stages": timer.seconds,
                },
            )

        assignment = timer.run(
            "voices",
            lambda: assign_voices(
                metadata, bank, rng_seed=index_seed, shortlist_size=config.shortlist_size
            ),
        )
        persist(
            "voices.json",
            {name: entry.voice_id for name, entry in sorted(assignment.items())},
        )

        def run_synthesis():
            turns = synthesize_turns(
                dialogue,
                assignment,
                backends.tts,
                config.language,
                max_workers=config.turn_parallelism,
            )
            assembled = assemble_dialogue_audio(turns, dialogue, config.target_sample_rate)
            audio_paths = persist_dialogue_audio(dialogue_dir, turns, assembled)
            for key, value in audio_paths.items():
                artifacts[key] = rel(value)
            return turns, assembled

        turns, assembled = timer.run("synthesis", run_synthesis)

        def run_speech_eval() -> SpeechReport:
            mos_scores = [backends.mos.score(t.clip) for t in turns]
            pairs = [
                (turn.text, backends.asr.transcribe(synth.clip, config.language))
                for turn, synth in zip(dialogue.turns, turns)
            ]
            embeddings = [
                (turn.speaker_name, backends.embedder.embed(synth.clip))
                for turn, synth in zip(dialogue.turns, turns)
            ]
            return build_speech_report(
                mos_scores,
                pairs,
                embeddings,
                config.language,
                threshold=config.gates.min_speaker_similarity,
            )

        speech = timer.run("speech_eval", run_speech_eval)
        speech_gate = apply_speech_gate(speech, config.gates)
        quality = QualityReport(
            consistency=consistency,
            coherence=coherence,
            naturalness=naturalness,
            speech=speech,
            gate=merge_gates(content_gate, speech_gate),
        )
        persist("quality.json", quality)
        status = STATUS_PASSED if speech_gate.passed else STATUS_SPEECH_FAILED
        return ManifestRecord(
            dialogue_id=dialogue_id,
            index=index,
            status=status,
            artifacts=artifacts,
            quality=_quality_summary(scores, speech),
            stats=_dialogue_stats(dialogue, metadata, assignment, assembled),
            flags=flags,
            config_digest=config_digest,
            template_digest=template_digest,
            timing={
                "started_at": started_at,
                "finished_at": _utc_now(),
                "stages": timer.seconds,
            },
        )
    except Exception as exc:  # per-dialogue errors never abort the batch
        logger.exception("dialogue %s failed", dialogue_id)
        return ManifestRecord(
            dialogue_id=dialogue_id,
            index=index,
            status=STATUS_ERROR,
            artifacts=artifacts,
            flags=flags,
            error=f"{type(exc).__name__}: {exc}",
            config_digest=config_digest,
            template_digest=template_digest,
            timing={
                "started_at": started_at,
                "finished_at": _utc_now(),
                "stages": timer.seconds,
            },
        )


def _dialogue_stats(dialogue, metadata, assignment, assembled) -> dict[str, Any]:
    stats: dict[str, Any] = {
        "turn_count": len(dialogue.turns),
        "language": metadata.settings.language,
        "topic": metadata.conversation_context.topic,
        "emotions": sorted({turn.emotion for turn in dialogue.turns}),
    }
    if assignment is not None:
        stats["voice_ids"] = sorted(entry.voice_id for entry in assignment.values())
    if assembled is not None:
        stats["duration_seconds"] = assembled.clip.duration_seconds
    return stats


def run_batch(
    config: BatchConfig,
    backends: BackendSet | None = None,
    on_record: Callable[[ManifestRecord], None] | None = None,
) -> list[ManifestRecord]:
    """Produce `sample_count` dialogues with up to `parallelism` in flight.

    Ids already terminal in the existing manifest are skipped, so rerunning
    the same config resumes.  Every attempted id appends one record; the
    returned list covers all sample indexes in order.
    """

    problems = config.validate()
    if problems:
        raise ConfigError(problems)
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    settings = apply_env_overrides(config.backends)
    backend_set = backends if backends is not None else build_backend_set(settings)
    catalog = SeedCatalog.load(config.seed_catalog)
    bank = load_voice_bank(config.voice_bank) if config.voice_bank else default_voice_bank()
    library = PromptLibrary()
    template_digest = library.combined_digest()
    config_digest = config.digest()

    manifest_path = output_dir / MANIFEST_NAME
    existing, corrupt = read_manifest(manifest_path)
    if corrupt:
        quarantine = output_dir / QUARANTINE_NAME
        with quarantine.open("a", encoding="utf-8") as handle:
            for line in corrupt:
                handle.write(line + "\n")
        logger.warning(
            "quarantined %d corrupt manifest lines to %s", len(corrupt), quarantine
        )
        _rewrite_manifest(manifest_path, existing)
    kept = latest_by_id(existing)

    pending: list[int] = []
    for index in range(config.sample_count):
        dialogue_id = dialogue_id_for(config_digest, index)
        record = kept.get(dialogue_id)
        if record is not None and record.is_terminal():
            continue
        pending.append(index)

    writer = _ManifestWriter(manifest_path, pending)
    if pending:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [
                pool.submit(
                    _produce_dialogue,
                    index,
                    config,
                    config_digest,
                    backend_set,
                    catalog,
                    bank,
                    library,
                    template_digest,
                )
                for index in pending
            ]
            for future in as_completed(futures):
                writer.submit(future.result(), on_record)

    final, _ = read_manifest(manifest_path)
    by_id = latest_by_id(final)
    results = []
    for index in range(config.sample_count):
        record = by_id.get(dialogue_id_for(config_digest, index))
        if record is not None:
            results.append(record)
    return results


def _rewrite_manifest(path: Path, records: list[ManifestRecord]) -> None:
    tmp = path.with_suffix(".tmp")
    with tmp.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(manifest_line(record) + "\n")
    tmp.replace(path)


def resume_batch(config: BatchConfig, backends: BackendSet | None = None) -> list[ManifestRecord]:
    """Resume an interrupted batch: terminal ids skipped, errored retried.

    Corrupt manifest lines are quarantined before work restarts.
    """

    manifest_path = Path(config.output_dir) / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ConfigError([f"no manifest to resume at {manifest_path}"])
    return run_batch(config, backends=backends)


@dataclass(frozen=True)
class DatasetStats:
    """The dataset-statistics schema: turns, durations, dialogues, variety."""

    num_turns: int
    total_duration_seconds: float
    avg_duration_per_turn_seconds: float
    num_dialogues: int
    avg_duration_per_dialogue_seconds: float
    avg_turns_per_dialogue: float
    num_voices: int
    num_topics: int
    num_emotions: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_turns": self.num_turns,
            "total_duration_seconds": round(self.total_duration_seconds, 3),
            "avg_duration_per_turn_seconds": round(self.avg_duration_per_turn_seconds, 3),
            "num_dialogues": self.num_dialogues,
            "avg_duration_per_dialogue_seconds": round(
                self.avg_duration_per_dialogue_seconds, 3
            ),
            "avg_turns_per_dialogue": round(self.avg_turns_per_dialogue, 3),
            "num_voices": self.num_voices,
            "num_topics": self.num_topics,
            "num_emotions": self.num_emotions,
        }


def compute_dataset_stats(
    records: Iterable[ManifestRecord], statuses: tuple[str, ...] = (STATUS_PASSED,)
) -> DatasetStats:
    """Aggregate manifest records (passed dialogues by default)."""

    num_turns = 0
    total_duration = 0.0
    num_dialogues = 0
    voices: set[str] = set()
    topics: set[str] = set()
    emotions: set[str] = set()
    for record in records:
        if record.status not in statuses:
            continue
        stats = record.stats
        if not stats:
            continue
        num_dialogues += 1
        num_turns += int(stats.get("turn_count", 0))
        total_duration += float(stats.get("duration_seconds", 0.0))
        voices.update(stats.get("voice_ids", ()))
        if stats.get("topic"):
            topics.add(stats["topic"])
        emotions.update(stats.get("emotions", ()))
    if num_dialogues == 0:
        raise ValueError("no dialogues with the requested statuses; nothing to aggregate")
    return DatasetStats(
        num_turns=num_turns,
        total_duration_seconds=total_duration,
        avg_duration_per_turn_seconds=total_duration / num_turns if num_turns else 0.0,
        num_dialogues=num_dialogues,
        avg_duration_per_dialogue_seconds=total_duration / num_dialogues,
        avg_turns_per_dialogue=num_turns / num_dialogues,
        num_voices=len(voices),
        num_topics=len(topics),
        num_emotions=len(emotions),
    )


def write_stats(output_dir: str | Path, stats: DatasetStats) -> Path:
    path = Path(output_dir) / STATS_NAME
    path.write_text(json.dumps(stats.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path
