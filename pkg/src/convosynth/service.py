"""HTTP service for stage-by-stage generation and sample inspection.

Sessions advance through the pipeline one stage at a time (seed,
metadata, script, dialogue, voices, speech, evaluate); calling a stage
whose predecessor is missing yields 409, and re-running a stage discards
everything downstream.  Batch work never happens here; the service only
builds the CLI command for it.  Payloads are the canonical artifact
serializations, so UIs need no second schema.
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware

from .audio import clip_to_wav_bytes, read_wav
from .backends.base import BackendError, BackendSet
from .cli import build_batch_command, parse_batch_command
from .config import (
    BackendSettings,
    BatchConfig,
    ConfigError,
    GateThresholds,
    build_backend_set,
)
from .content import generate_metadata, generate_script, simulate_dialogue
from .content import complete_seed_from_prompt
from .judging import (
    aggregate_content,
    evaluate_coherence,
    evaluate_consistency,
    evaluate_naturalness,
)
from .metrics import build_speech_report
from .orchestrator import (
    apply_content_gate,
    apply_speech_gate,
    merge_gates,
    read_manifest,
)
from .seeds import SeedCatalog, sample_scenario_seed
from .synthesis import (
    DEFAULT_TARGET_SAMPLE_RATE,
    assemble_dialogue_audio,
    synthesize_turns,
)
from .templates import PromptLibrary
from .types import QualityReport, SchemaViolationError
from .voices import VoiceBank, assign_voices, default_voice_bank, load_voice_bank

PIPELINE_STAGES = ("seed", "metadata", "script", "dialogue", "voices", "speech", "evaluate")

DEFAULT_SESSION_TTL_SECONDS = 3600.0


@dataclass(frozen=True)
class ServiceConfig:
    backends: BackendSettings = field(default_factory=BackendSettings)
    gates: GateThresholds = field(default_factory=GateThresholds)
    voice_bank: Path | None = None
    seed_catalog: Path | None = None
    target_sample_rate: int = DEFAULT_TARGET_SAMPLE_RATE
    session_ttl_seconds: float = DEFAULT_SESSION_TTL_SECONDS

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        batch = BatchConfig.from_file(path)
        return cls(
            backends=batch.backends,
            gates=batch.gates,
            voice_bank=batch.voice_bank,
            seed_catalog=batch.seed_catalog,
            target_sample_rate=batch.target_sample_rate,
        )


class Session:
    def __init__(self, session_id: str, language: str, rng_seed: int):
        self.session_id = session_id
        self.language = language
        self.rng_seed = rng_seed
        self.created_at = time.time()
        self.last_access = self.created_at
        self.lock = threading.Lock()
        # stage name -> artifact (domain objects; audio kept as synthesis results)
        self.stages: dict[str, Any] = {}

    def touch(self) -> None:
        self.last_access = time.time()

    def completed(self) -> list[str]:
        return [stage for stage in PIPELINE_STAGES if stage in self.stages]

    def invalidate_downstream(self, stage: str) -> None:
        position = PIPELINE_STAGES.index(stage)
        for later in PIPELINE_STAGES[position + 1 :]:
            self.stages.pop(later, None)

    def require(self, stage: str) -> None:
        """409 unless every predecessor of `stage` has completed."""

        position = PIPELINE_STAGES.index(stage)
        for earlier in PIPELINE_STAGES[:position]:
            if earlier not in self.stages:
                raise HTTPException(
                    status_code=409,
                    detail=f"stage {stage!r} requires {earlier!r} to run first",
                )


def _stage_payload(session: Session, stage: str) -> Any:
    value = session.stages.get(stage)
    if value is None:
        return None
    if stage == "voices":
        return {name: entry.voice_id for name, entry in sorted(value.items())}
    if stage == "speech":
        turns, assembled = value
        return {
            "sample_rate": assembled.clip.sample_rate,
            "duration_seconds": assembled.clip.duration_seconds,
            "turn_offsets": [
                {"turn_index": i, "start_sample": start, "end_sample": end}
                for i, start, end in assembled.turn_offsets
            ],
            "turns": [
                {
                    "turn_index": t.turn_index,
                    "voice_id": t.voice_id,
                    "duration_seconds": t.clip.duration_seconds,
                    "control_prompt_used": t.control_prompt_used,
                }
                for t in turns
            ],
        }
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return value


def create_app(config: ServiceConfig | None = None, backends: BackendSet | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="convosynth service")
    # local tool, no auth: let the dev-served UI call from another origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    backend_set = backends if backends is not None else build_backend_set(config.backends)
    catalog = SeedCatalog.load(config.seed_catalog)
    bank: VoiceBank = (
        load_voice_bank(config.voice_bank) if config.voice_bank else default_voice_bank()
    )
    library = PromptLibrary()
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    def evict_expired() -> None:
        deadline = time.time() - config.session_ttl_seconds
        with sessions_lock:
            for session_id in [
                sid for sid, s in sessions.items() if s.last_access < deadline
            ]:
                del sessions[session_id]

    def get_session(session_id: str) -> Session:
        evict_expired()
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        session.touch()
        return session

    def run_stage(session: Session, stage: str, runner) -> Any:
        with session.lock:
            session.require(stage)
            try:
                result = runner()
            except HTTPException:
                raise
            except (ValueError, SchemaViolationError, ConfigError) as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            except BackendError as exc:
                raise HTTPException(status_code=502, detail=str(exc)) from exc
            session.stages[stage] = result
            session.invalidate_downstream(stage)
            return _stage_payload(session, stage)

    @app.post("/sessions")
    def create_session(body: dict = Body(default={})) -> dict:
        language = body.get("language", "en")
        rng_seed = int(body.get("rng_seed", int(time.time()) % 2**31))
        session = Session(uuid.uuid4().hex[:12], language, rng_seed)
        with sessions_lock:
            sessions[session.session_id] = session
        return {
            "session_id": session.session_id,
            "language": session.language,
            "rng_seed": session.rng_seed,
        }

    @app.get("/sessions/{session_id}")
    def get_session_state(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "language": session.language,
                "rng_seed": session.rng_seed,
                "created_at": session.created_at,
                "completed_stages": session.completed(),
                "stages": {
                    stage: _stage_payload(session, stage) for stage in PIPELINE_STAGES
                },
            }

    @app.post("/sessions/{session_id}/seed")
    def stage_seed(session_id: str, body: dict = Body(default={})) -> Any:
        session = get_session(session_id)
        overrides = dict(body.get("overrides", {}))
        custom_prompt = body.get("custom_prompt")
        if "language" not in overrides:
            overrides["language"] = session.language
        session.language = overrides["language"]

        def runner():
            if custom_prompt:
                return complete_seed_from_prompt(
                    custom_prompt,
                    catalog,
                    backend_set.chat,
                    library,
                    rng_seed=session.rng_seed,
                )
            return sample_scenario_seed(catalog, overrides, rng_seed=session.rng_seed)

        return run_stage(session, "seed", runner)

    @app.post("/sessions/{session_id}/metadata")
    def stage_metadata(session_id: str) -> Any:
        session = get_session(session_id)
        return run_stage(
            session,
            "metadata",
            lambda: generate_metadata(session.stages["seed"], backend_set.chat, library),
        )

    @app.post("/sessions/{session_id}/script")
    def stage_script(session_id: str) -> Any:
        session = get_session(session_id)
        return run_stage(
            session,
            "script",
            lambda: generate_script(session.stages["metadata"], backend_set.chat, library),
        )

    @app.post("/sessions/{session_id}/dialogue")
    def stage_dialogue(session_id: str) -> Any:
        session = get_session(session_id)

        def runner():
            result = simulate_dialogue(
                session.stages["metadata"],
                session.stages["script"],
                backend_set.chat,
                library,
                dialogue_id=f"session-{session.session_id}",
            )
            return result.dialogue

        return run_stage(session, "dialogue", runner)

    @app.post("/sessions/{session_id}/voices")
    def stage_voices(session_id: str) -> Any:
        session = get_session(session_id)
        return run_stage(
            session,
            "voices",
            lambda: assign_voices(
                session.stages["metadata"], bank, rng_seed=session.rng_seed
            ),
        )

    @app.post("/sessions/{session_id}/speech")
    def stage_speech(session_id: str) -> Any:
        session = get_session(session_id)

        def runner():
            turns = synthesize_turns(
                session.stages["dialogue"],
                session.stages["voices"],
                backend_set.tts,
                session.language,
            )
            assembled = assemble_dialogue_audio(
                turns, session.stages["dialogue"], config.target_sample_rate
            )
            return turns, assembled

        return run_stage(session, "speech", runner)

    @app.post("/sessions/{session_id}/evaluate")
    def stage_evaluate(session_id: str) -> Any:
        session = get_session(session_id)

        def runner():
            seed = session.stages["seed"]
            metadata = session.stages["metadata"]
            script = session.stages["script"]
            dialogue = session.stages["dialogue"]
            turns, _assembled = session.stages["speech"]
            consistency = evaluate_consistency(
                seed, metadata, script, dialogue, backend_set.judge, library
            )
            coherence = evaluate_coherence(
                metadata, script, dialogue, backend_set.judge, library
            )
            naturalness = evaluate_naturalness(
                metadata, script, dialogue, backend_set.judge, library
            )
            scores = aggregate_content(coherence, naturalness, consistency)
            content_gate = apply_content_gate(scores, config.gates)
            mos_scores = [backend_set.mos.score(t.clip) for t in turns]
            pairs = [
                (turn.text, backend_set.asr.transcribe(synth.clip, session.language))
                for turn, synth in zip(dialogue.turns, turns)
            ]
            embeddings = [
                (turn.speaker_name, backend_set.embedder.embed(synth.clip))
                for turn, synth in zip(dialogue.turns, turns)
            ]
            speech = build_speech_report(
                mos_scores,
                pairs,
                embeddings,
                session.language,
                threshold=config.gates.min_speaker_similarity,
            )
            speech_gate = apply_speech_gate(speech, config.gates)
            return QualityReport(
                consistency=consistency,
                coherence=coherence,
                naturalness=naturalness,
                speech=speech,
                gate=merge_gates(content_gate, speech_gate),
            )

        return run_stage(session, "evaluate", runner)

    @app.get("/sessions/{session_id}/audio/{turn}")
    def session_audio(session_id: str, turn: str) -> Response:
        session = get_session(session_id)
        with session.lock:
            if "speech" not in session.stages:
                raise HTTPException(status_code=409, detail="speech stage has not run")
            turns, assembled = session.stages["speech"]
            if turn in ("dialogue", "full"):
                clip = assembled.clip
            else:
                try:
                    index = int(turn)
                except ValueError:
                    raise HTTPException(status_code=400, detail=f"bad turn {turn!r}") from None
                matches = [t for t in turns if t.turn_index == index]
                if not matches:
                    raise HTTPException(status_code=404, detail=f"no turn {index}")
                clip = matches[0].clip
        return Response(content=clip_to_wav_bytes(clip), media_type="audio/wav")

    @app.get("/sessions/{session_id}/package")
    def session_package(session_id: str) -> Response:
        session = get_session(session_id)
        with session.lock:
            buffer = io.BytesIO()
            with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
                for stage in ("seed", "metadata", "script", "dialogue", "evaluate"):
                    payload = _stage_payload(session, stage)
                    if payload is None:
                        continue
                    name = "quality.json" if stage == "evaluate" else f"{stage}.json"
                    archive.writestr(name, json.dumps(payload, indent=2, ensure_ascii=False))
                if "voices" in session.stages:
                    archive.writestr(
                        "voices.json",
                        json.dumps(_stage_payload(session, "voices"), indent=2),
                    )
                if "speech" in session.stages:
                    turns, assembled = session.stages["speech"]
                    archive.writestr(
                        "offsets.json", json.dumps(_stage_payload(session, "speech"), indent=2)
                    )
                    for synth in turns:
                        archive.writestr(
                            f"audio/turn_{synth.turn_index:03d}.wav",
                            clip_to_wav_bytes(synth.clip),
                        )
                    archive.writestr("dialogue.wav", clip_to_wav_bytes(assembled.clip))
        headers = {
            "Content-Disposition": f'attachment; filename="session_{session_id}.zip"'
        }
        return Response(content=buffer.getvalue(), media_type="application/zip", headers=headers)

    def _samples_dir(directory: str) -> Path:
        path = Path(directory)
        if not path.is_dir():
            raise HTTPException(status_code=404, detail=f"no such directory: {directory}")
        return path

    @app.get("/samples")
    def list_samples(dir: str = Query(...)) -> dict:
        path = _samples_dir(dir)
        manifest = path / "manifest.jsonl"
        if not manifest.is_file():
            raise HTTPException(status_code=404, detail=f"no manifest in {dir}")
        records, corrupt = read_manifest(manifest)
        return {
            "directory": str(path),
            "corrupt_lines": len(corrupt),
            "records": [record.to_dict() for record in records],
        }

    @app.get("/samples/{dialogue_id}")
    def sample_detail(dialogue_id: str, dir: str = Query(...)) -> dict:
        path = _samples_dir(dir)
        records, _ = read_manifest(path / "manifest.jsonl")
        matches = [r for r in records if r.dialogue_id == dialogue_id]
        if not matches:
            raise HTTPException(status_code=404, detail=f"unknown dialogue {dialogue_id!r}")
        record = matches[-1]
        artifacts: dict[str, Any] = {}
        for name in ("seed", "metadata", "script", "dialogue", "quality", "voices", "offsets"):
            file_path = path / dialogue_id / f"{name}.json"
            if file_path.is_file():
                artifacts[name] = json.loads(file_path.read_text(encoding="utf-8"))
        return {"record": record.to_dict(), "artifacts": artifacts}

    @app.get("/samples/{dialogue_id}/audio/{turn}")
    def sample_audio(dialogue_id: str, turn: str, dir: str = Query(...)) -> Response:
        path = _samples_dir(dir)
        base = path / dialogue_id
        if turn in ("dialogue", "full"):
            wav_path = base / "dialogue.wav"
        else:
            try:
                index = int(turn)
            except ValueError:
                raise HTTPException(status_code=400, detail=f"bad turn {turn!r}") from None
            wav_path = base / "audio" / f"turn_{index:03d}.wav"
        if not wav_path.is_file():
            raise HTTPException(status_code=404, detail=f"no audio at {wav_path.name}")
        clip = read_wav(wav_path)
        return Response(content=clip_to_wav_bytes(clip), media_type="audio/wav")

    @app.post("/tools/batch-command")
    def batch_command(form: dict = Body(...)) -> dict:
        try:
            command = build_batch_command(form)
            config = parse_batch_command(command)
        except (ValueError, ConfigError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"command": command, "config": config.to_dict(redact=True)}

    return app
