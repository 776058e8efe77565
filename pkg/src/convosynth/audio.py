"""Mono audio carrier type and low-level WAV utilities.

Clips are float64 sample buffers in [-1, 1]; on-disk format is 16-bit PCM
mono little-endian WAV.  Resampling is linear interpolation, which is
adequate for dataset assembly and easy to verify exactly.
"""

from __future__ import annotations

import io
import logging
import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MIN_SAMPLE_RATE = 8000
MAX_SAMPLE_RATE = 96000


class AudioFormatError(ValueError):
    """Unreadable or unsupported audio data."""


@dataclass(frozen=True)
class AudioClip:
    """Immutable mono waveform with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise AudioFormatError("samples must be one-dimensional (mono)")
        if arr.size and not np.all(np.isfinite(arr)):
            raise AudioFormatError("samples must be finite")
        if not (MIN_SAMPLE_RATE <= int(self.sample_rate) <= MAX_SAMPLE_RATE):
            raise AudioFormatError(
                f"sample_rate must be in [{MIN_SAMPLE_RATE}, {MAX_SAMPLE_RATE}]"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AudioClip):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate

    def is_empty(self) -> bool:
        return self.samples.size == 0


def make_silence(duration_seconds: float, sample_rate: int) -> AudioClip:
    """Zero clip of round(duration * rate) samples."""

    if duration_seconds < 0:
        raise ValueError("duration must be non-negative")
    count = round(duration_seconds * sample_rate)
    return AudioClip(np.zeros(count), sample_rate)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Linear-interpolation resample; identity when rates match.

    Output length is round(n * target / source).
    """

    if not (MIN_SAMPLE_RATE <= target_rate <= MAX_SAMPLE_RATE):
        raise AudioFormatError(
            f"target_rate must be in [{MIN_SAMPLE_RATE}, {MAX_SAMPLE_RATE}]"
        )
    if target_rate == clip.sample_rate:
        return clip
    n_src = len(clip)
    n_out = round(n_src * target_rate / clip.sample_rate)
    if n_src == 0 or n_out == 0:
        return AudioClip(np.zeros(n_out), target_rate)
    positions = np.arange(n_out) * (clip.sample_rate / target_rate)
    out = np.interp(positions, np.arange(n_src), clip.samples)
    return AudioClip(out, target_rate)


def concatenate(clips: list[AudioClip], sample_rate: int) -> AudioClip:
    """Concatenate clips that already share the given rate."""

    for clip in clips:
        if clip.sample_rate != sample_rate:
            raise AudioFormatError("all clips must share the target sample rate")
    if not clips:
        return AudioClip(np.zeros(0), sample_rate)
    return AudioClip(np.concatenate([c.samples for c in clips]), sample_rate)


def pcm16_bytes(clip: AudioClip) -> bytes:
    """Quantize to the on-disk 16-bit little-endian PCM payload."""

    samples = np.clip(clip.samples, -1.0, 1.0)
    return np.round(samples * 32767.0).astype("<i2").tobytes()


def write_wav(clip: AudioClip, path: str | Path) -> int:
    """Write a clip as 16-bit PCM mono WAV.

    Samples outside [-1, 1] are clamped; returns the clamped-sample count
    (also logged as a warning when nonzero).
    """

    clipped = int(np.count_nonzero((clip.samples > 1.0) | (clip.samples < -1.0)))
    if clipped:
        logger.warning("clamping %d out-of-range samples while writing %s", clipped, path)
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(clip.sample_rate)
        handle.writeframes(pcm16_bytes(clip))
    return clipped


def clip_to_wav_bytes(clip: AudioClip) -> bytes:
    """In-memory 16-bit PCM mono WAV document (wire/transport format)."""

    buffer = io.BytesIO()
    with wave.open(buffer, "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(clip.sample_rate)
        handle.writeframes(pcm16_bytes(clip))
    return buffer.getvalue()


def _read_wav_handle(handle: wave.Wave_read) -> AudioClip:
    channels = handle.getnchannels()
    width = handle.getsampwidth()
    rate = handle.getframerate()
    frames = handle.readframes(handle.getnframes())
    if channels != 1:
        raise AudioFormatError(f"unsupported channel count {channels} (mono required)")
    if width != 2:
        raise AudioFormatError(f"unsupported encoding: {8 * width}-bit (16-bit PCM required)")
    pcm = np.frombuffer(frames, dtype="<i2")
    return AudioClip(pcm.astype(np.float64) / 32767.0, rate)


def read_wav(path: str | Path) -> AudioClip:
    """Read a 16-bit PCM mono WAV file."""

    try:
        with wave.open(str(path), "rb") as handle:
            return _read_wav_handle(handle)
    except (wave.Error, EOFError, struct.error) as exc:
        raise AudioFormatError(f"malformed WAV file {path}: {exc}") from exc


def clip_from_wav_bytes(data: bytes) -> AudioClip:
    """Parse an in-memory WAV document."""

    try:
        with wave.open(io.BytesIO(data), "rb") as handle:
            return _read_wav_handle(handle)
    except (wave.Error, EOFError, struct.error) as exc:
        raise AudioFormatError(f"malformed WAV payload: {exc}") from exc
