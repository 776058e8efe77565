"""Objective speech quality metrics.

Covers intelligibility (WER for English, CER for Chinese), MOS
aggregation, and speaker-embedding consistency.  All functions here are
pure; backend calls that produce their inputs live in `synthesis` and
`orchestrator`.

Text normalization is normative for metric stability: lowercase via
``str.lower`` and removal of every character whose Unicode general
category starts with ``P`` (all punctuation classes), so results are
bit-stable across implementations.
"""

from __future__ import annotations

import unicodedata
from typing import Iterable, Sequence

import numpy as np

from .types import ConsistencyFlag, SpeakerSimilarity, SpeechReport

DEFAULT_SIMILARITY_THRESHOLD = 0.9

WER = "WER"
CER = "CER"


def metric_kind_for_language(language: str) -> str:
    return CER if language == "zh" else WER


def normalize_text(text: str, language: str) -> list[str]:
    """Normalize to comparison units: words for en, codepoints for zh.

    Case is folded with ``lower()`` and all Unicode punctuation (general
    categories P*) is removed before tokenization.
    """

    lowered = text.lower()
    stripped = "".join(
        ch for ch in lowered if not unicodedata.category(ch).startswith("P")
    )
    if language == "zh":
        return [ch for ch in stripped if not ch.isspace()]
    return stripped.split()


def edit_distance(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> int:
    """Levenshtein distance with unit substitution/insertion/deletion costs."""

    n, m = len(ref_tokens), len(hyp_tokens)
    if n == 0:
        return m
    if m == 0:
        return n
    previous = list(range(m + 1))
    current = [0] * (m + 1)
    for i in range(1, n + 1):
        current[0] = i
        ref_token = ref_tokens[i - 1]
        for j in range(1, m + 1):
            substitution = previous[j - 1] + (ref_token != hyp_tokens[j - 1])
            current[j] = min(previous[j] + 1, current[j - 1] + 1, substitution)
        previous, current = current, previous
    return previous[m]


def error_rate(ref_text: str, hyp_text: str, language: str) -> float:
    """Edit distance over normalized tokens divided by reference length."""

    ref = normalize_text(ref_text, language)
    if not ref:
        raise ValueError("reference text normalizes to empty; error rate undefined")
    hyp = normalize_text(hyp_text, language)
    return edit_distance(ref, hyp) / len(ref)


def dialogue_error_rate(
    turn_pairs: Sequence[tuple[str, str]], language: str
) -> tuple[float, list[float]]:
    """Micro-averaged error rate across turns plus the per-turn rates.

    The micro-average is total edits over total reference units, so long
    turns weigh proportionally to their length.
    """

    if not turn_pairs:
        raise ValueError("at least one turn required")
    total_edits = 0
    total_units = 0
    per_turn: list[float] = []
    for ref_text, hyp_text in turn_pairs:
        ref = normalize_text(ref_text, language)
        if not ref:
            raise ValueError("reference text normalizes to empty; error rate undefined")
        hyp = normalize_text(hyp_text, language)
        edits = edit_distance(ref, hyp)
        total_edits += edits
        total_units += len(ref)
        per_turn.append(edits / len(ref))
    return total_edits / total_units, per_turn


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    u_arr = np.asarray(u, dtype=np.float64)
    v_arr = np.asarray(v, dtype=np.float64)
    if u_arr.shape != v_arr.shape:
        raise ValueError(f"dimension mismatch: {u_arr.shape} vs {v_arr.shape}")
    u_norm = float(np.linalg.norm(u_arr))
    v_norm = float(np.linalg.norm(v_arr))
    if u_norm == 0.0 or v_norm == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    value = float(np.dot(u_arr, v_arr) / (u_norm * v_norm))
    # round-off can push |value| a few ulps past 1
    return min(1.0, max(-1.0, value))


def speaker_consistency(
    turns: Sequence[tuple[str, Sequence[float]]],
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> tuple[list[SpeakerSimilarity], list[ConsistencyFlag]]:
    """Consecutive same-speaker embedding similarities, flagged below threshold.

    `turns` lists (speaker_name, embedding) in dialogue order.  Speakers
    with fewer than two turns yield empty similarity lists and no flags.
    """

    by_speaker: dict[str, list[tuple[int, np.ndarray]]] = {}
    for turn_index, (speaker, embedding) in enumerate(turns):
        by_speaker.setdefault(speaker, []).append(
            (turn_index, np.asarray(embedding, dtype=np.float64))
        )

    sections: list[SpeakerSimilarity] = []
    flags: list[ConsistencyFlag] = []
    for speaker, entries in by_speaker.items():
        pairs: list[tuple[int, int]] = []
        sims: list[float] = []
        for (prev_index, prev_emb), (next_index, next_emb) in zip(entries, entries[1:]):
            similarity = cosine_similarity(prev_emb, next_emb)
            pairs.append((prev_index, next_index))
            sims.append(similarity)
            if similarity < threshold:
                flags.append(
                    ConsistencyFlag(
                        speaker_name=speaker,
                        pair_turn_indices=(prev_index, next_index),
                        similarity=similarity,
                    )
                )
        sections.append(
            SpeakerSimilarity(
                speaker_name=speaker,
                pair_turn_indices=tuple(pairs),
                similarities=tuple(sims),
                minimum=min(sims) if sims else None,
            )
        )
    return sections, flags


def aggregate_mos(per_turn_mos: Iterable[float]) -> float:
    scores = list(per_turn_mos)
    if not scores:
        raise ValueError("at least one MOS score required")
    return sum(scores) / len(scores)


def build_speech_report(
    per_turn_mos: Sequence[float],
    turn_pairs: Sequence[tuple[str, str]],
    speaker_embeddings: Sequence[tuple[str, Sequence[float]]],
    language: str,
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> SpeechReport:
    """Assemble the full speech report from per-turn measurements."""

    overall_rate, per_turn_rates = dialogue_error_rate(turn_pairs, language)
    sections, flags = speaker_consistency(speaker_embeddings, threshold)
    return SpeechReport(
        per_turn_mos=tuple(per_turn_mos),
        dialogue_mos=aggregate_mos(per_turn_mos),
        per_turn_error_rate=tuple(per_turn_rates),
        dialogue_error_rate=overall_rate,
        metric_kind=metric_kind_for_language(language),
        speaker_consistency=tuple(sections),
        flags=tuple(flags),
    )
