"""Profile-driven speaker retrieval over a demographically annotated corpus.

Matching is metadata-only: gender, age bucket, and locale (derived from
nationality).  Score = 0.4 * gender_match + 0.3 * age_proximity +
0.3 * locale_match, where age_proximity = max(0, 1 - bucket_distance / 4)
and unknown annotations contribute 0.
"""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .assets import asset_path, load_asset_json
from .types import CharacterProfile, DialogueMetadata

logger = logging.getLogger(__name__)

GENDER_WEIGHT = 0.4
AGE_WEIGHT = 0.3
LOCALE_WEIGHT = 0.3
BUCKET_DISTANCE_NORMALIZER = 4

AGE_BUCKETS = (
    "teens",
    "twenties",
    "thirties",
    "forties",
    "fifties",
    "sixties",
    "seventies",
    "eighties",
)
UNKNOWN = "unknown"

MIN_VOICE_PROMPT_SECONDS = 1.0
DEFAULT_SHORTLIST_SIZE = 5

MANIFEST_COLUMNS = (
    "voice_id",
    "audio_path",
    "transcript",
    "gender",
    "age_bucket",
    "locale",
    "duration_seconds",
    "sample_rate",
)

_GENDER_ALIASES = {
    "male": "male",
    "man": "male",
    "m": "male",
    "男": "male",
    "female": "female",
    "woman": "female",
    "f": "female",
    "女": "female",
}


class VoiceBankError(ValueError):
    pass


@dataclass(frozen=True)
class VoiceEntry:
    voice_id: str
    audio_path: Path
    transcript: str
    gender: str
    age_bucket: str
    locale: str
    duration_seconds: float
    sample_rate: int


@dataclass(frozen=True)
class VoiceBank:
    entries: tuple[VoiceEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise VoiceBankError("voice bank must have at least one entry")
        seen = set()
        for entry in self.entries:
            if entry.voice_id in seen:
                raise VoiceBankError(f"duplicate voice_id {entry.voice_id!r}")
            seen.add(entry.voice_id)
        index: dict[tuple[str, str, str], list[VoiceEntry]] = {}
        for entry in self.entries:
            index.setdefault((entry.gender, entry.age_bucket, entry.locale), []).append(entry)
        object.__setattr__(
            self, "_index", {key: tuple(group) for key, group in index.items()}
        )

    def __len__(self) -> int:
        return len(self.entries)

    def group(self, gender: str, age_bucket: str, locale: str) -> tuple[VoiceEntry, ...]:
        return getattr(self, "_index").get((gender, age_bucket, locale), ())

    def by_id(self, voice_id: str) -> VoiceEntry:
        for entry in self.entries:
            if entry.voice_id == voice_id:
                return entry
        raise KeyError(voice_id)


def load_voice_bank(manifest_path: str | Path) -> VoiceBank:
    """Load a TSV/CSV voice manifest; invalid rows are skipped with warnings.

    Audio paths are resolved relative to the manifest's directory.
    """

    path = Path(manifest_path)
    if not path.is_file():
        raise VoiceBankError(f"voice manifest not found: {path}")
    delimiter = "\t" if path.suffix.lower() in (".tsv", ".tab") else ","
    entries: list[VoiceEntry] = []
    skipped = 0
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle, delimiter=delimiter)
        missing_columns = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
        if missing_columns:
            raise VoiceBankError(
                f"voice manifest missing columns: {sorted(missing_columns)}"
            )
        for line_number, row in enumerate(reader, start=2):
            try:
                duration = float(row["duration_seconds"])
                if duration < MIN_VOICE_PROMPT_SECONDS:
                    raise ValueError(
                        f"duration {duration} s below the {MIN_VOICE_PROMPT_SECONDS} s minimum"
                    )
                gender = row["gender"].strip().lower()
                if gender not in ("male", "female", "other", UNKNOWN):
                    raise ValueError(f"bad gender {row['gender']!r}")
                age_bucket = row["age_bucket"].strip().lower()
                if age_bucket not in AGE_BUCKETS + (UNKNOWN,):
                    raise ValueError(f"bad age_bucket {row['age_bucket']!r}")
                if not row["voice_id"].strip():
                    raise ValueError("empty voice_id")
                entries.append(
                    VoiceEntry(
                        voice_id=row["voice_id"].strip(),
                        audio_path=(path.parent / row["audio_path"]).resolve(),
                        transcript=row["transcript"],
                        gender=gender,
                        age_bucket=age_bucket,
                        locale=row["locale"].strip(),
                        duration_seconds=duration,
                        sample_rate=int(row["sample_rate"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                skipped += 1
                logger.warning("skipping manifest row %d: %s", line_number, exc)
    if not entries:
        raise VoiceBankError(f"no valid entries in voice manifest {path}")
    if skipped:
        logger.warning("voice manifest %s: %d rows skipped", path, skipped)
    return VoiceBank(entries=tuple(entries))


def default_voice_bank() -> VoiceBank:
    """The small synthetic fixture bank shipped with the package."""

    return load_voice_bank(asset_path("voice_fixtures", "manifest.tsv"))


_locale_mapping: dict[str, str] | None = None


def nationality_to_locale(nationality: str) -> str | None:
    global _locale_mapping
    if _locale_mapping is None:
        _locale_mapping = {
            key.lower(): value
            for key, value in load_asset_json("nationality_locales.json")["mapping"].items()
        }
    return _locale_mapping.get(nationality.strip().lower())


def age_to_bucket(age: int) -> str:
    if age < 20:
        return "teens"
    index = min(len(AGE_BUCKETS) - 1, age // 10 - 1)
    return AGE_BUCKETS[index]


def _normalize_locale(tag: str) -> tuple[str, str]:
    parts = tag.replace("_", "-").split("-")
    language = parts[0].lower() if parts and parts[0] else ""
    region = parts[1].upper() if len(parts) > 1 else ""
    return language, region


def score_voice(profile: CharacterProfile, entry: VoiceEntry) -> float:
    """Fitness of a voice for a character profile, in [0, 1].

    Unknown or unmapped annotations contribute 0 to their term.
    """

    profile_gender = _GENDER_ALIASES.get(profile.gender.strip().lower())
    gender_match = float(
        profile_gender is not None
        and entry.gender in ("male", "female")
        and entry.gender == profile_gender
    )

    if entry.age_bucket in AGE_BUCKETS:
        distance = abs(AGE_BUCKETS.index(age_to_bucket(profile.age)) - AGE_BUCKETS.index(entry.age_bucket))
        age_proximity = max(0.0, 1.0 - distance / BUCKET_DISTANCE_NORMALIZER)
    else:
        age_proximity = 0.0

    expected_locale = nationality_to_locale(profile.nationality)
    locale_match = 0.0
    if expected_locale and entry.locale:
        locale_match = float(
            _normalize_locale(expected_locale) == _normalize_locale(entry.locale)
        )

    return GENDER_WEIGHT * gender_match + AGE_WEIGHT * age_proximity + LOCALE_WEIGHT * locale_match


def retrieve_candidates(
    profile: CharacterProfile, bank: VoiceBank, k: int
) -> list[tuple[VoiceEntry, float]]:
    """Top-k voices by score; ties break by ascending voice_id."""

    if k < 1:
        raise ValueError("k must be >= 1")
    scored = [(entry, score_voice(profile, entry)) for entry in bank.entries]
    scored.sort(key=lambda pair: (-pair[1], pair[0].voice_id))
    return scored[:k]


def assign_voices(
    metadata: DialogueMetadata,
    bank: VoiceBank,
    rng_seed: int = 0,
    shortlist_size: int = DEFAULT_SHORTLIST_SIZE,
    exclude: Iterable[str] = (),
) -> dict[str, VoiceEntry]:
    """Pick one distinct voice per character, sampled from its shortlist.

    Sampling is weighted by retrieval score (uniform when all shortlist
    scores are zero) and deterministic for a fixed rng_seed.  `exclude`
    removes voices already used elsewhere in a batch.
    """

    excluded = set(exclude)
    available = [e for e in bank.entries if e.voice_id not in excluded]
    if len(available) < len(metadata.character_profiles):
        raise VoiceBankError(
            f"voice bank has {len(available)} usable entries; need "
            f"{len(metadata.character_profiles)} distinct voices"
        )
    rng = random.Random(rng_seed)
    assignment: dict[str, VoiceEntry] = {}
    used: set[str] = set(excluded)
    for profile in metadata.character_profiles:
        ranked = [
            (entry, score)
            for entry, score in retrieve_candidates(profile, bank, len(bank))
            if entry.voice_id not in used
        ]
        shortlist = ranked[:shortlist_size]
        weights = [score for _, score in shortlist]
        if sum(weights) > 0:
            choice = rng.choices([entry for entry, _ in shortlist], weights=weights, k=1)[0]
        else:
            choice = rng.choice([entry for entry, _ in shortlist])
        assignment[profile.name] = choice
        used.add(choice.voice_id)
    return assignment
