"""Scenario seed catalog and deterministic seed sampling."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .assets import load_asset_json
from .types import LANGUAGES, ScenarioSeed, SchemaViolationError, Violation

CATALOG_DIMENSIONS = (
    "dialogue_type",
    "temporal_context",
    "spatial_context",
    "cultural_background",
)


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class SeedCatalog:
    """Per-language value lists for the four sampled scenario dimensions."""

    languages: tuple[str, ...]
    values: Mapping[str, Mapping[str, tuple[str, ...]]]

    def __post_init__(self) -> None:
        if not self.languages:
            raise CatalogError("catalog must support at least one language")
        for language in self.languages:
            if language not in LANGUAGES:
                raise CatalogError(f"unsupported catalog language {language!r}")
            dims = self.values.get(language)
            if dims is None:
                raise CatalogError(f"catalog missing value lists for language {language!r}")
            for dimension in CATALOG_DIMENSIONS:
                entries = dims.get(dimension)
                if not entries:
                    raise CatalogError(
                        f"catalog list {language}/{dimension} must be non-empty"
                    )
                if len(set(entries)) != len(entries):
                    raise CatalogError(
                        f"catalog list {language}/{dimension} has duplicate values"
                    )

    def options(self, language: str, dimension: str) -> tuple[str, ...]:
        try:
            return tuple(self.values[language][dimension])
        except KeyError as exc:
            raise CatalogError(f"no catalog values for {language}/{dimension}") from exc

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SeedCatalog":
        languages = tuple(data.get("languages", ()))
        values = {
            language: {
                dimension: tuple(data.get(language, {}).get(dimension, ()))
                for dimension in CATALOG_DIMENSIONS
            }
            for language in languages
        }
        return cls(languages=languages, values=values)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "SeedCatalog":
        if path is None:
            return cls.from_mapping(load_asset_json("seed_catalog.json"))
        return cls.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))


def sample_scenario_seed(
    catalog: SeedCatalog,
    overrides: Mapping[str, Any] | None = None,
    rng_seed: int = 0,
    strict: bool = False,
) -> ScenarioSeed:
    """Draw unspecified dimensions uniformly from the catalog.

    Overridden dimensions pass through unchanged; with `strict` they must
    come from the catalog.  Deterministic for a fixed (catalog, overrides,
    rng_seed).
    """

    overrides = dict(overrides or {})
    rng = random.Random(rng_seed)

    language = overrides.get("language")
    if language is None:
        language = rng.choice(list(catalog.languages))
    elif language not in catalog.languages:
        raise SchemaViolationError(
            [Violation("language", f"must be one of {catalog.languages}")], "scenario seed"
        )

    chosen: dict[str, str] = {}
    for dimension in CATALOG_DIMENSIONS:
        options = catalog.options(language, dimension)
        value = overrides.get(dimension)
        if value is None:
            value = rng.choice(list(options))
        elif strict and value not in options:
            raise SchemaViolationError(
                [Violation(dimension, f"override {value!r} not in catalog (strict mode)")],
                "scenario seed",
            )
        chosen[dimension] = value

    return ScenarioSeed(
        dialogue_type=chosen["dialogue_type"],
        temporal_context=chosen["temporal_context"],
        spatial_context=chosen["spatial_context"],
        cultural_background=chosen["cultural_background"],
        language=language,
        custom_prompt=overrides.get("custom_prompt"),
        rng_seed=rng_seed,
    )
