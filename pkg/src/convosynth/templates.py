"""Versioned prompt templates with strict placeholder binding."""

from __future__ import annotations

import hashlib
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .assets import asset_path


class TemplateError(KeyError):
    pass


def _identifiers(text: str) -> frozenset[str]:
    names = set()
    for match in string.Template.pattern.finditer(text):
        name = match.group("named") or match.group("braced")
        if name:
            names.add(name)
    return frozenset(names)


@dataclass(frozen=True)
class PromptTemplate:
    """A ``$placeholder`` text template; rendering requires every placeholder."""

    template_id: str
    text: str

    @property
    def required_placeholders(self) -> frozenset[str]:
        return _identifiers(self.text)

    def render(self, params: Mapping[str, str]) -> str:
        missing = self.required_placeholders - set(params)
        if missing:
            raise TemplateError(
                f"template {self.template_id!r} missing placeholders: {sorted(missing)}"
            )
        return string.Template(self.text).substitute(params)

    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


class PromptLibrary:
    """Loads `<stage>.system.txt` / `<stage>.user.txt` pairs from a directory."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory else asset_path("templates")
        self._cache: dict[str, PromptTemplate] = {}
        if not self.directory.is_dir():
            raise FileNotFoundError(f"template directory not found: {self.directory}")

    def get(self, template_id: str) -> PromptTemplate:
        if template_id not in self._cache:
            path = self.directory / f"{template_id}.txt"
            if not path.is_file():
                raise TemplateError(f"unknown template {template_id!r} in {self.directory}")
            self._cache[template_id] = PromptTemplate(
                template_id=template_id, text=path.read_text(encoding="utf-8")
            )
        return self._cache[template_id]

    def pair(self, stage: str) -> tuple[PromptTemplate, PromptTemplate]:
        return self.get(f"{stage}.system"), self.get(f"{stage}.user")

    def stage_ids(self) -> list[str]:
        stems = {p.name.rsplit(".", 2)[0] for p in self.directory.glob("*.system.txt")}
        return sorted(stems)

    def digests(self) -> dict[str, str]:
        """Per-stage provenance hashes covering system and user templates."""

        out = {}
        for stage in self.stage_ids():
            system, user = self.pair(stage)
            combined = hashlib.sha256()
            combined.update(system.digest().encode())
            combined.update(user.digest().encode())
            out[stage] = combined.hexdigest()
        return out

    def combined_digest(self) -> str:
        combined = hashlib.sha256()
        for stage, digest in sorted(self.digests().items()):
            combined.update(f"{stage}:{digest};".encode())
        return combined.hexdigest()
