"""Access to packaged data assets (catalogs, templates, fixtures)."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any


def asset_root() -> Path:
    return Path(str(resources.files("convosynth") / "assets"))


def load_asset_json(name: str) -> Any:
    return json.loads((asset_root() / name).read_text(encoding="utf-8"))


def asset_path(*parts: str) -> Path:
    return asset_root().joinpath(*parts)
