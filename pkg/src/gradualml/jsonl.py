"""Minimal JSON Lines helpers with line-number error reporting."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterator

from gradualml.errors import InputError


def read_records(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) for each non-blank line; 1-based numbering."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"file not found: {p}")
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{p}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(rec, dict):
                raise InputError(f"{p}:{lineno}: expected a JSON object")
            yield lineno, rec


def write_records(path: str | Path, records: list[dict[str, Any]]) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def write_json(path: str | Path, obj: Any) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str | Path) -> Any:
    p = Path(path)
    if not p.exists():
        raise InputError(f"file not found: {p}")
    with p.open("r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{p}: invalid JSON: {exc}") from exc
