"""Canonical JSON serialization shared by all file-producing stages.

One canonical form — sorted keys, UTF-8, compact separators for JSONL,
2-space indent for whole-file JSON, LF line endings — so identical data
always serializes to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator

__all__ = ["dumps_line", "dumps_pretty", "write_jsonl", "read_jsonl", "write_json"]


def dumps_line(obj: Any) -> str:
    """One canonical JSONL line, without the trailing newline."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def dumps_pretty(obj: Any) -> str:
    """Canonical whole-file JSON text, trailing newline included."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def write_jsonl(path: str | Path, records: Iterable[Any]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(dumps_line(record))
            f.write("\n")
    return path


def read_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed_object) for every non-blank line."""
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            yield line_no, json.loads(line)


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_pretty(obj))
    return path
