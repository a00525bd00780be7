"""Report corpus ingestion and serialization (UTF-8 JSON-lines).

One record per line with fields ``{"id", "site", "language", "text",
"images": [two strings]}``; unknown fields are ignored.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .segmenter import Report

__all__ = ["CorpusFormatError", "read_reports", "report_to_dict", "write_reports"]

_REQUIRED_FIELDS = ("id", "site", "language", "text", "images")


class CorpusFormatError(ValueError):
    """A corpus line that cannot be parsed into a Report."""

    def __init__(self, path: str | Path, line_number: int, reason: str):
        self.path = str(path)
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"{path}: line {line_number}: {reason}")


def report_from_dict(record: dict[str, Any]) -> Report:
    for name in _REQUIRED_FIELDS:
        if name not in record:
            raise ValueError(f"missing field {name!r}")
    images = record["images"]
    if not isinstance(images, list) or not all(isinstance(p, str) for p in images):
        raise ValueError("images must be a list of strings")
    return Report(
        id=str(record["id"]),
        site=str(record["site"]),
        language=str(record["language"]),
        text=str(record["text"]),
        images=tuple(images),
    )


def report_to_dict(report: Report) -> dict[str, Any]:
    return {
        "id": report.id,
        "site": report.site,
        "language": report.language,
        "text": report.text,
        "images": list(report.images),
    }


def read_reports(path: str | Path) -> list[Report]:
    """Parse a JSON-lines corpus file, citing the offending line on error."""
    reports: list[Report] = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(path, line_number, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(path, line_number, "record must be a JSON object")
            try:
                reports.append(report_from_dict(record))
            except ValueError as exc:
                raise CorpusFormatError(path, line_number, str(exc)) from exc
    return reports


def write_reports(reports: Iterable[Report], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report_to_dict(report), ensure_ascii=False) + "\n")
