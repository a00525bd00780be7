"""Shared fixtures: small bilingual corpora and fully reviewed tables."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from usrep.lexicon import FragmentEntry, FragmentTable
from usrep.segmenter import Report

ZH_CHARS = "甲状腺大小正常形态规则包膜完整未见明显肿块回声均匀边界清晰血流信号腹肝脏乳"


def make_report(
    report_id: str = "r1",
    site: str = "thyroid",
    language: str = "zh",
    text: str = "甲状腺大小正常，形态规则。",
    images: tuple[str, str] | None = None,
) -> Report:
    if images is None:
        images = (f"img/{report_id}_a.png", f"img/{report_id}_b.png")
    return Report(id=report_id, site=site, language=language, text=text, images=images)


def make_table(mapping: dict[str, str], status: str = "approved") -> FragmentTable:
    """Table with every entry at the given status and occurrences 1."""
    return FragmentTable(
        FragmentEntry(source=src, target=tgt, status=status, occurrences=1)
        for src, tgt in mapping.items()
    )


def write_corpus(path: Path, reports: list[Report]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            record = {
                "id": r.id,
                "site": r.site,
                "language": r.language,
                "text": r.text,
                "images": list(r.images),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def zh_reports() -> list[Report]:
    return [
        make_report("r1", "thyroid", text="甲状腺大小正常，CFDI示血流信号正常。"),
        make_report("r2", "thyroid", text="甲状腺大小正常，未见明显肿块。"),
        make_report("r3", "liver", text="肝脏形态规则；包膜完整。"),
    ]


@pytest.fixture
def zh_targets() -> dict[str, str]:
    return {
        "甲状腺大小正常": "the thyroid gland is normal in size",
        "CFDI示血流信号正常": "CFDI shows a normal blood flow signal",
        "未见明显肿块": "no obvious mass is seen",
        "肝脏形态规则": "the liver is regular in shape",
        "包膜完整": "the capsule is intact",
    }


@pytest.fixture
def approved_table(zh_targets) -> FragmentTable:
    return make_table(zh_targets)


@pytest.fixture
def keywords() -> dict[str, list[str]]:
    return {
        "thyroid": ["thyroid", "CFDI", "mass", "blood flow", "nodule"],
        "liver": ["liver", "capsule"],
        "mammary": ["mammary", "duct"],
    }
