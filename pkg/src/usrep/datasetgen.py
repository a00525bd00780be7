"""Four-way cross-language SFT sample generation and token-sequence assembly.

Each fully translated report yields four training samples: a Chinese report
from images, an English report from images, an English report from a Chinese
query, and a Chinese report from an English query.  Token sequences carry a
per-position supervision mask that is true only on target-report positions,
so prompt content is never supervised and target content never leaks into
the prompt; the masked causal loss is evaluated from externally supplied
per-position log-probabilities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .lexicon import DEFAULT_DELIMITERS, FragmentTable, UnresolvedFragmentsError, apply_table
from .segmenter import Report, segment_report

__all__ = [
    "DEFAULT_PROMPT_TEXTS",
    "ByteTokenizer",
    "DegeneratePromptError",
    "PromptType",
    "SegmentSpans",
    "SftSample",
    "SkipRecord",
    "TokenSequence",
    "Tokenizer",
    "assemble_token_sequence",
    "compute_masked_loss",
    "gen_samples",
    "write_samples",
    "write_skips",
]


class PromptType(Enum):
    """The four cross-language training prompt formulations, in emission order."""

    ZH_FROM_IMAGES = "zh_from_images"
    EN_FROM_IMAGES = "en_from_images"
    EN_FROM_ZH_QUERY = "en_from_zh_query"
    ZH_FROM_EN_QUERY = "zh_from_en_query"

    @property
    def target_language(self) -> str:
        return "zh" if self in (PromptType.ZH_FROM_IMAGES, PromptType.ZH_FROM_EN_QUERY) else "en"

    @property
    def is_query(self) -> bool:
        return self in (PromptType.EN_FROM_ZH_QUERY, PromptType.ZH_FROM_EN_QUERY)


# Default instruction strings; deployments override them via the config file.
# Query templates must contain the {report} placeholder.
DEFAULT_PROMPT_TEXTS: dict[str, dict[str, str]] = {
    PromptType.ZH_FROM_IMAGES.value: {
        "system": "你是一名经验丰富的超声科医生。",
        "user": "请根据提供的两张超声图像，书写规范的中文超声检查报告。",
    },
    PromptType.EN_FROM_IMAGES.value: {
        "system": "You are an experienced ultrasound radiologist.",
        "user": "Write the standardized English ultrasound report for the two images provided.",
    },
    PromptType.EN_FROM_ZH_QUERY.value: {
        "system": "You are an experienced ultrasound radiologist.",
        "user": "Rewrite the following Chinese ultrasound report as a standardized English report:\n{report}",
    },
    PromptType.ZH_FROM_EN_QUERY.value: {
        "system": "你是一名经验丰富的超声科医生。",
        "user": "请将下面的英文超声报告改写为规范的中文超声检查报告：\n{report}",
    },
}


class DegeneratePromptError(ValueError):
    """Raised when a sample has neither system nor user text."""


@dataclass(frozen=True)
class SftSample:
    """One training record: prompt texts, image references, and the target report."""

    report_id: str
    prompt_type: PromptType
    system: str
    user: str
    images: tuple[str, ...]
    target: str
    target_language: str

    def __post_init__(self):
        if not self.target:
            raise ValueError(f"sample {self.report_id}/{self.prompt_type.value}: empty target")
        if len(self.images) not in (0, 2):
            raise ValueError(
                f"sample {self.report_id}/{self.prompt_type.value}: images must have length 0 or 2"
            )
        if not self.prompt_type.is_query and len(self.images) != 2:
            raise ValueError(
                f"sample {self.report_id}/{self.prompt_type.value}: image prompts require 2 images"
            )


@dataclass(frozen=True)
class SkipRecord:
    """A report the table could not fully translate, and why."""

    report_id: str
    reason: str
    unresolved_fragments: tuple[str, ...]


class Tokenizer(Protocol):
    """Minimal tokenizer interface; decode must invert encode on its own output."""

    image_placeholder: int

    def encode(self, text: str) -> list[int]: ...

    def decode(self, tokens: Sequence[int]) -> str: ...


class ByteTokenizer:
    """Reference byte-level tokenizer: token id = UTF-8 byte value.

    Round-trips every string, so all sequence and mask invariants are
    testable without external vocabulary assets.  The image placeholder uses
    id 256, outside the byte range.
    """

    image_placeholder = 256

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, tokens: Sequence[int]) -> str:
        return bytes(tokens).decode("utf-8")


@dataclass(frozen=True)
class SegmentSpans:
    """Half-open [start, end) offsets of the four regions, tiling [0, T)."""

    system: tuple[int, int]
    image: tuple[int, int]
    user: tuple[int, int]
    target: tuple[int, int]


@dataclass
class TokenSequence:
    """Assembled token ids with a per-position supervision mask."""

    tokens: list[int]
    supervised: list[bool]
    spans: SegmentSpans

    def __post_init__(self):
        if len(self.tokens) != len(self.supervised):
            raise ValueError("tokens and supervised mask must have equal length")


def gen_samples(
    zh_corpus: Iterable[Report],
    table: FragmentTable,
    prompt_texts: dict[str, dict[str, str]] | None = None,
    *,
    query_images: bool = True,
    delimiters: frozenset[str] | set[str] = DEFAULT_DELIMITERS,
    fragment_join: str = ",",
    terminal_mark: str = ".",
) -> tuple[list[SftSample], list[SkipRecord]]:
    """Emit SFT samples for a Chinese corpus: four per fully translated report.

    Reports with unresolved fragments contribute only the two Chinese-target
    samples and land in the skip manifest; for those, the English query of
    the zh-from-en-query sample is assembled with unresolved fragments left
    untranslated, which the skip record flags.  Output order is report order
    times fixed prompt-type order.
    """
    texts = prompt_texts or DEFAULT_PROMPT_TEXTS
    for ptype in PromptType:
        cfg = texts.get(ptype.value)
        if cfg is None or "system" not in cfg or "user" not in cfg:
            raise ValueError(f"prompt_texts missing system/user for {ptype.value}")
        if ptype.is_query and "{report}" not in cfg["user"]:
            raise ValueError(f"prompt_texts[{ptype.value}].user must contain {{report}}")

    samples: list[SftSample] = []
    skips: list[SkipRecord] = []

    for report in zh_corpus:
        try:
            en_text = apply_table(
                report, table, delimiters, fragment_join, terminal_mark
            ).text
            unresolved: tuple[str, ...] = ()
        except UnresolvedFragmentsError as exc:
            unresolved = tuple(exc.fragments)
            en_text = None
            skips.append(
                SkipRecord(
                    report_id=report.id,
                    reason=(
                        "unresolved fragments: English-target samples skipped; "
                        "English query contains untranslated fragments"
                    ),
                    unresolved_fragments=unresolved,
                )
            )

        query_imgs = report.images if query_images else ()
        for ptype in PromptType:
            if en_text is None and ptype.target_language == "en":
                continue
            cfg = texts[ptype.value]
            if ptype == PromptType.ZH_FROM_EN_QUERY:
                query = en_text if en_text is not None else _partial_translation(
                    report, table, delimiters, fragment_join, terminal_mark
                )
                user = cfg["user"].format(report=query)
                images: tuple[str, ...] = query_imgs
                target, target_lang = report.text, "zh"
            elif ptype == PromptType.EN_FROM_ZH_QUERY:
                user = cfg["user"].format(report=report.text)
                images = query_imgs
                target, target_lang = en_text, "en"  # type: ignore[assignment]
            elif ptype == PromptType.EN_FROM_IMAGES:
                user = cfg["user"]
                images = report.images
                target, target_lang = en_text, "en"  # type: ignore[assignment]
            else:
                user = cfg["user"]
                images = report.images
                target, target_lang = report.text, "zh"
            samples.append(
                SftSample(
                    report_id=report.id,
                    prompt_type=ptype,
                    system=cfg["system"],
                    user=user,
                    images=tuple(images),
                    target=target,
                    target_language=target_lang,
                )
            )
    return samples, skips


def _partial_translation(
    report: Report,
    table: FragmentTable,
    delimiters,
    fragment_join: str,
    terminal_mark: str,
) -> str:
    """Best-effort English text with unresolved fragments left in the original."""
    parts = []
    for fragment in segment_report(report.text, "zh", delimiters):
        target = table.resolved_target(fragment.normalized)
        parts.append(fragment.raw if target is None else target)
    return fragment_join.join(parts) + terminal_mark


def assemble_token_sequence(
    sample: SftSample,
    tokenizer: Tokenizer,
    image_token_count: int = 1,
    include_target: bool = True,
) -> TokenSequence:
    """Concatenate system, image placeholder, user, and target token regions.

    The supervision mask is true exactly on target positions.  With
    ``include_target=False`` (the inference-time layout) the target span is
    empty and the mask is all false.
    """
    if not sample.system and not sample.user:
        raise DegeneratePromptError(
            f"sample {sample.report_id}/{sample.prompt_type.value}: system and user both empty"
        )
    if sample.images and image_token_count <= 0:
        raise ValueError("image_token_count must be positive when the sample has images")

    system_ids = tokenizer.encode(sample.system)
    image_ids = [tokenizer.image_placeholder] * (image_token_count * len(sample.images))
    user_ids = tokenizer.encode(sample.user)
    target_ids = tokenizer.encode(sample.target) if include_target else []

    s_end = len(system_ids)
    i_end = s_end + len(image_ids)
    u_end = i_end + len(user_ids)
    t_end = u_end + len(target_ids)
    return TokenSequence(
        tokens=system_ids + image_ids + user_ids + target_ids,
        supervised=[False] * u_end + [True] * len(target_ids),
        spans=SegmentSpans(
            system=(0, s_end),
            image=(s_end, i_end),
            user=(i_end, u_end),
            target=(u_end, t_end),
        ),
    )


def compute_masked_loss(logprobs: Sequence[float], seq: TokenSequence) -> float:
    """Negative sum of log-probabilities over supervised positions only.

    Masked positions contribute exactly zero regardless of their values.
    The model itself is external; this evaluates the training objective for
    any model's per-position outputs.
    """
    if len(logprobs) != len(seq.tokens):
        raise ValueError(
            f"expected {len(seq.tokens)} log-probabilities, got {len(logprobs)}"
        )
    for i, lp in enumerate(logprobs):
        if lp > 0:
            raise ValueError(f"log-probability at position {i} is positive ({lp})")
    return -math.fsum(lp for lp, on in zip(logprobs, seq.supervised) if on)


def write_samples(samples: Iterable[SftSample], path: str | Path) -> None:
    """Write the dataset as JSON-lines; images referenced by path, never inlined."""
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            record = {
                "id": sample.report_id,
                "prompt_type": sample.prompt_type.value,
                "messages": [
                    {"role": "system", "content": sample.system},
                    {"role": "user", "content": sample.user},
                    {"role": "assistant", "content": sample.target},
                ],
                "images": list(sample.images),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_skips(skips: Iterable[SkipRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for skip in skips:
            record = {
                "id": skip.report_id,
                "reason": skip.reason,
                "unresolved_fragments": list(skip.unresolved_fragments),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
