"""Report text normalization, fragment segmentation, and fragment-level diffing.

Standardized ultrasound reports are built from short clinical phrases
("fragments") separated by commas, semicolons, and periods.  This module
splits report text on those delimiters (both ASCII and full-width CJK
forms), normalizes fragments into canonical lookup keys, and compares two
reports fragment-by-fragment.
"""

from __future__ import annotations

import re
import unicodedata
from collections import deque
from dataclasses import dataclass, field

__all__ = [
    "DEFAULT_DELIMITERS",
    "KNOWN_SITES",
    "LANGUAGES",
    "Fragment",
    "FragmentDiff",
    "LanguageMismatchError",
    "Report",
    "fragment_diff",
    "normalize_text",
    "segment_report",
]

# ASCII delimiters named by the segmentation rule plus their full-width CJK
# equivalents, which are the standard forms in Chinese source reports.
DEFAULT_DELIMITERS = frozenset({",", ";", ".", "，", "；", "。"})

LANGUAGES = ("zh", "en")
KNOWN_SITES = ("mammary", "thyroid", "liver")

_WS_RUN = re.compile(r"\s+")


class LanguageMismatchError(ValueError):
    """Raised when two reports of different languages are compared."""


def normalize_text(text: str) -> str:
    """Return the canonical form of *text* used as a lookup key.

    Applies Unicode NFKC (which folds full-width ASCII variants such as
    "ＣＦＤＩ" to "CFDI"), strips leading/trailing whitespace, and collapses
    internal whitespace runs to a single space.  Letter case is preserved.
    Idempotent: ``normalize_text(normalize_text(x)) == normalize_text(x)``.
    """
    return _WS_RUN.sub(" ", unicodedata.normalize("NFKC", text)).strip()


@dataclass(frozen=True)
class Report:
    """One standardized ultrasound report with exactly two image references."""

    id: str
    site: str
    language: str
    text: str
    images: tuple[str, str]

    def __post_init__(self):
        if not self.id:
            raise ValueError("report id must be non-empty")
        if not self.site:
            raise ValueError(f"report {self.id}: site must be non-empty")
        if self.language not in LANGUAGES:
            raise ValueError(
                f"report {self.id}: language must be one of {LANGUAGES}, got {self.language!r}"
            )
        if len(self.images) != 2:
            raise ValueError(
                f"report {self.id}: exactly 2 image references required, got {len(self.images)}"
            )
        object.__setattr__(self, "images", tuple(self.images))
        if not normalize_text(self.text):
            raise ValueError(f"report {self.id}: text is empty after normalization")


@dataclass(frozen=True)
class Fragment:
    """A delimiter-bounded clinical phrase within a report.

    ``raw`` is the trimmed original text; ``normalized`` is the canonical
    lookup key; ``index`` is the 0-based position within the report.
    """

    raw: str
    normalized: str
    language: str
    index: int

    def __post_init__(self):
        if not self.raw:
            raise ValueError("fragment raw text must be non-empty")


@dataclass
class FragmentDiff:
    """Fragment-level comparison of a predicted report against a reference.

    Every predicted fragment lands in exactly one of ``matched`` or
    ``extra``; every reference fragment in exactly one of ``matched`` or
    ``missing``.
    """

    matched: list[tuple[Fragment, Fragment]] = field(default_factory=list)
    extra: list[Fragment] = field(default_factory=list)
    missing: list[Fragment] = field(default_factory=list)


def _splits_here(text: str, i: int, delimiters: frozenset[str] | set[str]) -> bool:
    ch = text[i]
    if ch not in delimiters:
        return False
    # A period flanked by digits is a decimal point ("1.5cm"), not a delimiter.
    if ch == "." and 0 < i < len(text) - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
        return False
    return True


def segment_report(
    text: str,
    language: str = "zh",
    delimiters: frozenset[str] | set[str] = DEFAULT_DELIMITERS,
) -> list[Fragment]:
    """Split *text* into fragments on every delimiter occurrence.

    Delimiters are discarded, pieces are trimmed, empty pieces dropped, and
    the surviving fragments indexed in order of appearance.  Text containing
    only delimiters and whitespace yields an empty list.
    """
    if not delimiters:
        raise ValueError("delimiter set must not be empty")
    pieces: list[str] = []
    start = 0
    for i in range(len(text)):
        if _splits_here(text, i, delimiters):
            pieces.append(text[start:i])
            start = i + 1
    pieces.append(text[start:])

    fragments: list[Fragment] = []
    for piece in pieces:
        raw = piece.strip()
        if not raw:
            continue
        fragments.append(
            Fragment(
                raw=raw,
                normalized=normalize_text(raw),
                language=language,
                index=len(fragments),
            )
        )
    return fragments


def fragment_diff(
    pred: Report,
    ref: Report,
    delimiters: frozenset[str] | set[str] = DEFAULT_DELIMITERS,
) -> FragmentDiff:
    """Compare two same-language reports fragment by fragment.

    Matching is greedy on exact normalized equality with multiplicity: each
    predicted fragment, in order, consumes the earliest unconsumed reference
    fragment with the same normalized text.  Unmatched predicted fragments
    are ``extra``; unconsumed reference fragments are ``missing``.
    """
    if pred.language != ref.language:
        raise LanguageMismatchError(
            f"cannot diff a {pred.language} report against a {ref.language} report"
        )
    pred_frags = segment_report(pred.text, pred.language, delimiters)
    ref_frags = segment_report(ref.text, ref.language, delimiters)

    pool: dict[str, deque[Fragment]] = {}
    for rf in ref_frags:
        pool.setdefault(rf.normalized, deque()).append(rf)

    diff = FragmentDiff()
    consumed: set[int] = set()
    for pf in pred_frags:
        queue = pool.get(pf.normalized)
        if queue:
            rf = queue.popleft()
            consumed.add(rf.index)
            diff.matched.append((pf, rf))
        else:
            diff.extra.append(pf)
    diff.missing = [rf for rf in ref_frags if rf.index not in consumed]
    return diff
