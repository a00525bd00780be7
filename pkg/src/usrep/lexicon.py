"""The Chinese-to-English fragment lookup table (translation memory).

Builds the table from a corpus, enforces protected-term preservation through
every persistence path, applies approved translations to whole reports, and
computes fragment distribution statistics per organ site.

The table persists as a single UTF-8 TSV file sorted by descending
occurrences then source, so review decisions produce auditable diffs.
"""

from __future__ import annotations

import fcntl
import hashlib
import os
import re
import tempfile
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .segmenter import DEFAULT_DELIMITERS, Report, normalize_text, segment_report

__all__ = [
    "DEFAULT_PROTECTED_PATTERNS",
    "RESOLVED_STATUSES",
    "STATUSES",
    "CorpusStats",
    "FragmentEntry",
    "FragmentTable",
    "ProtectedTermError",
    "ProtectedTermRule",
    "RulesConfigError",
    "SiteStats",
    "TableFormatError",
    "UnresolvedFragmentsError",
    "Violation",
    "apply_table",
    "build_table",
    "check_protected_terms",
    "default_rules",
    "fragment_hash",
    "load_candidates",
    "load_rules",
    "load_table",
    "save_table",
    "table_lock",
    "table_stats",
]

STATUSES = ("pending", "approved", "edited", "rejected")
# Statuses whose target may be used by apply_table.
RESOLVED_STATUSES = frozenset({"approved", "edited"})

# "CFDI" is the canonical domain term that must survive translation verbatim;
# deployments extend the list through a rules file.
DEFAULT_PROTECTED_PATTERNS = ("CFDI",)

TABLE_COLUMNS = ("source", "target", "status", "occurrences", "reviewer", "updated_at")


class TableFormatError(ValueError):
    """A table file that cannot be parsed or violates an entry invariant."""


class RulesConfigError(ValueError):
    """A protected-term rules file containing an invalid pattern."""


class ProtectedTermError(ValueError):
    """An approved/edited entry failing its protected-term checks."""

    def __init__(self, source: str, violations: list["Violation"]):
        self.source = source
        self.violations = violations
        terms = ", ".join(sorted({v.term for v in violations}))
        super().__init__(f"entry {source!r}: target drops protected term(s): {terms}")


class UnresolvedFragmentsError(ValueError):
    """A report whose fragments are not all approved/edited in the table."""

    def __init__(self, report_id: str, fragments: list[str]):
        self.report_id = report_id
        self.fragments = fragments
        shown = "; ".join(fragments)
        super().__init__(f"report {report_id}: {len(fragments)} unresolved fragment(s): {shown}")


@dataclass
class FragmentEntry:
    """One row of the lookup table keyed by normalized source fragment."""

    source: str
    target: str = ""
    status: str = "pending"
    occurrences: int = 1
    reviewer: str = ""
    updated_at: str = ""

    def __post_init__(self):
        if not self.source:
            raise ValueError("entry source must be non-empty")
        if self.status not in STATUSES:
            raise ValueError(f"entry {self.source!r}: unknown status {self.status!r}")
        if self.occurrences < 0:
            raise ValueError(f"entry {self.source!r}: occurrences must be non-negative")
        if self.status in RESOLVED_STATUSES and not self.target:
            raise ValueError(f"entry {self.source!r}: status {self.status} requires a target")

    @property
    def resolved(self) -> bool:
        return self.status in RESOLVED_STATUSES


@dataclass(frozen=True)
class ProtectedTermRule:
    """Case-sensitive regex whose source matches must survive translation."""

    pattern: str
    description: str = ""
    _compiled: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            compiled = re.compile(self.pattern)
        except re.error as exc:
            raise RulesConfigError(f"invalid protected-term pattern {self.pattern!r}: {exc}") from exc
        object.__setattr__(self, "_compiled", compiled)

    def finditer(self, text: str) -> Iterator[re.Match]:
        return self._compiled.finditer(text)


@dataclass(frozen=True)
class Violation:
    """A protected term matched in the source but absent from the target."""

    pattern: str
    term: str
    description: str = ""


@dataclass(frozen=True)
class SiteStats:
    total_fragment_occurrences: int = 0
    unique_fragments: int = 0


@dataclass(frozen=True)
class CorpusStats:
    """Fragment distribution by total occurrences and unique counts per site.

    ``overall`` sums the per-site numbers, so a fragment appearing at two
    sites counts once per site in the overall unique total.
    """

    per_site: dict[str, SiteStats]
    overall: SiteStats

    def to_json_dict(self) -> dict:
        return {
            "per_site": {
                site: {
                    "total_fragment_occurrences": s.total_fragment_occurrences,
                    "unique_fragments": s.unique_fragments,
                }
                for site, s in sorted(self.per_site.items())
            },
            "overall": {
                "total_fragment_occurrences": self.overall.total_fragment_occurrences,
                "unique_fragments": self.overall.unique_fragments,
            },
        }


class FragmentTable:
    """Mapping from normalized source fragments to their table entries.

    Iteration order is deterministic: descending occurrences, then
    lexicographic source.
    """

    def __init__(self, entries: Iterable[FragmentEntry] = ()):
        self._entries: dict[str, FragmentEntry] = {}
        for entry in entries:
            self.add(entry)

    def add(self, entry: FragmentEntry) -> None:
        if entry.source in self._entries:
            raise ValueError(f"duplicate table entry for source {entry.source!r}")
        self._entries[entry.source] = entry

    def get(self, source: str) -> FragmentEntry | None:
        return self._entries.get(source)

    def replace(self, entry: FragmentEntry) -> None:
        if entry.source not in self._entries:
            raise KeyError(f"no table entry for source {entry.source!r}")
        self._entries[entry.source] = entry

    def resolved_target(self, source: str) -> str | None:
        entry = self._entries.get(source)
        if entry is not None and entry.resolved:
            return entry.target
        return None

    def sorted_entries(self) -> list[FragmentEntry]:
        return sorted(self._entries.values(), key=lambda e: (-e.occurrences, e.source))

    def status_counts(self) -> dict[str, int]:
        counts = {status: 0 for status in STATUSES}
        for entry in self._entries.values():
            counts[entry.status] += 1
        return counts

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[FragmentEntry]:
        return iter(self.sorted_entries())

    def __contains__(self, source: str) -> bool:
        return source in self._entries


def fragment_hash(source: str) -> str:
    """Stable URL-safe identifier for a normalized source fragment."""
    return hashlib.sha256(normalize_text(source).encode("utf-8")).hexdigest()


def build_table(
    corpus: Iterable[Report],
    candidates: Mapping[str, str] | None = None,
    delimiters: frozenset[str] | set[str] = DEFAULT_DELIMITERS,
) -> FragmentTable:
    """Build a pending-status table from a Chinese corpus.

    One entry per distinct normalized fragment; occurrences counted with
    multiplicity across all reports; target filled from *candidates* where
    present.  Deterministic: the same corpus and candidates always produce
    the same table.
    """
    candidates = candidates or {}
    counts: Counter[str] = Counter()
    for report in corpus:
        if report.language != "zh":
            raise ValueError(f"report {report.id}: table corpus must be Chinese (zh)")
        counts.update(f.normalized for f in segment_report(report.text, "zh", delimiters))

    table = FragmentTable()
    for source in sorted(counts, key=lambda s: (-counts[s], s)):
        table.add(
            FragmentEntry(
                source=source,
                target=candidates.get(source, ""),
                status="pending",
                occurrences=counts[source],
            )
        )
    return table


def check_protected_terms(
    entry: FragmentEntry, rules: Iterable[ProtectedTermRule]
) -> list[Violation]:
    """Return one violation per (rule, matched substring) missing from the target.

    A matched substring counts as preserved when its normalized form appears
    verbatim inside the normalized target.
    """
    target_norm = normalize_text(entry.target)
    violations: list[Violation] = []
    seen: set[tuple[str, str]] = set()
    for rule in rules:
        for match in rule.finditer(entry.source):
            term = match.group(0)
            if not term:
                continue
            key = (rule.pattern, term)
            if key in seen:
                continue
            seen.add(key)
            if normalize_text(term) not in target_norm:
                violations.append(
                    Violation(pattern=rule.pattern, term=term, description=rule.description)
                )
    return violations


def apply_table(
    report: Report,
    table: FragmentTable,
    delimiters: frozenset[str] | set[str] = DEFAULT_DELIMITERS,
    fragment_join: str = ",",
    terminal_mark: str = ".",
) -> Report:
    """Translate a Chinese report into English through the lookup table.

    Every fragment must resolve to an approved or edited entry; otherwise
    UnresolvedFragmentsError lists all unresolved fragments and nothing is
    produced.  Targets are joined in original fragment order.
    """
    if report.language != "zh":
        raise ValueError(f"report {report.id}: apply_table expects a Chinese report")
    fragments = segment_report(report.text, "zh", delimiters)
    targets: list[str] = []
    unresolved: list[str] = []
    seen_unresolved: set[str] = set()
    for fragment in fragments:
        target = table.resolved_target(fragment.normalized)
        if target is None:
            if fragment.normalized not in seen_unresolved:
                seen_unresolved.add(fragment.normalized)
                unresolved.append(fragment.normalized)
        else:
            targets.append(target)
    if unresolved:
        raise UnresolvedFragmentsError(report.id, unresolved)
    return Report(
        id=report.id,
        site=report.site,
        language="en",
        text=fragment_join.join(targets) + terminal_mark,
        images=report.images,
    )


def table_stats(
    corpus: Iterable[Report],
    delimiters: frozenset[str] | set[str] = DEFAULT_DELIMITERS,
) -> CorpusStats:
    """Per-site and overall fragment occurrence/unique counts."""
    per_site_counts: dict[str, Counter[str]] = {}
    for report in corpus:
        counter = per_site_counts.setdefault(report.site, Counter())
        counter.update(f.normalized for f in segment_report(report.text, report.language, delimiters))

    per_site = {
        site: SiteStats(
            total_fragment_occurrences=sum(counter.values()),
            unique_fragments=len(counter),
        )
        for site, counter in per_site_counts.items()
    }
    overall = SiteStats(
        total_fragment_occurrences=sum(s.total_fragment_occurrences for s in per_site.values()),
        unique_fragments=sum(s.unique_fragments for s in per_site.values()),
    )
    return CorpusStats(per_site=per_site, overall=overall)


def default_rules() -> list[ProtectedTermRule]:
    return [ProtectedTermRule(pattern=p) for p in DEFAULT_PROTECTED_PATTERNS]


def load_rules(path: str | Path) -> list[ProtectedTermRule]:
    """Load protected-term rules: one pattern per line, ``#`` comments allowed."""
    rules: list[ProtectedTermRule] = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            pattern = line.strip()
            if not pattern or pattern.startswith("#"):
                continue
            try:
                rules.append(ProtectedTermRule(pattern=pattern))
            except RulesConfigError as exc:
                raise RulesConfigError(f"{path}: line {line_number}: {exc}") from exc
    return rules


def load_candidates(path: str | Path) -> dict[str, str]:
    """Load candidate translations from a two-column (source, target) TSV."""
    candidates: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            row = line.rstrip("\n")
            if not row.strip():
                continue
            parts = row.split("\t")
            if len(parts) != 2:
                raise TableFormatError(
                    f"{path}: line {line_number}: expected 2 tab-separated columns, got {len(parts)}"
                )
            source, target = normalize_text(parts[0]), parts[1].strip()
            if source:
                candidates[source] = target
    return candidates


def _validate_entry_for_save(entry: FragmentEntry, rules: Iterable[ProtectedTermRule]) -> None:
    for name in ("source", "target", "reviewer", "updated_at"):
        value = getattr(entry, name)
        if "\t" in value or "\n" in value or "\r" in value:
            raise TableFormatError(
                f"entry {entry.source!r}: field {name} contains a tab or newline"
            )
    if entry.status in RESOLVED_STATUSES:
        violations = check_protected_terms(entry, rules)
        if violations:
            raise ProtectedTermError(entry.source, violations)


def save_table(
    table: FragmentTable,
    path: str | Path,
    rules: Iterable[ProtectedTermRule] | None = None,
) -> None:
    """Persist the table atomically (write-temp-then-rename).

    Approved/edited entries are re-checked against the protected-term rules;
    a violating entry aborts the save, so no persistence path can produce an
    approved entry that drops a protected term.
    """
    rules = list(default_rules() if rules is None else rules)
    entries = table.sorted_entries()
    for entry in entries:
        _validate_entry_for_save(entry, rules)

    path = Path(path)
    fd, tmp_path = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write("\t".join(TABLE_COLUMNS) + "\n")
            for entry in entries:
                fh.write(
                    "\t".join(
                        (
                            entry.source,
                            entry.target,
                            entry.status,
                            str(entry.occurrences),
                            entry.reviewer,
                            entry.updated_at,
                        )
                    )
                    + "\n"
                )
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def load_table(path: str | Path) -> FragmentTable:
    """Load a TSV table file, validating the header and entry invariants."""
    table = FragmentTable()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split("\t") != list(TABLE_COLUMNS):
            raise TableFormatError(f"{path}: missing or malformed header row")
        for line_number, line in enumerate(fh, start=2):
            row = line.rstrip("\n")
            if not row:
                continue
            parts = row.split("\t")
            if len(parts) != len(TABLE_COLUMNS):
                raise TableFormatError(
                    f"{path}: line {line_number}: expected {len(TABLE_COLUMNS)} columns, got {len(parts)}"
                )
            source, target, status, occurrences, reviewer, updated_at = parts
            try:
                entry = FragmentEntry(
                    source=source,
                    target=target,
                    status=status,
                    occurrences=int(occurrences),
                    reviewer=reviewer,
                    updated_at=updated_at,
                )
                table.add(entry)
            except ValueError as exc:
                raise TableFormatError(f"{path}: line {line_number}: {exc}") from exc
    return table


@contextmanager
def table_lock(path: str | Path):
    """Exclusive advisory lock guarding table mutations (single writer)."""
    lock_path = Path(str(path) + ".lock")
    with open(lock_path, "w") as fh:
        try:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError as exc:
            raise RuntimeError(f"table {path} is locked by another process") from exc
        try:
            yield
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)


def copy_entry(entry: FragmentEntry, **changes) -> FragmentEntry:
    """A modified copy of *entry*; field invariants re-checked."""
    return replace(entry, **changes)
