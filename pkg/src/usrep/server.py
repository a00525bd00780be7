"""HTTP review service: fragment queue browsing and expert decisions.

The server owns the table file for its lifetime.  All mutations are
serialized through one lock, validated against the protected-term rules,
persisted atomically, and appended to an audit log so the table file stays a
pure materialized view of the decision history.  Static review-UI assets are
served from the package's ``static`` directory.
"""

from __future__ import annotations

import json
import threading
from collections import OrderedDict
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from fastapi import Body, FastAPI, Header, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import corpus as corpus_io
from .config import ToolConfig
from .lexicon import (
    FragmentEntry,
    FragmentTable,
    ProtectedTermRule,
    Violation,
    check_protected_terms,
    copy_entry,
    default_rules,
    fragment_hash,
    load_table,
    save_table,
    table_stats,
)
from .segmenter import Report, segment_report

__all__ = ["ReviewState", "create_app"]

ACTIONS = ("approve", "reject", "edit")
MAX_CONTEXTS = 3
CONTEXT_WINDOW = 40
IDEMPOTENCY_CACHE_SIZE = 1024


def _violations_payload(violations: Iterable[Violation]) -> list[dict[str, str]]:
    return [
        {"pattern": v.pattern, "term": v.term, "description": v.description}
        for v in violations
    ]


class ReviewState:
    """All server-side state plus the single-writer mutation path."""

    def __init__(
        self,
        table_path: str | Path,
        corpus: list[Report],
        rules: list[ProtectedTermRule],
        audit_log_path: str | Path,
        config: ToolConfig,
    ):
        self.table_path = Path(table_path)
        self.table = load_table(table_path)
        self.rules = rules
        self.audit_log_path = Path(audit_log_path)
        self.config = config
        self.corpus = corpus
        self.write_lock = threading.Lock()
        self._idempotency: OrderedDict[str, tuple[int, Any]] = OrderedDict()
        self._last_stamp = ""
        self._hash_index = {fragment_hash(e.source): e.source for e in self.table}
        self._contexts, self._sites = self._index_corpus(corpus)

    def _index_corpus(
        self, corpus: list[Report]
    ) -> tuple[dict[str, list[dict[str, str]]], dict[str, list[str]]]:
        contexts: dict[str, list[dict[str, str]]] = {}
        sites: dict[str, set[str]] = {}
        known = {e.source for e in self.table}
        for report in corpus:
            for fragment in segment_report(
                report.text, report.language, self.config.delimiter_set
            ):
                if fragment.normalized not in known:
                    continue
                sites.setdefault(fragment.normalized, set()).add(report.site)
                bucket = contexts.setdefault(fragment.normalized, [])
                if len(bucket) >= MAX_CONTEXTS:
                    continue
                start = report.text.find(fragment.raw)
                if start < 0:
                    excerpt = fragment.raw
                else:
                    lo = max(0, start - CONTEXT_WINDOW)
                    hi = min(len(report.text), start + len(fragment.raw) + CONTEXT_WINDOW)
                    prefix = "…" if lo > 0 else ""
                    suffix = "…" if hi < len(report.text) else ""
                    excerpt = prefix + report.text[lo:hi] + suffix
                bucket.append(
                    {"report_id": report.id, "site": report.site, "excerpt": excerpt}
                )
        return contexts, {k: sorted(v) for k, v in sites.items()}

    def lookup(self, source_hash: str) -> FragmentEntry | None:
        source = self._hash_index.get(source_hash)
        return self.table.get(source) if source is not None else None

    def _next_stamp(self) -> str:
        stamp = datetime.now(timezone.utc).isoformat(timespec="microseconds")
        if stamp <= self._last_stamp:
            stamp = self._last_stamp + "+"
        self._last_stamp = stamp
        return stamp

    def item_payload(self, entry: FragmentEntry) -> dict[str, Any]:
        protected: list[str] = []
        seen: set[str] = set()
        for rule in self.rules:
            for match in rule.finditer(entry.source):
                term = match.group(0)
                if term and term not in seen:
                    seen.add(term)
                    protected.append(term)
        return {
            "hash": fragment_hash(entry.source),
            "source": entry.source,
            "target": entry.target,
            "status": entry.status,
            "occurrences": entry.occurrences,
            "reviewer": entry.reviewer,
            "updated_at": entry.updated_at,
            "contexts": self._contexts.get(entry.source, []),
            "sites": self._sites.get(entry.source, []),
            "protected_terms": protected,
        }

    def list_items(
        self, status: str | None, site: str | None, page: int, page_size: int
    ) -> dict[str, Any]:
        entries = self.table.sorted_entries()
        if status is not None:
            entries = [e for e in entries if e.status == status]
        if site is not None:
            entries = [e for e in entries if site in self._sites.get(e.source, [])]
        total = len(entries)
        start = (page - 1) * page_size
        page_entries = entries[start : start + page_size]
        return {
            "items": [self.item_payload(e) for e in page_entries],
            "total": total,
            "page": page,
            "page_size": page_size,
            "status_counts": self.table.status_counts(),
        }

    def _audit(self, record: dict[str, Any]) -> None:
        with open(self.audit_log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def cached_response(self, key: str | None) -> tuple[int, Any] | None:
        if key is None:
            return None
        return self._idempotency.get(key)

    def cache_response(self, key: str | None, status_code: int, payload: Any) -> None:
        if key is None:
            return
        self._idempotency[key] = (status_code, payload)
        while len(self._idempotency) > IDEMPOTENCY_CACHE_SIZE:
            self._idempotency.popitem(last=False)

    def decide(
        self,
        source_hash: str,
        action: str,
        target: str | None,
        reviewer: str,
        base_updated_at: str | None,
    ) -> tuple[int, Any]:
        """Apply one review decision; returns (http status, payload)."""
        with self.write_lock:
            source = self._hash_index.get(source_hash)
            if source is None:
                return 404, {"error": f"no fragment with hash {source_hash}"}
            entry = self.table.get(source)
            assert entry is not None
            if base_updated_at is not None and base_updated_at != entry.updated_at:
                return 409, {"error": "entry changed since it was fetched",
                             "current": self.item_payload(entry)}

            if action == "approve":
                new_target = entry.target
                new_status = "approved"
                if not new_target:
                    return 422, {"error": "approve requires a candidate target",
                                 "violations": []}
            elif action == "edit":
                new_target = (target or "").strip()
                new_status = "edited"
                if not new_target:
                    return 422, {"error": "edit requires a non-empty target",
                                 "violations": []}
            else:
                new_target = entry.target
                new_status = "rejected"

            candidate = copy_entry(
                entry,
                target=new_target,
                status=new_status,
                reviewer=reviewer,
                updated_at=self._next_stamp(),
            )
            if new_status in ("approved", "edited"):
                violations = check_protected_terms(candidate, self.rules)
                if violations:
                    return 422, {
                        "error": "target drops protected terms",
                        "violations": _violations_payload(violations),
                    }

            previous_status = entry.status
            self.table.replace(candidate)
            save_table(self.table, self.table_path, self.rules)
            self._audit(
                {
                    "hash": source_hash,
                    "source": source,
                    "action": action,
                    "reviewer": reviewer,
                    "target": candidate.target,
                    "previous_status": previous_status,
                    "new_status": candidate.status,
                    "updated_at": candidate.updated_at,
                }
            )
            return 200, self.item_payload(candidate)


def create_app(
    table_path: str | Path,
    corpus_path: str | Path | None = None,
    rules: list[ProtectedTermRule] | None = None,
    audit_log_path: str | Path | None = None,
    config: ToolConfig | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    config = config or ToolConfig()
    corpus = corpus_io.read_reports(corpus_path) if corpus_path else []
    state = ReviewState(
        table_path=table_path,
        corpus=corpus,
        rules=rules if rules is not None else default_rules(),
        audit_log_path=audit_log_path or f"{table_path}.audit.jsonl",
        config=config,
    )
    app = FastAPI(title="usrep review", version="0.1.0")
    app.state.review = state

    @app.get("/api/fragments")
    def list_fragments(
        status: str | None = Query(default=None),
        site: str | None = Query(default=None),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=500),
    ) -> JSONResponse:
        return JSONResponse(state.list_items(status, site, page, page_size))

    @app.get("/api/fragments/{source_hash}")
    def get_fragment(source_hash: str) -> JSONResponse:
        entry = state.lookup(source_hash)
        if entry is None:
            return JSONResponse({"error": f"no fragment with hash {source_hash}"}, 404)
        return JSONResponse(state.item_payload(entry))

    @app.post("/api/fragments/{source_hash}")
    def post_decision(
        source_hash: str,
        body: dict = Body(...),
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ) -> JSONResponse:
        cached = state.cached_response(idempotency_key)
        if cached is not None:
            status_code, payload = cached
            return JSONResponse(payload, status_code)

        action = body.get("action")
        reviewer = body.get("reviewer")
        if action not in ACTIONS:
            return JSONResponse(
                {"error": f"action must be one of {', '.join(ACTIONS)}", "violations": []},
                422,
            )
        if not isinstance(reviewer, str) or not reviewer.strip():
            return JSONResponse(
                {"error": "reviewer must be a non-empty string", "violations": []}, 422
            )
        target = body.get("target")
        if target is not None and not isinstance(target, str):
            return JSONResponse(
                {"error": "target must be a string", "violations": []}, 422
            )
        base_updated_at = body.get("base_updated_at")
        if base_updated_at is not None and not isinstance(base_updated_at, str):
            return JSONResponse(
                {"error": "base_updated_at must be a string", "violations": []}, 422
            )

        status_code, payload = state.decide(
            source_hash, action, target, reviewer.strip(), base_updated_at
        )
        if status_code in (200, 422):
            state.cache_response(idempotency_key, status_code, payload)
        return JSONResponse(payload, status_code)

    @app.get("/api/stats")
    def get_stats() -> JSONResponse:
        stats = table_stats(state.corpus, config.delimiter_set)
        payload = stats.to_json_dict()
        payload["status_counts"] = state.table.status_counts()
        return JSONResponse(payload)

    assets = Path(static_dir) if static_dir is not None else Path(__file__).parent / "static"
    if assets.is_dir():
        app.mount("/", StaticFiles(directory=assets, html=True), name="ui")
    return app
