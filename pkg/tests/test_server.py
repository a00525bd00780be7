from __future__ import annotations

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from usrep.lexicon import (
    FragmentEntry,
    FragmentTable,
    default_rules,
    load_table,
    save_table,
)
from usrep.server import create_app

from conftest import write_corpus, make_report


@pytest.fixture
def review_env(tmp_path, zh_reports):
    corpus_path = write_corpus(tmp_path / "corpus.jsonl", zh_reports)
    table_path = tmp_path / "table.tsv"
    table = FragmentTable(
        [
            FragmentEntry("甲状腺大小正常", "the thyroid gland is normal in size", "pending", 2),
            FragmentEntry("CFDI示血流信号正常", "CFDI shows a normal blood flow signal", "pending", 1),
            FragmentEntry("未见明显肿块", "", "pending", 1),
            FragmentEntry("肝脏形态规则", "the liver is regular in shape", "pending", 1),
            FragmentEntry("包膜完整", "the capsule is intact", "pending", 1),
        ]
    )
    save_table(table, table_path, default_rules())
    audit_path = tmp_path / "audit.jsonl"
    app = create_app(
        table_path=table_path,
        corpus_path=corpus_path,
        audit_log_path=audit_path,
    )
    return TestClient(app), table_path, audit_path


def get_item(client: TestClient, source: str) -> dict:
    data = client.get("/api/fragments", params={"page_size": 100}).json()
    return next(i for i in data["items"] if i["source"] == source)


def test_fresh_table_lists_all_pending(review_env):
    client, _, _ = review_env
    data = client.get("/api/fragments", params={"status": "pending"}).json()
    assert data["total"] == 5
    assert len(data["items"]) == 5
    assert data["status_counts"]["pending"] == 5


def test_items_ordered_by_occurrences_desc(review_env):
    client, _, _ = review_env
    items = client.get("/api/fragments").json()["items"]
    assert items[0]["source"] == "甲状腺大小正常"
    occ = [i["occurrences"] for i in items]
    assert occ == sorted(occ, reverse=True)


def test_filter_approved_on_fresh_table_is_empty(review_env):
    client, _, _ = review_env
    data = client.get("/api/fragments", params={"status": "approved"}).json()
    assert data["total"] == 0 and data["items"] == []


def test_item_carries_contexts_sites_and_protected_terms(review_env):
    client, _, _ = review_env
    item = get_item(client, "CFDI示血流信号正常")
    assert item["protected_terms"] == ["CFDI"]
    assert item["sites"] == ["thyroid"]
    assert 1 <= len(item["contexts"]) <= 3
    assert all("CFDI示血流信号正常" in c["excerpt"] for c in item["contexts"])
    assert item["hash"]


def test_site_filter(review_env):
    client, _, _ = review_env
    data = client.get("/api/fragments", params={"site": "liver"}).json()
    assert {i["source"] for i in data["items"]} == {"肝脏形态规则", "包膜完整"}


def test_pagination(review_env):
    client, _, _ = review_env
    page1 = client.get("/api/fragments", params={"page": 1, "page_size": 2}).json()
    page2 = client.get("/api/fragments", params={"page": 2, "page_size": 2}).json()
    page3 = client.get("/api/fragments", params={"page": 3, "page_size": 2}).json()
    assert page1["total"] == 5
    assert len(page1["items"]) == 2 and len(page2["items"]) == 2 and len(page3["items"]) == 1
    seen = [i["source"] for p in (page1, page2, page3) for i in p["items"]]
    assert len(set(seen)) == 5


def test_approve_persists_to_disk_and_audit(review_env):
    client, table_path, audit_path = review_env
    item = get_item(client, "甲状腺大小正常")
    response = client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "approve", "reviewer": "dr_wang"},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "approved"
    assert body["reviewer"] == "dr_wang"
    assert body["updated_at"]

    fetched = client.get(f"/api/fragments/{item['hash']}").json()
    assert fetched["status"] == "approved"

    on_disk = load_table(table_path).get("甲状腺大小正常")
    assert on_disk.status == "approved"

    audit = [json.loads(l) for l in audit_path.read_text(encoding="utf-8").splitlines()]
    assert len(audit) == 1
    assert audit[0]["action"] == "approve"
    assert audit[0]["previous_status"] == "pending"


def test_edit_updates_target(review_env):
    client, table_path, _ = review_env
    item = get_item(client, "未见明显肿块")
    response = client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "edit", "target": "no obvious mass is seen", "reviewer": "dr_li"},
    )
    assert response.status_code == 200
    assert response.json()["status"] == "edited"
    assert load_table(table_path).get("未见明显肿块").target == "no obvious mass is seen"


def test_reject_leaves_pending_filter(review_env):
    client, _, _ = review_env
    item = get_item(client, "包膜完整")
    assert client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "reject", "reviewer": "dr_li"},
    ).status_code == 200
    pending = client.get("/api/fragments", params={"status": "pending"}).json()
    assert "包膜完整" not in {i["source"] for i in pending["items"]}


def test_edit_dropping_protected_term_is_422_and_not_persisted(review_env):
    client, table_path, audit_path = review_env
    item = get_item(client, "CFDI示血流信号正常")
    response = client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "edit", "target": "shows a normal blood flow signal",
              "reviewer": "dr_li"},
    )
    assert response.status_code == 422
    violations = response.json()["violations"]
    assert violations and violations[0]["term"] == "CFDI"

    on_disk = load_table(table_path).get("CFDI示血流信号正常")
    assert on_disk.status == "pending"
    assert not audit_path.exists() or audit_path.read_text(encoding="utf-8") == ""


def test_approve_without_candidate_target_is_422(review_env):
    client, _, _ = review_env
    item = get_item(client, "未见明显肿块")
    response = client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "approve", "reviewer": "dr_li"},
    )
    assert response.status_code == 422


def test_edit_empty_target_is_422(review_env):
    client, _, _ = review_env
    item = get_item(client, "未见明显肿块")
    response = client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "edit", "target": "   ", "reviewer": "dr_li"},
    )
    assert response.status_code == 422


def test_unknown_hash_is_404(review_env):
    client, _, _ = review_env
    response = client.post(
        "/api/fragments/" + "0" * 64,
        json={"action": "approve", "reviewer": "dr_li"},
    )
    assert response.status_code == 404


def test_bad_action_is_422(review_env):
    client, _, _ = review_env
    item = get_item(client, "包膜完整")
    response = client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "promote", "reviewer": "dr_li"},
    )
    assert response.status_code == 422


def test_missing_reviewer_is_422(review_env):
    client, _, _ = review_env
    item = get_item(client, "包膜完整")
    response = client.post(f"/api/fragments/{item['hash']}", json={"action": "approve"})
    assert response.status_code == 422


def test_stale_base_updated_at_is_409_with_current(review_env):
    client, _, _ = review_env
    item = get_item(client, "甲状腺大小正常")
    first = client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "approve", "reviewer": "dr_a", "base_updated_at": item["updated_at"]},
    )
    assert first.status_code == 200
    stale = client.post(
        f"/api/fragments/{item['hash']}",
        json={"action": "reject", "reviewer": "dr_b", "base_updated_at": item["updated_at"]},
    )
    assert stale.status_code == 409
    assert stale.json()["current"]["status"] == "approved"


def test_idempotency_key_replays_response(review_env):
    client, _, audit_path = review_env
    item = get_item(client, "甲状腺大小正常")
    headers = {"Idempotency-Key": "gesture-1"}
    body = {"action": "approve", "reviewer": "dr_a"}
    r1 = client.post(f"/api/fragments/{item['hash']}", json=body, headers=headers)
    r2 = client.post(f"/api/fragments/{item['hash']}", json=body, headers=headers)
    assert r1.status_code == r2.status_code == 200
    assert r1.json() == r2.json()
    audit = audit_path.read_text(encoding="utf-8").splitlines()
    assert len(audit) == 1  # second gesture replayed, not re-applied


def test_stats_endpoint(review_env):
    client, _, _ = review_env
    data = client.get("/api/stats").json()
    assert data["overall"]["total_fragment_occurrences"] == 6
    assert data["per_site"]["thyroid"]["unique_fragments"] == 3
    assert data["status_counts"]["pending"] == 5


def test_static_ui_served(review_env):
    client, _, _ = review_env
    response = client.get("/")
    assert response.status_code == 200
    assert "<title>" in response.text.lower() or "<html" in response.text.lower()


def test_approved_violation_unreachable_via_post(review_env):
    """No POST sequence can yield an approved entry missing a protected term."""
    client, table_path, _ = review_env
    item = get_item(client, "CFDI示血流信号正常")
    attempts = [
        {"action": "edit", "target": "flow normal", "reviewer": "x"},
        {"action": "edit", "target": "cfdi lowercase wrong", "reviewer": "x"},
    ]
    for body in attempts:
        assert client.post(f"/api/fragments/{item['hash']}", json=body).status_code == 422
    entry = load_table(table_path).get("CFDI示血流信号正常")
    assert entry.status == "pending"
    assert entry.target == "CFDI shows a normal blood flow signal"
