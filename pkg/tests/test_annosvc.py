from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from vidqg.agreement import (
    BatchItem,
    EvaluationBatch,
    annotations_from_csv,
    krippendorff_alpha,
    RatingMatrix,
)
from vidqg.annosvc import AnnotationStore, compute_agreement, create_app
from vidqg.errors import CorruptStoreError


def _batch(n_items=2) -> EvaluationBatch:
    items = [
        BatchItem(
            item_id=f"v{k}:mock:m1:i1",
            video_id=f"v{k}",
            source="khan",
            model="mock",
            mode=1,
            iteration=1,
            question=f"What is topic {k}?",
            transcript_excerpt=f"Topic {k} explained.",
        )
        for k in range(n_items)
    ]
    return EvaluationBatch(
        seed=0, videos_per_source=1, response_iteration=1, items=tuple(items)
    )


@pytest.fixture
def client(tmp_path):
    store = AnnotationStore(tmp_path / "annotations.csv")
    app = create_app(_batch(), store)
    with TestClient(app) as tc:
        tc.store = store
        tc.store_path = tmp_path / "annotations.csv"
        yield tc


def _annotation(rater="r1", item="v0:mock:m1:i1", relevance=True, answerability=True, bloom="understand"):
    return {
        "rater_id": rater,
        "item_id": item,
        "relevance": relevance,
        "answerability": answerability,
        "bloom": bloom,
    }


def test_get_batch(client):
    doc = client.get("/api/batch").json()
    assert len(doc["items"]) == 2
    assert doc["items"][0]["question"] == "What is topic 0?"
    assert doc["items"][0]["progress"] == {}


def test_get_single_item(client):
    doc = client.get("/api/items/v1:mock:m1:i1").json()
    assert doc["video_id"] == "v1"
    assert client.get("/api/items/ghost").status_code == 404


def test_post_annotation_persists_before_ack(client):
    resp = client.post("/api/annotations", json=_annotation())
    assert resp.status_code == 204
    text = client.store_path.read_text(encoding="utf-8")
    assert "r1,v0:mock:m1:i1,true,true,understand" in text


def test_post_twice_upserts(client):
    client.post("/api/annotations", json=_annotation(bloom="remember"))
    client.post("/api/annotations", json=_annotation(bloom="apply"))
    records = client.get("/api/annotations", params={"rater_id": "r1"}).json()
    assert len(records) == 1
    assert records[0]["bloom"] == "apply"


def test_post_annotation_round_trip(client):
    body = _annotation(relevance=False, answerability=True, bloom="analyze")
    client.post("/api/annotations", json=body)
    stored = client.get("/api/annotations").json()[0]
    for key in ("rater_id", "item_id", "relevance", "answerability", "bloom"):
        assert stored[key] == body[key]


def test_post_rejects_unknown_item(client):
    resp = client.post("/api/annotations", json=_annotation(item="nope"))
    assert resp.status_code == 404


def test_post_rejects_bad_bloom(client):
    resp = client.post("/api/annotations", json=_annotation(bloom="transcend"))
    assert resp.status_code == 422


def test_progress_counters(client):
    client.post("/api/annotations", json=_annotation())
    doc = client.get("/api/batch").json()
    assert doc["items"][0]["progress"] == {"r1": 1}


def test_agreement_perfect(client):
    for item in ("v0:mock:m1:i1", "v1:mock:m1:i1"):
        for rater in ("r1", "r2"):
            client.post(
                "/api/annotations",
                json=_annotation(
                    rater=rater,
                    item=item,
                    relevance=item.endswith("v0:mock:m1:i1"),
                    answerability=True,
                    bloom="remember" if item.startswith("v0") else "create",
                ),
            )
    doc = client.get("/api/agreement").json()
    assert doc["relevance"] == 1.0
    assert doc["bloom"] == 1.0
    # answerability is the same code everywhere: degenerate, not 1.0
    assert doc["answerability"] == "degenerate"


def test_agreement_single_rater_degenerate(client):
    client.post("/api/annotations", json=_annotation())
    doc = client.get("/api/agreement").json()
    assert doc == {
        "relevance": "degenerate",
        "answerability": "degenerate",
        "bloom": "degenerate",
    }


def test_agreement_matches_offline_csv(client):
    judgments = {
        ("r1", "v0:mock:m1:i1"): ("understand", True),
        ("r1", "v1:mock:m1:i1"): ("apply", False),
        ("r2", "v0:mock:m1:i1"): ("understand", False),
        ("r2", "v1:mock:m1:i1"): ("remember", False),
    }
    for (rater, item), (bloom, rel) in judgments.items():
        client.post(
            "/api/annotations",
            json=_annotation(rater=rater, item=item, relevance=rel, bloom=bloom),
        )
    online = client.get("/api/agreement").json()
    offline_records = annotations_from_csv(client.store_path.read_text(encoding="utf-8"))
    assert online == compute_agreement(offline_records)
    bloom_alpha = krippendorff_alpha(
        RatingMatrix.from_annotations(offline_records, "bloom")
    )
    assert online["bloom"] == bloom_alpha


def test_store_restart_safe(tmp_path):
    path = tmp_path / "store.csv"
    store = AnnotationStore(path)
    app = create_app(_batch(), store)
    with TestClient(app) as tc:
        tc.post("/api/annotations", json=_annotation())
    reopened = AnnotationStore(path)
    assert len(reopened.records()) == 1


def test_corrupt_store_names_line(tmp_path):
    path = tmp_path / "store.csv"
    path.write_text(
        "rater_id,item_id,relevance,answerability,bloom,timestamp\n"
        "r1,i1,true,true,understand,t1\n"
        "r1,i2,maybe,true,understand,t2\n",
        encoding="utf-8",
    )
    with pytest.raises(CorruptStoreError) as exc:
        AnnotationStore(path)
    assert exc.value.line_no == 3
