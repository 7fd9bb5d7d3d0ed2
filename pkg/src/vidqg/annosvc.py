"""HTTP service for the manual rating workflow.

Serves a sampled evaluation batch to the companion UI and collects
annotations into a CSV store. Submissions are upserts keyed on
(rater_id, item_id): raters can revise a judgment before the discussion
phase and exactly one record per key is kept.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import uvicorn
from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .agreement import (
    AnnotationRecord,
    BloomLevel,
    EvaluationBatch,
    RatingMatrix,
    annotations_from_csv,
    annotations_to_csv,
    krippendorff_alpha,
)
from .errors import BindFailureError, CorruptStoreError, InsufficientDataError

DEGENERATE = "degenerate"


class AnnotationIn(BaseModel):
    rater_id: str
    item_id: str
    relevance: bool
    answerability: bool
    bloom: str


class AnnotationStore:
    """CSV-backed annotation store, one record per (rater_id, item_id).

    Every upsert rewrites the file atomically (tmp + rename), so the store
    is durable before a submission is acknowledged and a torn write cannot
    corrupt it. Batches are desk-scale; the rewrite cost is irrelevant.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[tuple[str, str], AnnotationRecord] = {}
        if self.path.exists():
            self._load()

    def _load(self):
        text = self.path.read_text(encoding="utf-8")
        try:
            records = annotations_from_csv(text)
        except ValueError as exc:
            line_no = _find_bad_line(text)
            raise CorruptStoreError(str(self.path), line_no, str(exc)) from exc
        for record in records:
            self._records[(record.rater_id, record.item_id)] = record

    def upsert(self, record: AnnotationRecord):
        with self._lock:
            self._records[(record.rater_id, record.item_id)] = record
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            tmp.write_text(annotations_to_csv(self.records()), encoding="utf-8")
            tmp.replace(self.path)

    def records(self, rater_id: str | None = None) -> list[AnnotationRecord]:
        records = sorted(
            self._records.values(), key=lambda r: (r.rater_id, r.item_id)
        )
        if rater_id is None:
            return records
        return [r for r in records if r.rater_id == rater_id]


def _find_bad_line(text: str) -> int:
    # best effort: first line that fails to parse on its own
    lines = text.splitlines()
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        try:
            annotations_from_csv("\n".join([",".join(
                ["rater_id", "item_id", "relevance", "answerability", "bloom", "timestamp"]
            ), line]))
        except ValueError:
            return i
    return 1


@dataclass
class _AgreementView:
    relevance: float | str
    answerability: float | str
    bloom: float | str


def _alpha_or_degenerate(records, dimension: str):
    try:
        matrix = RatingMatrix.from_annotations(records, dimension)
    except InsufficientDataError:
        return DEGENERATE
    alpha = krippendorff_alpha(matrix)
    return DEGENERATE if alpha is None else alpha


def compute_agreement(records) -> dict:
    return {
        "relevance": _alpha_or_degenerate(records, "relevance"),
        "answerability": _alpha_or_degenerate(records, "answerability"),
        "bloom": _alpha_or_degenerate(records, "bloom"),
    }


def create_app(
    batch: EvaluationBatch,
    store: AnnotationStore,
    cors_origins: tuple[str, ...] = ("*",),
) -> FastAPI:
    app = FastAPI(title="vidqg annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    items = {item.item_id: item for item in batch.items}

    def item_view(item) -> dict:
        completed: dict[str, int] = {}
        for record in store.records():
            if record.item_id in items:
                completed[record.rater_id] = completed.get(record.rater_id, 0) + 1
        return {**item.to_dict(), "progress": completed}

    @app.get("/api/batch")
    def get_batch():
        return {"items": [item_view(item) for item in batch.items]}

    @app.get("/api/items/{item_id}")
    def get_item(item_id: str):
        item = items.get(item_id)
        if item is None:
            raise HTTPException(status_code=404, detail="unknown item")
        return item_view(item)

    @app.post("/api/annotations", status_code=204)
    def post_annotation(body: AnnotationIn):
        if body.item_id not in items:
            raise HTTPException(status_code=404, detail="item not in batch")
        try:
            bloom = BloomLevel(body.bloom)
        except ValueError:
            raise HTTPException(
                status_code=422,
                detail=f"bloom must be one of {[b.value for b in BloomLevel]}",
            )
        record = AnnotationRecord(
            rater_id=body.rater_id,
            item_id=body.item_id,
            relevance=body.relevance,
            answerability=body.answerability,
            bloom=bloom,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )
        store.upsert(record)
        return Response(status_code=204)

    @app.get("/api/annotations")
    def get_annotations(rater_id: str | None = None):
        return [
            {
                "rater_id": r.rater_id,
                "item_id": r.item_id,
                "relevance": r.relevance,
                "answerability": r.answerability,
                "bloom": r.bloom.value,
                "timestamp": r.timestamp,
            }
            for r in store.records(rater_id)
        ]

    @app.get("/api/agreement")
    def get_agreement():
        return compute_agreement(store.records())

    return app


def serve(
    batch_path: str | Path,
    store_path: str | Path,
    bind: str = "127.0.0.1:8000",
    cors_origins: tuple[str, ...] = ("*",),
):
    """Run the service until interrupted; raises BindFailureError when the
    address cannot be bound."""
    batch = EvaluationBatch.load(batch_path)
    store = AnnotationStore(store_path)
    app = create_app(batch, store, cors_origins)
    host, _, port = bind.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    except OSError as exc:
        raise BindFailureError(f"cannot bind {bind}: {exc}") from exc
    except SystemExit as exc:
        # uvicorn swallows the bind OSError and exits with a nonzero code
        if exc.code:
            raise BindFailureError(f"cannot bind {bind} (uvicorn exit {exc.code})") from exc
