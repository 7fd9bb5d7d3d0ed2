"""Qualitative-evaluation data model and inter-rater reliability.

Raters judge sampled outputs on three dimensions: relevance (does the
question refer to the video content?), answerability (can it be answered
from the video content?), and a Bloom's-taxonomy level of understanding.
Krippendorff's alpha quantifies agreement per dimension:

    alpha = 1 - D_o / D_e

with D_o the observed disagreement over the coincidence matrix of pairable
values and D_e the disagreement expected by chance. Nominal distance
(0 if equal, 1 otherwise) is the default; an ordinal variant is available
behind the ``level`` flag. Missing cells are excluded pairwise.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import textproc
from .corpus import Corpus
from .errors import InsufficientDataError, UnresolvedItemsError
from .rng import shuffle

# Synthetic rater id holding the post-discussion consensus.
RESOLVED_RATER = "resolved"

ANNOTATION_CSV_HEADER = [
    "rater_id",
    "item_id",
    "relevance",
    "answerability",
    "bloom",
    "timestamp",
]


class BloomLevel(str, Enum):
    NON = "non"
    REMEMBER = "remember"
    UNDERSTAND = "understand"
    APPLY = "apply"
    ANALYZE = "analyze"
    EVALUATE = "evaluate"
    CREATE = "create"


@dataclass(frozen=True)
class AnnotationRecord:
    rater_id: str
    item_id: str
    relevance: bool
    answerability: bool
    bloom: BloomLevel
    timestamp: str


def _bool_to_csv(value: bool) -> str:
    return "true" if value else "false"


def _bool_from_csv(value: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise ValueError(f"expected true/false, got {value!r}")


def annotations_to_csv(annotations: Iterable[AnnotationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ANNOTATION_CSV_HEADER)
    for a in annotations:
        writer.writerow(
            [
                a.rater_id,
                a.item_id,
                _bool_to_csv(a.relevance),
                _bool_to_csv(a.answerability),
                a.bloom.value,
                a.timestamp,
            ]
        )
    return buf.getvalue()


def annotations_from_csv(text: str) -> list[AnnotationRecord]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return []
    if rows[0] != ANNOTATION_CSV_HEADER:
        raise ValueError(f"bad annotation CSV header: {rows[0]}")
    out = []
    for row in rows[1:]:
        if not row:
            continue
        rater_id, item_id, rel, ans, bloom, ts = row
        out.append(
            AnnotationRecord(
                rater_id=rater_id,
                item_id=item_id,
                relevance=_bool_from_csv(rel),
                answerability=_bool_from_csv(ans),
                bloom=BloomLevel(bloom),
                timestamp=ts,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Evaluation batches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleSpec:
    videos_per_source: int = 3
    response_iteration: int = 1
    excerpt_sentences: int = 10


@dataclass(frozen=True)
class BatchItem:
    item_id: str
    video_id: str
    source: str
    model: str
    mode: int
    iteration: int
    question: str
    transcript_excerpt: str

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "video_id": self.video_id,
            "source": self.source,
            "model": self.model,
            "mode": self.mode,
            "iteration": self.iteration,
            "question": self.question,
            "transcript_excerpt": self.transcript_excerpt,
        }


@dataclass(frozen=True)
class EvaluationBatch:
    seed: int
    videos_per_source: int
    response_iteration: int
    items: tuple[BatchItem, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "videos_per_source": self.videos_per_source,
                "response_iteration": self.response_iteration,
                "items": [item.to_dict() for item in self.items],
            },
            indent=2,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvaluationBatch":
        doc = json.loads(text)
        return cls(
            seed=int(doc["seed"]),
            videos_per_source=int(doc["videos_per_source"]),
            response_iteration=int(doc["response_iteration"]),
            items=tuple(BatchItem(**item) for item in doc["items"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "EvaluationBatch":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def sample_batch(
    records, corpus: Corpus, spec: SampleSpec, seed: int
) -> EvaluationBatch:
    """Seeded sample of outputs for manual rating.

    Picks ``videos_per_source`` videos per corpus source among those that
    actually have generation records, then takes the response with the
    configured iteration (the first by default) from every (model, mode)
    present for the video. Items carry the transcript excerpt raters see.
    """
    records = list(records)
    if not records:
        raise InsufficientDataError("no generation records to sample from")
    by_video: dict[str, list] = defaultdict(list)
    for rec in records:
        by_video[rec.video_id].append(rec)

    videos = {v.id: v for v in corpus.videos}
    sources = sorted({v.source for v in corpus.videos})
    selected: list[str] = []
    for source in sources:
        candidates = [
            v.id for v in corpus.videos if v.source == source and v.id in by_video
        ]
        if len(candidates) < spec.videos_per_source:
            raise InsufficientDataError(
                f"source {source!r} has {len(candidates)} videos with records, "
                f"need {spec.videos_per_source}"
            )
        selected.extend(shuffle(candidates, seed)[: spec.videos_per_source])

    items: list[BatchItem] = []
    for video_id in selected:
        video = videos[video_id]
        excerpt = " ".join(
            textproc.split_sentences(video.transcript)[: spec.excerpt_sentences]
        )
        per_model_mode: dict[tuple[str, int], list] = defaultdict(list)
        for rec in by_video[video_id]:
            per_model_mode[(rec.model, rec.mode)].append(rec)
        for (model, mode), recs in sorted(per_model_mode.items()):
            chosen = [r for r in recs if r.iteration == spec.response_iteration]
            if not chosen:
                continue
            rec = chosen[0]
            items.append(
                BatchItem(
                    item_id=f"{video_id}:{model}:m{mode}:i{rec.iteration}",
                    video_id=video_id,
                    source=video.source,
                    model=model,
                    mode=mode,
                    iteration=rec.iteration,
                    question=rec.raw_output,
                    transcript_excerpt=excerpt,
                )
            )
    return EvaluationBatch(
        seed=seed,
        videos_per_source=spec.videos_per_source,
        response_iteration=spec.response_iteration,
        items=tuple(items),
    )


# ---------------------------------------------------------------------------
# Krippendorff's alpha
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatingMatrix:
    """Items x raters grid of nominal codes; missing cells allowed."""

    raters: tuple[str, ...]
    items: tuple[str, ...]
    codes: Mapping[tuple[str, str], str]  # (item_id, rater_id) -> code

    def __post_init__(self):
        if len(self.raters) < 2:
            raise InsufficientDataError("rating matrix needs >= 2 raters")
        if not any(
            sum((item, rater) in self.codes for rater in self.raters) >= 2
            for item in self.items
        ):
            raise InsufficientDataError(
                "rating matrix needs >= 1 item with >= 2 codings"
            )

    @classmethod
    def from_annotations(
        cls,
        annotations: Iterable[AnnotationRecord],
        dimension: str,
        exclude_raters: Sequence[str] = (RESOLVED_RATER,),
    ) -> "RatingMatrix":
        codes: dict[tuple[str, str], str] = {}
        raters: list[str] = []
        items: list[str] = []
        for a in annotations:
            if a.rater_id in exclude_raters:
                continue
            if dimension == "relevance":
                code = _bool_to_csv(a.relevance)
            elif dimension == "answerability":
                code = _bool_to_csv(a.answerability)
            elif dimension == "bloom":
                code = a.bloom.value
            else:
                raise ValueError(f"unknown dimension {dimension!r}")
            codes[(a.item_id, a.rater_id)] = code
            if a.rater_id not in raters:
                raters.append(a.rater_id)
            if a.item_id not in items:
                items.append(a.item_id)
        return cls(raters=tuple(raters), items=tuple(items), codes=codes)


def krippendorff_alpha(
    matrix: RatingMatrix,
    level: str = "nominal",
    value_order: Sequence[str] | None = None,
) -> float | None:
    """Krippendorff's alpha over the coincidence matrix.

    Returns exactly 1.0 for perfect agreement. Returns None when the data
    are degenerate (every pairable coding is the same single value, so the
    expected disagreement is zero and alpha is undefined); callers report
    that as a distinct outcome rather than a number. ``level`` selects the
    distance: "nominal" (default) or "ordinal" (squared cumulative-rank
    distance over ``value_order``, defaulting to sorted values).
    """
    if level not in ("nominal", "ordinal"):
        raise ValueError(f"unknown level {level!r}")
    units: list[list[str]] = []
    for item in matrix.items:
        unit = [
            matrix.codes[(item, rater)]
            for rater in matrix.raters
            if (item, rater) in matrix.codes
        ]
        if len(unit) >= 2:
            units.append(unit)
    if not units:
        return None

    # coincidence matrix: each ordered pair within a unit, weighted 1/(m-1)
    coincidence: Counter[tuple[str, str]] = Counter()
    for unit in units:
        m = len(unit)
        weight = 1.0 / (m - 1)
        for i, a in enumerate(unit):
            for j, b in enumerate(unit):
                if i != j:
                    coincidence[(a, b)] += weight

    values = sorted({code for unit in units for code in unit})
    if value_order is not None:
        missing = set(values) - set(value_order)
        if missing:
            raise ValueError(f"value_order lacks codes: {sorted(missing)}")
        values = [v for v in value_order if v in values]
    marginals = {
        v: sum(coincidence[(v, w)] for w in values) for v in values
    }
    n = sum(marginals.values())
    if n <= 1:
        return None

    if level == "nominal":
        def distance(a: str, b: str) -> float:
            return 0.0 if a == b else 1.0
    else:
        index = {v: i for i, v in enumerate(values)}

        def distance(a: str, b: str) -> float:
            ia, ib = index[a], index[b]
            lo, hi = min(ia, ib), max(ia, ib)
            between = sum(marginals[values[g]] for g in range(lo, hi + 1))
            return (between - (marginals[a] + marginals[b]) / 2.0) ** 2

    observed = sum(
        coincidence[(a, b)] * distance(a, b)
        for a in values
        for b in values
        if a != b
    ) / n
    expected = sum(
        marginals[a] * marginals[b] * distance(a, b)
        for a in values
        for b in values
        if a != b
    ) / (n * (n - 1))
    if expected == 0.0:
        return None
    if observed == 0.0:
        return 1.0
    return 1.0 - observed / expected


# ---------------------------------------------------------------------------
# Qualitative aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QualRow:
    model: str
    relevance: float
    answerability: float
    non: float
    remember: float
    understand: float
    apply: float
    analyze: float
    evaluate: float
    create: float


def aggregate_annotations(
    annotations: Iterable[AnnotationRecord],
    batch: EvaluationBatch,
    resolution: str = "post_discussion",
) -> list[QualRow]:
    """Per-model percentages of relevant/answerable outputs and the Bloom
    distribution, over batch items classified as questions.

    ``post_discussion`` uses exactly one consensus record per item (rater id
    "resolved"); missing or conflicting consensus raises
    UnresolvedItemsError. ``pre_discussion`` pools every individual rater's
    judgment instead (each counts once).
    """
    if resolution not in ("pre_discussion", "post_discussion"):
        raise ValueError(f"unknown resolution {resolution!r}")
    question_items = {
        item.item_id: item
        for item in batch.items
        if textproc.classify_output(item.question) is textproc.OutputClass.QUESTION
    }
    by_item: dict[str, list[AnnotationRecord]] = defaultdict(list)
    for a in annotations:
        if a.item_id in question_items:
            by_item[a.item_id].append(a)

    judgments: list[tuple[str, AnnotationRecord]] = []  # (model, record)
    if resolution == "post_discussion":
        unresolved = []
        for item_id, item in question_items.items():
            resolved = [
                a for a in by_item.get(item_id, []) if a.rater_id == RESOLVED_RATER
            ]
            if len(resolved) != 1:
                unresolved.append(item_id)
                continue
            judgments.append((item.model, resolved[0]))
        if unresolved:
            raise UnresolvedItemsError(
                f"items without exactly one resolved record: {sorted(unresolved)}"
            )
    else:
        for item_id, records in by_item.items():
            model = question_items[item_id].model
            for a in records:
                if a.rater_id != RESOLVED_RATER:
                    judgments.append((model, a))

    by_model: dict[str, list[AnnotationRecord]] = defaultdict(list)
    for model, record in judgments:
        by_model[model].append(record)

    rows = []
    for model in sorted(by_model):
        recs = by_model[model]
        total = len(recs)
        bloom_counts = Counter(a.bloom for a in recs)
        rows.append(
            QualRow(
                model=model,
                relevance=100.0 * sum(a.relevance for a in recs) / total,
                answerability=100.0 * sum(a.answerability for a in recs) / total,
                **{
                    level.value: 100.0 * bloom_counts[level] / total
                    for level in BloomLevel
                },
            )
        )
    return rows
