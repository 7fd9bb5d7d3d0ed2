"""Corpus loading, validation, filtering, splitting, and statistics.

A corpus is a single JSON document:

    {"videos": [{"id": str, "source": "teded"|"khan", "domain": str|null,
                 "duration_seconds": num, "transcript": str,
                 "media_ref": str|null,
                 "questions": [{"text": str, "qtype": "open"|"multiple_choice",
                                "useful": bool, "options": [str]|null}]}],
     "provenance": {...}}

Loading validates every structural invariant and reports violations with a
JSON-pointer path. Corpus and SplitAssignment are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

from .errors import BadRatiosError, DuplicateIdError, MalformedInputError
from .rng import shuffle

SOURCES = ("teded", "khan")
QTYPES = ("open", "multiple_choice")
DEFAULT_CLOZE_MARKERS = ("___", "____", "_____")


@dataclass(frozen=True)
class GroundTruthQuestion:
    text: str
    qtype: str
    useful: bool
    options: tuple[str, ...] | None = None


@dataclass(frozen=True)
class VideoRecord:
    id: str
    source: str
    domain: str | None
    duration_seconds: float
    transcript: str
    media_ref: str | None
    questions: tuple[GroundTruthQuestion, ...]


@dataclass(frozen=True)
class Corpus:
    videos: tuple[VideoRecord, ...]
    provenance: dict[str, Any] = field(default_factory=dict)

    def video_ids(self) -> list[str]:
        return [v.id for v in self.videos]

    def get(self, video_id: str) -> VideoRecord:
        for v in self.videos:
            if v.id == video_id:
                return v
        raise KeyError(video_id)


@dataclass(frozen=True)
class FilterPolicy:
    require_useful: bool = True
    drop_cloze: bool = True
    drop_no_question_mark: bool = True
    cloze_markers: tuple[str, ...] = DEFAULT_CLOZE_MARKERS

    def __post_init__(self):
        if self.drop_cloze and not self.cloze_markers:
            raise ValueError("drop_cloze requires at least one cloze marker")

    def keeps(self, question: GroundTruthQuestion) -> bool:
        if self.require_useful and not question.useful:
            return False
        if self.drop_cloze and any(m in question.text for m in self.cloze_markers):
            return False
        if self.drop_no_question_mark and "?" not in question.text:
            return False
        return True


@dataclass(frozen=True)
class SplitAssignment:
    seed: int
    ratios: tuple[float, float, float]
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train": list(self.train),
            "val": list(self.val),
            "test": list(self.test),
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SplitAssignment":
        doc = json.loads(text)
        return cls(
            seed=int(doc["seed"]),
            ratios=tuple(float(r) for r in doc["ratios"]),
            train=tuple(doc["train"]),
            val=tuple(doc["val"]),
            test=tuple(doc["test"]),
        )


# ---------------------------------------------------------------------------
# Loading / validation
# ---------------------------------------------------------------------------


def _fail(pointer: str, message: str):
    raise MalformedInputError(pointer, message)


def _require(doc: dict, key: str, pointer: str) -> Any:
    if key not in doc:
        _fail(f"{pointer}/{key}", "missing required field")
    return doc[key]


def _check_str(value: Any, pointer: str, allow_empty: bool = True) -> str:
    if not isinstance(value, str):
        _fail(pointer, f"expected string, got {type(value).__name__}")
    if not allow_empty and not value:
        _fail(pointer, "must be non-empty")
    return value


def _parse_question(doc: Any, pointer: str) -> GroundTruthQuestion:
    if not isinstance(doc, dict):
        _fail(pointer, "question must be an object")
    text = _check_str(_require(doc, "text", pointer), f"{pointer}/text")
    qtype = _check_str(_require(doc, "qtype", pointer), f"{pointer}/qtype")
    if qtype not in QTYPES:
        _fail(f"{pointer}/qtype", f"must be one of {QTYPES}, got {qtype!r}")
    useful = _require(doc, "useful", pointer)
    if not isinstance(useful, bool):
        _fail(f"{pointer}/useful", "must be a boolean")
    options_raw = doc.get("options")
    if qtype == "multiple_choice":
        if not isinstance(options_raw, list) or len(options_raw) < 2:
            _fail(f"{pointer}/options", "multiple_choice requires >= 2 options")
        options = tuple(
            _check_str(o, f"{pointer}/options/{i}") for i, o in enumerate(options_raw)
        )
    else:
        if options_raw is not None:
            _fail(f"{pointer}/options", "options only allowed for multiple_choice")
        options = None
    return GroundTruthQuestion(text=text, qtype=qtype, useful=useful, options=options)


def _parse_video(doc: Any, pointer: str) -> VideoRecord:
    if not isinstance(doc, dict):
        _fail(pointer, "video must be an object")
    vid = _check_str(_require(doc, "id", pointer), f"{pointer}/id", allow_empty=False)
    source = _check_str(_require(doc, "source", pointer), f"{pointer}/source")
    if source not in SOURCES:
        _fail(f"{pointer}/source", f"must be one of {SOURCES}, got {source!r}")
    domain = doc.get("domain")
    if domain is not None and not isinstance(domain, str):
        _fail(f"{pointer}/domain", "must be a string or null")
    duration = _require(doc, "duration_seconds", pointer)
    if isinstance(duration, bool) or not isinstance(duration, (int, float)):
        _fail(f"{pointer}/duration_seconds", "must be a number")
    if duration < 0:
        _fail(f"{pointer}/duration_seconds", "must be >= 0")
    transcript = _check_str(
        _require(doc, "transcript", pointer), f"{pointer}/transcript"
    )
    media_ref = doc.get("media_ref")
    if media_ref is not None and not isinstance(media_ref, str):
        _fail(f"{pointer}/media_ref", "must be a string or null")
    questions_raw = _require(doc, "questions", pointer)
    if not isinstance(questions_raw, list):
        _fail(f"{pointer}/questions", "must be a list")
    questions = tuple(
        _parse_question(q, f"{pointer}/questions/{i}")
        for i, q in enumerate(questions_raw)
    )
    return VideoRecord(
        id=vid,
        source=source,
        domain=domain,
        duration_seconds=float(duration),
        transcript=transcript,
        media_ref=media_ref,
        questions=questions,
    )


def corpus_from_dict(doc: Any) -> Corpus:
    if not isinstance(doc, dict):
        _fail("", "corpus document must be a JSON object")
    videos_raw = _require(doc, "videos", "")
    if not isinstance(videos_raw, list):
        _fail("/videos", "must be a list")
    provenance = doc.get("provenance", {})
    if not isinstance(provenance, dict):
        _fail("/provenance", "must be an object")
    videos = tuple(
        _parse_video(v, f"/videos/{i}") for i, v in enumerate(videos_raw)
    )
    seen: set[str] = set()
    for v in videos:
        if v.id in seen:
            raise DuplicateIdError(v.id)
        seen.add(v.id)
    provenance = dict(provenance)
    degenerate = [v.id for v in videos if not v.transcript.strip()]
    if degenerate:
        provenance["degenerate_transcripts"] = degenerate
    return Corpus(videos=videos, provenance=provenance)


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a corpus JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInputError("", f"not valid JSON: {exc}") from exc
    return corpus_from_dict(doc)


def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "videos": [
            {
                "id": v.id,
                "source": v.source,
                "domain": v.domain,
                "duration_seconds": v.duration_seconds,
                "transcript": v.transcript,
                "media_ref": v.media_ref,
                "questions": [
                    {
                        "text": q.text,
                        "qtype": q.qtype,
                        "useful": q.useful,
                        "options": list(q.options) if q.options is not None else None,
                    }
                    for q in v.questions
                ],
            }
            for v in corpus.videos
        ],
        "provenance": corpus.provenance,
    }


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------


def filter_questions(corpus: Corpus, policy: FilterPolicy) -> Corpus:
    """Drop questions violating the policy; videos are always retained.

    Videos left with zero questions are flagged under
    ``provenance["videos_without_questions"]`` (they still receive generated
    questions downstream). Applying the same policy twice is a no-op.
    """
    videos = tuple(
        replace(v, questions=tuple(q for q in v.questions if policy.keeps(q)))
        for v in corpus.videos
    )
    provenance = dict(corpus.provenance)
    provenance["filter_policy"] = {
        "require_useful": policy.require_useful,
        "drop_cloze": policy.drop_cloze,
        "drop_no_question_mark": policy.drop_no_question_mark,
        "cloze_markers": list(policy.cloze_markers),
    }
    provenance["videos_without_questions"] = [
        v.id for v in videos if not v.questions
    ]
    return Corpus(videos=videos, provenance=provenance)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def split_corpus(
    corpus: Corpus, ratios: tuple[float, float, float], seed: int
) -> SplitAssignment:
    """Deterministic train/val/test split of the corpus video ids.

    Sizes are floor(r_train*n), floor(r_val*n), remainder to test, so they
    depend only on n and the ratios. The id order is the corpus order,
    shuffled by splitmix64 Fisher-Yates (see rng module).
    """
    r = tuple(float(x) for x in ratios)
    if len(r) != 3:
        raise BadRatiosError(f"expected 3 ratios, got {len(r)}")
    if any(x < 0 for x in r):
        raise BadRatiosError(f"ratios must be non-negative: {r}")
    if abs(sum(r) - 1.0) > 1e-9:
        raise BadRatiosError(f"ratios must sum to 1: {r} (sum {sum(r)})")
    ids = [v.id for v in corpus.videos]
    order = shuffle(ids, seed)
    n = len(order)
    # the epsilon absorbs float noise in n*r when the product is integral
    n_train = math.floor(n * r[0] + 1e-9)
    n_val = math.floor(n * r[1] + 1e-9)
    return SplitAssignment(
        seed=seed,
        ratios=r,  # type: ignore[arg-type]
        train=tuple(order[:n_train]),
        val=tuple(order[n_train : n_train + n_val]),
        test=tuple(order[n_train + n_val :]),
    )


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceStats:
    videos: int
    questions: int
    avg_questions: float
    min_duration: float
    avg_duration: float
    max_duration: float


@dataclass(frozen=True)
class CorpusStats:
    total: SourceStats
    by_source: dict[str, SourceStats]


def _stats_over(videos: Iterable[VideoRecord]) -> SourceStats:
    vids = list(videos)
    n = len(vids)
    questions = sum(len(v.questions) for v in vids)
    durations = [v.duration_seconds for v in vids]
    return SourceStats(
        videos=n,
        questions=questions,
        avg_questions=questions / n if n else 0.0,
        min_duration=min(durations) if durations else 0.0,
        avg_duration=sum(durations) / n if n else 0.0,
        max_duration=max(durations) if durations else 0.0,
    )


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Per-source and pooled counts; averages are 0 for empty inputs."""
    by_source = {
        source: _stats_over(v for v in corpus.videos if v.source == source)
        for source in SOURCES
        if any(v.source == source for v in corpus.videos)
    }
    return CorpusStats(total=_stats_over(corpus.videos), by_source=by_source)


def format_duration(seconds: float) -> str:
    """H:MM:SS with unpadded hours (e.g. 0:06:02); fractions truncated."""
    total = int(seconds)
    hours, rem = divmod(total, 3600)
    minutes, secs = divmod(rem, 60)
    return f"{hours}:{minutes:02d}:{secs:02d}"
