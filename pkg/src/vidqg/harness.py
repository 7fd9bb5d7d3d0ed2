"""Generation harness: prompt construction, per-video sessions, and
experiment orchestration over HTTP or in-process backends.

Each video is prompted n times per mode (n = number of ground-truth
questions, minimum 1). Iterations past the first ask for "an additional
question"; backends without conversational sessions get the list of
already-generated outputs injected into the prompt instead.
"""

from __future__ import annotations

import hashlib
import json
import time
import uuid
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

import requests

from .corpus import Corpus, VideoRecord
from .errors import BackendUnreachableError
from .textproc import classify_output

QUESTION_LIST_PREFIX = "The following questions were already generated: "
TRANSCRIPT_PREFIX = "Transcript: "


class PromptMode(Enum):
    M1 = 1
    M2 = 2
    M3 = 3


PROMPT_TEMPLATES: dict[PromptMode, str] = {
    PromptMode.M1: "Create a question about the video content.",
    PromptMode.M2: "Develop a question that tests comprehension of the video's main idea.",
    PromptMode.M3: "Generate a question to assess the knowledge acquired from the video.",
}


@dataclass(frozen=True)
class ModalityMask:
    use_video: bool = True
    use_audio: bool = True

    def to_dict(self) -> dict:
        return {"use_video": self.use_video, "use_audio": self.use_audio}


@dataclass(frozen=True)
class BackendProfile:
    name: str
    base_url: str | None = None
    supports_session: bool = False
    needs_question_list: bool = False
    needs_transcript: bool = False
    accepts_media: bool = True
    modality_mask: ModalityMask = field(default_factory=ModalityMask)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.needs_question_list and self.supports_session:
            raise ValueError(
                "needs_question_list implies supports_session = False "
                f"(backend {self.name!r})"
            )


@dataclass(frozen=True)
class PromptPayload:
    prompt: str
    model: str
    session_id: str | None
    transcript: str | None
    media_ref: str | None
    modality_mask: ModalityMask
    params: dict

    def to_request(self) -> dict:
        return {
            "model": self.model,
            "session_id": self.session_id,
            "prompt": self.prompt,
            "transcript": self.transcript,
            "media_ref": self.media_ref,
            "modality_mask": self.modality_mask.to_dict(),
            "params": dict(self.params),
        }


def build_prompt(
    mode: PromptMode,
    iteration: int,
    prior_questions: Sequence[str],
    video: VideoRecord,
    profile: BackendProfile,
    session_id: str | None = None,
) -> PromptPayload:
    """Assemble the prompt for one iteration.

    Iteration 1 uses the mode's template verbatim; later iterations reword
    "a question" to "an additional question". Backends that need the
    already-generated list get it prepended; backends that need the
    transcript get a trailing "Transcript: ..." line.
    """
    if iteration < 1:
        raise ValueError("iteration starts at 1")
    prompt = PROMPT_TEMPLATES[mode]
    if iteration >= 2:
        prompt = prompt.replace("a question", "an additional question", 1)
    if profile.needs_question_list and prior_questions:
        prompt = QUESTION_LIST_PREFIX + "; ".join(prior_questions) + "\n" + prompt
    if profile.needs_transcript:
        prompt = prompt + "\n" + TRANSCRIPT_PREFIX + video.transcript
    return PromptPayload(
        prompt=prompt,
        model=profile.name,
        session_id=session_id,
        transcript=video.transcript if profile.needs_transcript else None,
        media_ref=video.media_ref if profile.accepts_media else None,
        modality_mask=profile.modality_mask,
        params=profile.params,
    )


@dataclass(frozen=True)
class GenerationRecord:
    video_id: str
    model: str
    mode: int
    iteration: int
    raw_output: str
    output_class: str
    request_digest: str
    timestamp: str

    def key(self) -> tuple[str, str, int, int]:
        return (self.video_id, self.model, self.mode, self.iteration)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "model": self.model,
            "mode": self.mode,
            "iteration": self.iteration,
            "raw_output": self.raw_output,
            "output_class": self.output_class,
            "request_digest": self.request_digest,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "GenerationRecord":
        return cls(
            video_id=doc["video_id"],
            model=doc["model"],
            mode=int(doc["mode"]),
            iteration=int(doc["iteration"]),
            raw_output=doc["raw_output"],
            output_class=doc["output_class"],
            request_digest=doc["request_digest"],
            timestamp=doc["timestamp"],
        )


class BackendTransportError(Exception):
    """Request could not be delivered (connection refused, timeout, ...)."""


class BackendRequestError(Exception):
    """Request was delivered but the backend answered with an error."""


class Backend(Protocol):
    profile: BackendProfile

    def generate(self, request: dict) -> str: ...


class HttpBackend:
    """POST {base}/v1/generate speaking the documented wire protocol."""

    def __init__(self, profile: BackendProfile, timeout: float = 60.0):
        if not profile.base_url:
            raise ValueError(f"backend {profile.name!r} has no base_url")
        self.profile = profile
        self.timeout = timeout
        self._session = requests.Session()

    def generate(self, request: dict) -> str:
        url = f"{self.profile.base_url.rstrip('/')}/v1/generate"
        try:
            resp = self._session.post(url, json=request, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendTransportError(str(exc)) from exc
        if resp.status_code != 200:
            raise BackendRequestError(f"HTTP {resp.status_code}")
        try:
            return resp.json()["text"]
        except (ValueError, KeyError) as exc:
            raise BackendRequestError(f"malformed response: {exc}") from exc


class EchoMockBackend:
    """Deterministic offline backend for dry runs and tests.

    Produces a question derived from a digest of the request (minus the
    session id), so outputs are stable across runs and distinct across
    iterations.
    """

    def __init__(self, profile: BackendProfile | None = None):
        self.profile = profile or BackendProfile(
            name="mock",
            needs_question_list=True,
            needs_transcript=True,
            accepts_media=False,
        )
        self.requests_seen: list[dict] = []

    def generate(self, request: dict) -> str:
        self.requests_seen.append(request)
        digest = _request_digest(request)
        return f"What does the video explain in segment {digest[:8]}?"


def _request_digest(request: dict) -> str:
    # session ids are regenerated per run; keep them out so replays match
    body = {k: v for k, v in request.items() if k != "session_id"}
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _call_with_retries(
    backend: Backend,
    request: dict,
    retries: int,
    backoff: float,
    sleep: Callable[[float], None],
) -> tuple[str | None, bool]:
    """Returns (text, transport_dead); text is None after exhausted retries."""
    delay = backoff
    transport_failures = 0
    for attempt in range(retries):
        try:
            return backend.generate(request), False
        except BackendTransportError:
            transport_failures += 1
        except BackendRequestError:
            pass
        if attempt + 1 < retries:
            sleep(delay)
            delay *= 2
    return None, transport_failures == retries


def run_session(
    video: VideoRecord,
    backend: Backend,
    mode: PromptMode,
    n: int,
    retries: int = 3,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
    existing: Mapping[int, str] | None = None,
) -> list[GenerationRecord]:
    """Run n iterations of one (video, backend, mode) session.

    Session backends share one session id across all n requests; stateless
    backends carry the accumulated list of prior outputs instead (exactly
    k-1 entries at iteration k, in generation order, whitespace-trimmed).
    A request that still fails after all retries yields an empty-output
    record, except on the very first request: if that one cannot even be
    delivered, BackendUnreachableError is raised. Iterations present in
    ``existing`` (a resume map iteration -> raw_output) are reused, not
    re-requested.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    profile = backend.profile
    existing = existing or {}
    session_id = str(uuid.uuid4()) if profile.supports_session else None
    priors: list[str] = []
    records: list[GenerationRecord] = []
    first_request = True
    for iteration in range(1, n + 1):
        if iteration in existing:
            priors.append(existing[iteration].strip())
            continue
        payload = build_prompt(
            mode,
            iteration,
            priors if profile.needs_question_list else [],
            video,
            profile,
            session_id=session_id,
        )
        request = payload.to_request()
        text, transport_dead = _call_with_retries(
            backend, request, retries, backoff, sleep
        )
        if text is None and transport_dead and first_request:
            raise BackendUnreachableError(
                f"backend {profile.name!r} unreachable on first request"
            )
        first_request = False
        raw = text if text is not None else ""
        records.append(
            GenerationRecord(
                video_id=video.id,
                model=profile.name,
                mode=mode.value,
                iteration=iteration,
                raw_output=raw,
                output_class=classify_output(raw).value,
                request_digest=_request_digest(request),
                timestamp=_now_iso(),
            )
        )
        priors.append(raw.strip())
    return records


# ---------------------------------------------------------------------------
# Experiment orchestration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    out_dir: Path
    seed: int = 0
    parallelism: int = 4
    retries: int = 3
    backoff: float = 1.0
    sleep: Callable[[float], None] = time.sleep
    extra: dict = field(default_factory=dict)


@dataclass
class RunArtifact:
    run_dir: Path
    records: list[GenerationRecord]
    manifest: dict

    @property
    def records_path(self) -> Path:
        return self.run_dir / "records.jsonl"

    @property
    def manifest_path(self) -> Path:
        return self.run_dir / "manifest.json"

    @classmethod
    def load(cls, run_dir: str | Path) -> "RunArtifact":
        run_dir = Path(run_dir)
        records = load_records(run_dir / "records.jsonl")
        manifest_path = run_dir / "manifest.json"
        manifest = (
            json.loads(manifest_path.read_text(encoding="utf-8"))
            if manifest_path.exists()
            else {}
        )
        return cls(run_dir=run_dir, records=records, manifest=manifest)


def load_records(path: str | Path) -> list[GenerationRecord]:
    path = Path(path)
    if not path.exists():
        return []
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(GenerationRecord.from_dict(json.loads(line)))
    return records


def _config_digest(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()


def _duplicate_rates(records: Sequence[GenerationRecord]) -> dict[str, float]:
    """Share of repeated non-empty outputs per (model, mode)."""
    groups: dict[tuple[str, int], list[str]] = {}
    for rec in records:
        if rec.raw_output.strip():
            groups.setdefault((rec.model, rec.mode), []).append(rec.raw_output)
    return {
        f"{model}/mode{mode}": 1.0 - len(set(outputs)) / len(outputs)
        for (model, mode), outputs in sorted(groups.items())
    }


def run_experiment(
    video_ids: Iterable[str],
    corpus: Corpus,
    backends: Sequence[Backend],
    modes: Sequence[PromptMode],
    config: ExperimentConfig,
) -> RunArtifact:
    """Generate records for every (video, backend, mode) combination.

    n per video is max(1, number of ground-truth questions). Records stream
    to an append-only JSON-lines file; already-present (video, model, mode,
    iteration) keys are skipped, so rerunning a complete artifact issues no
    new requests. Sessions run with bounded parallelism per backend;
    the output file has a single writer (this thread). A backend whose
    first contact fails is marked unreachable, its remaining sessions are
    skipped, and the error is recorded in the manifest.
    """
    if not backends:
        raise ValueError("at least one backend required")
    if not modes:
        raise ValueError("at least one mode required")
    wanted = set(video_ids)
    unknown = wanted - set(corpus.video_ids())
    if unknown:
        raise KeyError(f"video ids not in corpus: {sorted(unknown)}")
    videos = [v for v in corpus.videos if v.id in wanted]

    run_dir = Path(config.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    records_path = run_dir / "records.jsonl"
    prior_records = load_records(records_path)
    existing: dict[tuple[str, str, int, int], GenerationRecord] = {
        r.key(): r for r in prior_records
    }

    started = _now_iso()
    t0 = time.monotonic()
    errors: dict[str, str] = {}
    new_records: list[GenerationRecord] = []

    with open(records_path, "a", encoding="utf-8") as out:
        for backend in backends:
            name = backend.profile.name
            sessions = []
            for video in videos:
                n = max(1, len(video.questions))
                for mode in modes:
                    have = {
                        it: existing[(video.id, name, mode.value, it)].raw_output
                        for it in range(1, n + 1)
                        if (video.id, name, mode.value, it) in existing
                    }
                    if len(have) < n:
                        sessions.append((video, mode, n, have))
            if not sessions:
                continue

            unreachable: list[str] = []

            def _run(task):
                video, mode, n, have = task
                if unreachable:
                    return []
                try:
                    return run_session(
                        video,
                        backend,
                        mode,
                        n,
                        retries=config.retries,
                        backoff=config.backoff,
                        sleep=config.sleep,
                        existing=have,
                    )
                except BackendUnreachableError as exc:
                    unreachable.append(str(exc))
                    return []

            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                futures = [pool.submit(_run, task) for task in sessions]
                for fut in as_completed(futures):
                    for rec in fut.result():
                        out.write(json.dumps(rec.to_dict()) + "\n")
                        new_records.append(rec)
                out.flush()
            if unreachable:
                errors[name] = unreachable[0]

    all_records = prior_records + new_records
    profiles = [
        {
            "name": b.profile.name,
            "base_url": b.profile.base_url,
            "supports_session": b.profile.supports_session,
            "needs_question_list": b.profile.needs_question_list,
            "needs_transcript": b.profile.needs_transcript,
            "accepts_media": b.profile.accepts_media,
            "modality_mask": b.profile.modality_mask.to_dict(),
            "params": b.profile.params,
        }
        for b in backends
    ]
    config_doc = {
        "video_ids": sorted(wanted),
        "backends": profiles,
        "modes": [m.value for m in modes],
        "seed": config.seed,
        "parallelism": config.parallelism,
        "retries": config.retries,
        "extra": config.extra,
    }
    manifest = {
        "config": config_doc,
        "config_digest": _config_digest(config_doc),
        "seed": config.seed,
        "started_at": started,
        "finished_at": _now_iso(),
        "wall_clock_seconds": time.monotonic() - t0,
        "new_records": len(new_records),
        "total_records": len(all_records),
        "duplicate_rates": _duplicate_rates(all_records),
        "errors": errors,
    }
    (run_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return RunArtifact(run_dir=run_dir, records=all_records, manifest=manifest)
