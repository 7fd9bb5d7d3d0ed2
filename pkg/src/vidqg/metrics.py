"""Scoring: ROUGE-L, greedy-match semantic F1, best-match aggregation,
cosine similarity, and the inner-class-diff (ICD) relevance metric.

ICD compares a generated question against its own video's transcript and
against transcripts of other videos from the same domain:

    icd(q, t, {t_1..t_N}) = cos(q, t) - (1/N) * sum_i cos(q, t_i)

Positive values mean the question is more aligned with its own video than
with the domain at large; 0 means it is domain-generic (or the domain
pool is indistinguishable from the target transcript); negative values
mean it matches other videos better than its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import embed as embed_mod
from . import textproc
from .corpus import Corpus, VideoRecord
from .errors import (
    DimMismatchError,
    EmptyPoolError,
    EmptyTextError,
    MissingDomainError,
    NoReferencesError,
)
from .rng import sample

# Khan Academy domain labels specific enough for a contrast pool.
DEFAULT_ICD_DOMAINS = ("math", "science", "computing", "economics-finance-domain")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1].

    Identical arrays short-circuit to exactly 1.0 (0.0 for zero vectors),
    so identity comparisons are not subject to rounding. A zero vector on
    either side yields 0.0 rather than NaN.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatchError(f"dim mismatch: {a.shape} vs {b.shape}")
    if np.array_equal(a, b):
        return 1.0 if a.any() else 0.0
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    value = float(np.dot(a, b) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))


# ---------------------------------------------------------------------------
# ROUGE-L
# ---------------------------------------------------------------------------


class RougeScore(NamedTuple):
    precision: float
    recall: float
    f1: float


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """LCS length via the Allison-Dix bit-parallel dynamic program.

    Match masks are always built over the shorter sequence, so the
    computation (and therefore the returned length) is identical under
    argument swap.
    """
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    if m == 0 or len(b) == 0:
        return 0
    masks: dict[str, int] = {}
    bit = 1
    for tok in a:
        masks[tok] = masks.get(tok, 0) | bit
        bit <<= 1
    full = bit - 1
    v = full
    get = masks.get
    for tok in b:
        u = v & get(tok, 0)
        v = ((v + u) | (v - u)) & full
    return m - v.bit_count()


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """ROUGE-L with balanced F1 (beta = 1).

    precision = LCS/|candidate|, recall = LCS/|reference| (0 when the
    denominator is 0); f1 is the harmonic mean, 0 when p + r = 0.
    """
    lcs = _lcs_length(candidate, reference)
    p = lcs / len(candidate) if candidate else 0.0
    r = lcs / len(reference) if reference else 0.0
    f1 = 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)
    return RougeScore(p, r, f1)


def rouge_l_f1_many(
    candidate: Sequence[str], references: Iterable[Sequence[str]]
) -> list[float]:
    """ROUGE-L f1 of one candidate against many references.

    Same bit-parallel recurrence and f1 arithmetic as rouge_l, with the
    candidate's match masks built once; used wherever one output is scored
    against a whole reference pool.
    """
    la = len(candidate)
    masks: dict[str, int] = {}
    bit = 1
    for tok in candidate:
        masks[tok] = masks.get(tok, 0) | bit
        bit <<= 1
    full = bit - 1
    get = masks.get
    out: list[float] = []
    for ref in references:
        lb = len(ref)
        if la == 0 or lb == 0:
            out.append(0.0)
            continue
        v = full
        for tok in ref:
            u = v & get(tok, 0)
            v = ((v + u) | (v - u)) & full
        lcs = la - v.bit_count()
        if lcs == 0:
            out.append(0.0)
        else:
            p = lcs / la
            r = lcs / lb
            out.append(2.0 * p * r / (p + r))
    return out


# ---------------------------------------------------------------------------
# Semantic F1 (BERTScore-style greedy matching)
# ---------------------------------------------------------------------------


class SemanticScore(NamedTuple):
    precision: float
    recall: float
    f1: float
    baseline: float


def semantic_f1(
    candidate: str, reference: str, provider, baseline: float = 0.0
) -> SemanticScore:
    """Greedy maximum-cosine token matching between two texts.

    recall is the mean over reference tokens of the best cosine against any
    candidate token; precision is symmetric; f1 is the harmonic mean.
    When ``baseline`` b > 0, all three values are rescaled as
    (raw - b) / (1 - b); b = 0 leaves them untouched.
    """
    if not (0.0 <= baseline < 1.0):
        raise ValueError("baseline must be in [0, 1)")
    cand_vecs = embed_mod.embed_tokens(provider, candidate)
    ref_vecs = embed_mod.embed_tokens(provider, reference)
    if not cand_vecs or not ref_vecs:
        raise EmptyTextError("semantic_f1 requires tokens on both sides")
    sims = [[cosine(c, r) for r in ref_vecs] for c in cand_vecs]
    precision = fmean(max(row) for row in sims)
    recall = fmean(max(sims[i][j] for i in range(len(cand_vecs))) for j in range(len(ref_vecs)))
    f1 = 0.0 if precision + recall == 0.0 else 2.0 * precision * recall / (precision + recall)
    if baseline > 0.0:
        scale = 1.0 - baseline
        precision = (precision - baseline) / scale
        recall = (recall - baseline) / scale
        f1 = (f1 - baseline) / scale
    return SemanticScore(precision, recall, f1, baseline)


def best_match(
    generated: str, references: Sequence[str], scorer: Callable[[str, str], float]
) -> float:
    """Highest scorer(generated, ref) over all references."""
    if not references:
        raise NoReferencesError("best_match requires at least one reference")
    return max(scorer(generated, ref) for ref in references)


# ---------------------------------------------------------------------------
# ICD
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DomainPool:
    """Same-domain transcript embeddings used as the ICD contrast set."""

    domain: str
    video_ids: tuple[str, ...]
    embeddings: tuple[np.ndarray, ...]

    @property
    def size(self) -> int:
        return len(self.embeddings)

    def excluding(self, video_id: str) -> "DomainPool":
        """Pool view without the video under evaluation."""
        kept = [
            (vid, emb)
            for vid, emb in zip(self.video_ids, self.embeddings)
            if vid != video_id
        ]
        return DomainPool(
            domain=self.domain,
            video_ids=tuple(v for v, _ in kept),
            embeddings=tuple(e for _, e in kept),
        )


class IcdScore(NamedTuple):
    value: float
    pool_size: int
    domain: str


def icd(question: str, video: VideoRecord, pool: DomainPool, provider) -> IcdScore:
    """Inner-class-diff of a question against its video and a domain pool.

    The question and transcript are embedded with the same sentence-averaged
    scheme (questions are usually single sentences, so that is typically the
    identity). The pool mean uses math.fsum, so a pool of embeddings
    identical to the target transcript yields exactly 0.0.
    """
    if video.domain is None:
        raise MissingDomainError(video.id)
    if video.domain != pool.domain:
        raise ValueError(
            f"pool domain {pool.domain!r} does not match video domain {video.domain!r}"
        )
    if video.id in pool.video_ids:
        raise ValueError("pool must exclude the video under evaluation")
    if pool.size == 0:
        raise EmptyPoolError(video.domain)
    q = embed_mod.embed_text(provider, question)
    t = embed_mod.embed_text(provider, video.transcript)
    mean_other = math.fsum(cosine(q, e) for e in pool.embeddings) / pool.size
    return IcdScore(cosine(q, t) - mean_other, pool.size, pool.domain)


def build_domain_pools(
    corpus: Corpus,
    allowed_domains: Iterable[str],
    provider,
    cap: int | None = None,
    seed: int = 0,
) -> dict[str, DomainPool]:
    """One pool per allowed domain over the corpus videos carrying it.

    Videos with blank transcripts are skipped (nothing to embed). When a
    domain exceeds ``cap``, a seeded sample of size cap is used; membership
    is deterministic for a fixed seed. The returned pools still contain
    every member video; callers exclude the video under evaluation via
    DomainPool.excluding().
    """
    allowed = set(allowed_domains)
    if not allowed:
        raise ValueError("allowed_domains must be non-empty")
    by_domain: dict[str, list[VideoRecord]] = {}
    for v in corpus.videos:
        if v.domain in allowed and v.transcript.strip():
            by_domain.setdefault(v.domain, []).append(v)
    pools: dict[str, DomainPool] = {}
    for domain in sorted(by_domain):
        members = by_domain[domain]
        if cap is not None and len(members) > cap:
            members = sample(members, cap, seed)
        pools[domain] = DomainPool(
            domain=domain,
            video_ids=tuple(v.id for v in members),
            embeddings=tuple(
                embed_mod.embed_text(provider, v.transcript) for v in members
            ),
        )
    return pools


# ---------------------------------------------------------------------------
# Score rows (JSON-lines bundle consumed by the report module)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreRow:
    video_id: str
    model: str
    mode: int
    iteration: int
    output_class: str
    rouge_l: float
    semantic_f1: float
    icd: float | None

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "model": self.model,
            "mode": self.mode,
            "iter": self.iteration,
            "class": self.output_class,
            "rouge_l": self.rouge_l,
            "semantic_f1": self.semantic_f1,
            "icd": self.icd,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ScoreRow":
        return cls(
            video_id=doc["video_id"],
            model=doc["model"],
            mode=int(doc["mode"]),
            iteration=int(doc["iter"]),
            output_class=doc["class"],
            rouge_l=float(doc["rouge_l"]),
            semantic_f1=float(doc["semantic_f1"]),
            icd=None if doc.get("icd") is None else float(doc["icd"]),
        )


def score_records(
    records,
    corpus: Corpus,
    provider,
    pools: Mapping[str, DomainPool] | None = None,
    baseline: float = 0.0,
) -> list[ScoreRow]:
    """Score generation records against their videos' ground truth.

    Empty outputs are not scored. Outputs for videos without any ground-
    truth question are skipped as well (the row schema requires numeric
    rouge/semantic values, and fabricating 0.0 would distort means). The
    icd column is null when the video has no usable domain pool.
    """
    pools = pools or {}
    rows: list[ScoreRow] = []
    videos = {v.id: v for v in corpus.videos}
    transcript_cache: dict[str, list[list[str]]] = {}
    for rec in records:
        if rec.output_class == textproc.OutputClass.EMPTY.value:
            continue
        video = videos.get(rec.video_id)
        if video is None:
            raise KeyError(f"record references unknown video {rec.video_id!r}")
        refs = [q.text for q in video.questions]
        if not refs:
            continue
        if video.id not in transcript_cache:
            transcript_cache[video.id] = [textproc.tokenize(r) for r in refs]
        ref_tokens = transcript_cache[video.id]
        cand_tokens = textproc.tokenize(rec.raw_output)
        rouge = max(rouge_l_f1_many(cand_tokens, ref_tokens))
        semantic = best_match(
            rec.raw_output,
            refs,
            lambda c, r: semantic_f1(c, r, provider, baseline).f1,
        )
        icd_value: float | None = None
        if video.domain is not None and video.domain in pools:
            pool = pools[video.domain].excluding(video.id)
            if pool.size > 0 and video.transcript.strip():
                icd_value = icd(rec.raw_output, video, pool, provider).value
        rows.append(
            ScoreRow(
                video_id=rec.video_id,
                model=rec.model,
                mode=rec.mode,
                iteration=rec.iteration,
                output_class=rec.output_class,
                rouge_l=rouge,
                semantic_f1=semantic,
                icd=icd_value,
            )
        )
    return rows
