"""Embedding providers and sentence-averaged text embeddings.

Two providers are shipped: a remote HTTP client speaking the documented
/v1/embed protocol, and a deterministic local fallback (hashed character
trigrams) that makes every metric reproducible without a model server.
Vectors are numpy float64 arrays; a provider's dimension is fixed for its
lifetime and identical inputs always produce identical vectors.
"""

from __future__ import annotations

import hashlib
import threading
import time
from typing import Callable, Sequence

import numpy as np
import requests

from . import textproc
from .errors import (
    EmptyTextError,
    ProviderUnavailableError,
    UnsupportedGranularityError,
)

DEFAULT_LOCAL_DIM = 256


class LocalHashEmbedding:
    """Hashed bag of character trigrams, L2-normalized.

    Input strings are padded with one space on each side so every non-empty
    string has at least one trigram; "" maps to the zero vector. Buckets
    come from blake2b, which is stable across processes and platforms
    (builtin hash() is salted and must not be used here).
    """

    name = "local-trigram"
    granularities = ("text", "tokens")

    def __init__(self, dim: int = DEFAULT_LOCAL_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        if not text:
            return vec
        padded = f" {text} "
        for i in range(len(padded) - 2):
            tri = padded[i : i + 3].encode("utf-8")
            bucket = int.from_bytes(
                hashlib.blake2b(tri, digest_size=8).digest(), "big"
            ) % self.dim
            vec[bucket] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self.embed_one(t) for t in texts]

    def embed_token_lists(self, texts: Sequence[str]) -> list[list[np.ndarray]]:
        return [
            [self.embed_one(tok) for tok in textproc.tokenize(t)] for t in texts
        ]


class RemoteEmbedding:
    """Client for the embedding service wire protocol.

    POST {base}/v1/embed with {"texts": [...], "granularity": "text"|"tokens"};
    responses carry {"dim": int, "vectors": [[...], ...]} for text granularity
    and {"dim": int, "vectors_per_text": [[[...], ...], ...]} for tokens.
    503 responses and transport failures are retried with exponential backoff
    (3 attempts by default) before raising ProviderUnavailableError. Texts
    are sent in batches and the number of in-flight requests is bounded.
    """

    name = "remote"
    granularities = ("text", "tokens")

    def __init__(
        self,
        base_url: str,
        batch_size: int = 32,
        max_inflight: int = 4,
        retries: int = 3,
        backoff: float = 1.0,
        timeout: float = 30.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.batch_size = batch_size
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self._sleep = sleep
        self._inflight = threading.Semaphore(max_inflight)
        self._session = requests.Session()

    def _post(self, texts: Sequence[str], granularity: str) -> dict:
        url = f"{self.base_url}/v1/embed"
        body = {"texts": list(texts), "granularity": granularity}
        delay = self.backoff
        last = "no attempt made"
        for attempt in range(self.retries):
            try:
                with self._inflight:
                    resp = self._session.post(url, json=body, timeout=self.timeout)
            except requests.RequestException as exc:
                last = f"transport error: {exc}"
            else:
                if resp.status_code == 200:
                    return resp.json()
                if resp.status_code != 503:
                    raise ProviderUnavailableError(
                        f"embedding service returned HTTP {resp.status_code}"
                    )
                last = "HTTP 503"
            if attempt + 1 < self.retries:
                self._sleep(delay)
                delay *= 2
        raise ProviderUnavailableError(
            f"embedding service unavailable after {self.retries} attempts ({last})"
        )

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for i in range(0, len(texts), self.batch_size):
            batch = texts[i : i + self.batch_size]
            doc = self._post(batch, "text")
            vectors = doc.get("vectors")
            if not isinstance(vectors, list) or len(vectors) != len(batch):
                raise ProviderUnavailableError(
                    "embedding service response malformed (vectors)"
                )
            out.extend(np.asarray(v, dtype=np.float64) for v in vectors)
        return out

    def embed_token_lists(self, texts: Sequence[str]) -> list[list[np.ndarray]]:
        out: list[list[np.ndarray]] = []
        for i in range(0, len(texts), self.batch_size):
            batch = texts[i : i + self.batch_size]
            doc = self._post(batch, "tokens")
            per_text = doc.get("vectors_per_text")
            if not isinstance(per_text, list) or len(per_text) != len(batch):
                raise ProviderUnavailableError(
                    "embedding service response malformed (vectors_per_text)"
                )
            for text, vecs in zip(batch, per_text):
                if len(vecs) != len(textproc.tokenize(text)):
                    raise ProviderUnavailableError(
                        "embedding service returned a token count that does not "
                        "match the harness tokenizer"
                    )
                out.append([np.asarray(v, dtype=np.float64) for v in vecs])
        return out


_DEFAULT_LOCAL = LocalHashEmbedding()


def local_fallback_embed(text: str, dim: int = DEFAULT_LOCAL_DIM) -> np.ndarray:
    """Embed one string with the deterministic local fallback."""
    provider = _DEFAULT_LOCAL if dim == DEFAULT_LOCAL_DIM else LocalHashEmbedding(dim)
    return provider.embed_one(text)


def embed_text(provider, text: str) -> np.ndarray:
    """Sentence-averaged text embedding.

    The text is split into sentences, each sentence embedded, and the
    arithmetic mean returned; single-sentence texts return that sentence's
    embedding unchanged.
    """
    if not text.strip():
        raise EmptyTextError("embed_text requires non-empty text")
    sentences = textproc.split_sentences(text)
    vectors = provider.embed_texts(sentences)
    if len(vectors) == 1:
        return vectors[0]
    return np.mean(np.stack(vectors), axis=0)


def embed_tokens(provider, text: str) -> list[np.ndarray]:
    """One vector per token of textproc.tokenize(text), order-preserving."""
    if "tokens" not in provider.granularities:
        raise UnsupportedGranularityError(
            f"provider {provider.name!r} does not support token granularity"
        )
    if not textproc.tokenize(text):
        return []
    return provider.embed_token_lists([text])[0]
