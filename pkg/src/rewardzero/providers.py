"""Embedding providers: file cache lookups or the HTTP embedding service.

Both providers return one unit-norm EmbeddingVector per input, in input
order, and are deterministic for identical inputs. Ingestion is the single
normalization point; a zero-norm or dimension-mixing response is an error,
never silently repaired.

HTTP wire protocol (shared with the embedding service, see docs/protocol.md):

    POST /v1/embed/text   {"texts": [...], "model": "<tag>"}
    POST /v1/embed/image  {"images_b64": [...], "model": "<tag>"}
        -> {"dim": D, "embeddings": [[...], ...]}
    GET  /healthz         -> {"status": "ok", "model": "<tag>", "dim": D}
"""

from __future__ import annotations

import base64
import threading
from pathlib import Path
from typing import Sequence

import requests

from .cache import EmbeddingCache, EmbeddingKind
from .errors import (
    DimensionInconsistencyError,
    ProviderUnavailableError,
    UnknownIdError,
)
from .vectors import EmbeddingVector

DEFAULT_MODEL_TAG = "clip-vit-base-patch32"
DEFAULT_MAX_IN_FLIGHT = 4


def _check_batch_dims(vectors: Sequence[EmbeddingVector], what: str) -> None:
    dims = {v.dim for v in vectors}
    if len(dims) > 1:
        raise DimensionInconsistencyError(f"{what} batch mixes dimensions: {sorted(dims)}")


class CacheProvider:
    """Resolves goal texts and frame references against a prebuilt cache.

    Text inputs are keyed by the exact text string; frame references are
    keyed by the reference string. Frame embeddings live under the image
    kind regardless of how they were produced, so caption-derived state
    embeddings can be ingested under the frame's reference.
    """

    def __init__(self, cache: EmbeddingCache, model_tag: str | None = None):
        if model_tag is None:
            tags = cache.model_tags()
            if len(tags) != 1:
                raise ValueError(
                    f"model_tag required: cache holds {len(tags)} model tags {tags}"
                )
            model_tag = tags[0]
        self._cache = cache
        self.model_tag = model_tag

    def embed_text(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return self._lookup(texts, EmbeddingKind.TEXT)

    def embed_image(self, frame_refs: Sequence[str]) -> list[EmbeddingVector]:
        return self._lookup(frame_refs, EmbeddingKind.IMAGE)

    def _lookup(self, ids: Sequence[str], kind: EmbeddingKind) -> list[EmbeddingVector]:
        if not ids:
            raise ValueError("empty embedding batch")
        vectors = [self._cache.get(i, kind, self.model_tag).normalized() for i in ids]
        _check_batch_dims(vectors, kind.value)
        return vectors


class HttpProvider:
    """Client for the embedding service.

    Concurrent use is allowed; a semaphore bounds in-flight requests
    (default 4). Within a batch the response embeddings are matched to
    inputs by order.
    """

    def __init__(
        self,
        endpoint: str,
        model_tag: str = DEFAULT_MODEL_TAG,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model_tag = model_tag
        self.timeout = timeout
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self._session = session or requests.Session()

    def healthz(self) -> dict:
        try:
            with self._sem:
                resp = self._session.get(f"{self.endpoint}/healthz", timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderUnavailableError(f"health check failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailableError(
                f"health check returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        body = resp.json()
        if body.get("status") != "ok":
            raise ProviderUnavailableError(f"service unhealthy: {body}")
        return body

    def embed_text(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("empty embedding batch")
        body = self._post("/v1/embed/text", {"texts": list(texts), "model": self.model_tag})
        return self._parse_embeddings(body, len(texts))

    def embed_image(self, frame_refs: Sequence[str]) -> list[EmbeddingVector]:
        if not frame_refs:
            raise ValueError("empty embedding batch")
        images_b64 = []
        for ref in frame_refs:
            try:
                raw = Path(ref).read_bytes()
            except OSError as exc:
                raise UnknownIdError(f"image file not readable: {ref!r} ({exc})") from exc
            images_b64.append(base64.b64encode(raw).decode("ascii"))
        body = self._post("/v1/embed/image", {"images_b64": images_b64, "model": self.model_tag})
        return self._parse_embeddings(body, len(frame_refs))

    def _post(self, path: str, payload: dict) -> dict:
        try:
            with self._sem:
                resp = self._session.post(
                    f"{self.endpoint}{path}", json=payload, timeout=self.timeout
                )
        except requests.RequestException as exc:
            raise ProviderUnavailableError(f"POST {path} failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailableError(
                f"POST {path} returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderUnavailableError(f"POST {path} returned non-JSON body") from exc

    def _parse_embeddings(self, body: dict, expected: int) -> list[EmbeddingVector]:
        dim = body.get("dim")
        embeddings = body.get("embeddings")
        if not isinstance(dim, int) or not isinstance(embeddings, list):
            raise ProviderUnavailableError(f"malformed embed response: {str(body)[:200]}")
        if len(embeddings) != expected:
            raise ProviderUnavailableError(
                f"embed response has {len(embeddings)} vectors, expected {expected}"
            )
        vectors = []
        for values in embeddings:
            if len(values) != dim:
                raise DimensionInconsistencyError(
                    f"vector length {len(values)} disagrees with dim field {dim}"
                )
            vectors.append(EmbeddingVector(values).normalized())
        _check_batch_dims(vectors, "response")
        return vectors
