"""FastAPI application implementing the embedding wire protocol.

See ../../docs/protocol.md (repo root) for the contract. Encoder calls are
serialized per batch; responses preserve request order. The only state is
the loaded encoder.
"""

from __future__ import annotations

import base64
import binascii
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ServiceConfig
from .encoders import EncoderLoadError, ImageDecodeError, build_encoder


class TextBatch(BaseModel):
    texts: list[str]
    model: str


class ImageBatch(BaseModel):
    images_b64: list[str]
    model: str


def _error(code: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=code, content={"error": detail})


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="embed-service")
    lock = threading.Lock()

    encoder = None
    load_error: str | None = None
    try:
        encoder = build_encoder(config.model_tag, device=config.device)
    except EncoderLoadError as exc:
        load_error = str(exc)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        # the protocol reserves 422 for undecodable images
        return _error(400, f"malformed body: {exc.errors()[:3]}")

    def batch_guard(model: str, items: list) -> JSONResponse | None:
        if encoder is None:
            return _error(503, f"model not loaded: {load_error}")
        if not items:
            return _error(400, "empty batch")
        if model != config.model_tag:
            return _error(400, f"model tag mismatch: got {model!r}, serving {config.model_tag!r}")
        if len(items) > config.max_batch:
            return _error(413, f"batch of {len(items)} exceeds max_batch {config.max_batch}")
        return None

    @app.get("/healthz")
    def healthz():
        if encoder is None:
            return _error(503, f"model not loaded: {load_error}")
        return {"status": "ok", "model": config.model_tag, "dim": encoder.dim}

    @app.post("/v1/embed/text")
    def embed_text(batch: TextBatch):
        guard = batch_guard(batch.model, batch.texts)
        if guard is not None:
            return guard
        with lock:
            vectors = encoder.embed_texts(batch.texts)
        return {"dim": encoder.dim, "embeddings": vectors.tolist()}

    @app.post("/v1/embed/image")
    def embed_image(batch: ImageBatch):
        guard = batch_guard(batch.model, batch.images_b64)
        if guard is not None:
            return guard
        payloads = []
        for i, encoded in enumerate(batch.images_b64):
            try:
                payloads.append(base64.b64decode(encoded, validate=True))
            except (binascii.Error, ValueError):
                return _error(422, f"image {i} is not valid base64")
        try:
            with lock:
                vectors = encoder.embed_images(payloads)
        except ImageDecodeError as exc:
            return _error(422, str(exc))
        return {"dim": encoder.dim, "embeddings": vectors.tolist()}

    return app
