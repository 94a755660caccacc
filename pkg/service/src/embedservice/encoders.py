"""Dual-encoder backends.

Two interchangeable encoders sit behind the service endpoints:

- HashProjectionEncoder: a dependency-free deterministic stand-in. Texts
  are hashed as character 3-grams into a fixed bucket space and projected
  with a frozen random matrix; images are decoded, resized to a 16x16 RGB
  thumbnail, and projected likewise. Identical inputs give identical
  unit-norm vectors on any machine, which is exactly what the protocol
  tests need.

- ClipDualEncoder: the pretrained ViT-B/32 dual-encoder via transformers
  (512-dim projections, canonical 224x224 preprocessing). Loaded lazily;
  requires the optional [clip] dependencies and downloadable weights.

Both return one unit-norm float64 row per input, in input order.
"""

from __future__ import annotations

import hashlib
import io
import re

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageDecodeError(ValueError):
    """Payload bytes could not be decoded as an image."""


class EncoderLoadError(RuntimeError):
    """The requested encoder backend could not be constructed."""


_HASH_TAG = re.compile(r"^hash-(\d+)$")
_N_BUCKETS = 4096
_PROJECTION_SEED = 20240601
_THUMB_SIDE = 16


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return m / norms


class HashProjectionEncoder:
    def __init__(self, dim: int = 512):
        if dim < 8:
            raise ValueError(f"dim must be >= 8, got {dim}")
        self.dim = dim
        rng = np.random.default_rng(_PROJECTION_SEED)
        self._text_proj = rng.standard_normal((_N_BUCKETS, dim)) / np.sqrt(_N_BUCKETS)
        self._image_proj = rng.standard_normal((_THUMB_SIDE * _THUMB_SIDE * 3, dim))

    @staticmethod
    def _buckets(text: str) -> dict[int, float]:
        padded = f" {text} "
        grams = [padded[i : i + 3] for i in range(len(padded) - 2)] or [padded]
        counts: dict[int, float] = {}
        for gram in grams:
            digest = hashlib.sha256(gram.encode()).digest()
            bucket = int.from_bytes(digest[:4], "big") % _N_BUCKETS
            counts[bucket] = counts.get(bucket, 0.0) + 1.0
        return counts

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for bucket, count in sorted(self._buckets(text).items()):
                out[i] += count * self._text_proj[bucket]
        return _unit_rows(out)

    def embed_images(self, payloads: list[bytes]) -> np.ndarray:
        out = np.zeros((len(payloads), self.dim))
        for i, payload in enumerate(payloads):
            try:
                with Image.open(io.BytesIO(payload)) as img:
                    thumb = img.convert("RGB").resize((_THUMB_SIDE, _THUMB_SIDE))
            except (UnidentifiedImageError, OSError, ValueError) as exc:
                raise ImageDecodeError(f"image {i} cannot be decoded: {exc}") from exc
            pixels = np.asarray(thumb, dtype=np.float64).reshape(-1) / 255.0
            out[i] = pixels @ self._image_proj
        return _unit_rows(out)


class ClipDualEncoder:
    """Pretrained dual-encoder; import and weight load deferred to first use."""

    def __init__(self, model_tag: str, device: str = "cpu"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderLoadError(
                "transformers/torch not installed; install the [clip] extra"
            ) from exc
        self._torch = torch
        resolved = "cuda" if device == "accelerator" else "cpu"
        try:
            self._model = CLIPModel.from_pretrained(f"openai/{model_tag}").to(resolved).eval()
            self._processor = CLIPProcessor.from_pretrained(f"openai/{model_tag}")
        except Exception as exc:
            raise EncoderLoadError(f"cannot load pretrained weights for {model_tag!r}: {exc}") from exc
        self._device = resolved
        self.dim = int(self._model.config.projection_dim)

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        inputs = self._processor(text=texts, return_tensors="pt", padding=True,
                                 truncation=True).to(self._device)
        with torch.no_grad():
            features = self._model.get_text_features(**inputs)
        return _unit_rows(features.double().cpu().numpy())

    def embed_images(self, payloads: list[bytes]) -> np.ndarray:
        torch = self._torch
        images = []
        for i, payload in enumerate(payloads):
            try:
                images.append(Image.open(io.BytesIO(payload)).convert("RGB"))
            except (UnidentifiedImageError, OSError, ValueError) as exc:
                raise ImageDecodeError(f"image {i} cannot be decoded: {exc}") from exc
        inputs = self._processor(images=images, return_tensors="pt").to(self._device)
        with torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return _unit_rows(features.double().cpu().numpy())


def build_encoder(model_tag: str, device: str = "cpu"):
    match = _HASH_TAG.match(model_tag)
    if match:
        return HashProjectionEncoder(dim=int(match.group(1)))
    return ClipDualEncoder(model_tag, device=device)
