"""File-backed embedding cache.

One JSON record per line, each carrying id, kind, model_tag, dim, and the
full-precision decimal vector. The format is language-agnostic, diff-able,
and streamable; float values round-trip bitwise because they are written
as shortest exact decimals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CacheIoError, DuplicateIdError, UnknownIdError
from .vectors import EmbeddingVector

#: Stored vectors must already be unit-norm to this tolerance.
CACHE_UNIT_TOL = 1e-5


class EmbeddingKind(Enum):
    IMAGE = "image"
    TEXT = "text"


@dataclass(frozen=True)
class EmbeddingCacheEntry:
    id: str
    kind: EmbeddingKind
    model_tag: str
    vector: EmbeddingVector

    def key(self) -> tuple[str, str, str]:
        return (self.kind.value, self.model_tag, self.id)


class EmbeddingCache:
    """In-memory index over cache entries, keyed by (kind, model_tag, id).

    Read-mostly: safe for concurrent reads once populated. Lookups never
    fabricate vectors; every miss raises UnknownIdError.
    """

    def __init__(self, entries: Iterable[EmbeddingCacheEntry] = ()):
        self._entries: dict[tuple[str, str, str], EmbeddingCacheEntry] = {}
        for entry in entries:
            self.add(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[EmbeddingCacheEntry]:
        return iter(self._entries.values())

    def add(self, entry: EmbeddingCacheEntry) -> None:
        if not entry.vector.is_unit(CACHE_UNIT_TOL):
            raise ValueError(
                f"cache entry {entry.id!r} is not unit-norm (norm={entry.vector.norm():.6f})"
            )
        key = entry.key()
        if key in self._entries:
            raise DuplicateIdError(
                f"duplicate id {entry.id!r} for kind={entry.kind.value}, model_tag={entry.model_tag!r}"
            )
        self._entries[key] = entry

    def has(self, id: str, kind: EmbeddingKind, model_tag: str) -> bool:
        return (kind.value, model_tag, id) in self._entries

    def get(self, id: str, kind: EmbeddingKind, model_tag: str) -> EmbeddingVector:
        try:
            return self._entries[(kind.value, model_tag, id)].vector
        except KeyError:
            raise UnknownIdError(
                f"no cached embedding for id {id!r} (kind={kind.value}, model_tag={model_tag!r})"
            ) from None

    def model_tags(self) -> list[str]:
        """Distinct model tags present, sorted."""
        return sorted({entry.model_tag for entry in self})

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingCache":
        cache = cls()
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise CacheIoError(f"cannot read cache {path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                entry = EmbeddingCacheEntry(
                    id=raw["id"],
                    kind=EmbeddingKind(raw["kind"]),
                    model_tag=raw["model_tag"],
                    vector=EmbeddingVector(raw["values"]),
                )
                if raw["dim"] != entry.vector.dim:
                    raise ValueError(f"dim field {raw['dim']} != len(values) {entry.vector.dim}")
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CacheIoError(f"cache {path} line {lineno}: {exc}") from exc
            cache.add(entry)
        return cache

    def save(self, path: str | Path) -> None:
        lines = []
        for entry in self._entries.values():
            lines.append(json.dumps({
                "id": entry.id,
                "kind": entry.kind.value,
                "model_tag": entry.model_tag,
                "dim": entry.vector.dim,
                "values": entry.vector.values.tolist(),
            }))
        try:
            Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        except OSError as exc:
            raise CacheIoError(f"cannot write cache {path}: {exc}") from exc
