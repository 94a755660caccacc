"""Benchmark episode manifests.

A manifest is a single human-editable JSON document:

    {
      "version": 1,
      "episodes": [
        {
          "task_name": "...",
          "goal_text": "...",
          "keyframes": [{"frame_ref": "...", "completion_pct": 0}, ...]
        },
        ...
      ]
    }

Each episode lists keyframes at strictly increasing completion percentages
starting at 0; the 0% frame doubles as the baseline for the initial-state
penalty. Goal texts describe the end state ("The drawer is fully open")
rather than the action, which keeps caption-based providers from echoing
goal language at 0% completion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .errors import ManifestParseError, ManifestValidationError

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class Keyframe:
    frame_ref: str
    completion_pct: int


@dataclass(frozen=True)
class Episode:
    task_name: str
    goal_text: str
    keyframes: tuple[Keyframe, ...]
    baseline_index: int = 0  # the 0% frame anchors the initial-state penalty

    def completions(self) -> list[int]:
        return [kf.completion_pct for kf in self.keyframes]

    def frame_refs(self) -> list[str]:
        return [kf.frame_ref for kf in self.keyframes]


def _require(condition: bool, message: str, index: int | None = None, field: str | None = None) -> None:
    if not condition:
        raise ManifestValidationError(message, episode_index=index, field=field)


def _parse_episode(index: int, raw: Any) -> Episode:
    _require(isinstance(raw, dict), "episode must be an object", index)
    task_name = raw.get("task_name")
    _require(isinstance(task_name, str), "task_name must be a string", index, "task_name")
    goal_text = raw.get("goal_text")
    _require(isinstance(goal_text, str) and goal_text.strip() != "",
             "goal_text must be a nonempty string", index, "goal_text")
    frames_raw = raw.get("keyframes")
    _require(isinstance(frames_raw, list), "keyframes must be a list", index, "keyframes")
    _require(len(frames_raw) >= 2, f"need at least 2 keyframes, got {len(frames_raw)}", index, "keyframes")

    keyframes: list[Keyframe] = []
    for j, kf in enumerate(frames_raw):
        _require(isinstance(kf, dict), f"keyframe {j} must be an object", index, "keyframes")
        ref = kf.get("frame_ref")
        _require(isinstance(ref, str) and ref != "",
                 f"keyframe {j}: frame_ref must be a nonempty string", index, "frame_ref")
        pct = kf.get("completion_pct")
        _require(isinstance(pct, int) and not isinstance(pct, bool),
                 f"keyframe {j}: completion_pct must be an integer", index, "completion_pct")
        _require(0 <= pct <= 100,
                 f"keyframe {j}: completion_pct must be in [0, 100], got {pct}", index, "completion_pct")
        keyframes.append(Keyframe(frame_ref=ref, completion_pct=pct))

    _require(keyframes[0].completion_pct == 0,
             f"first keyframe must be at completion 0, got {keyframes[0].completion_pct}",
             index, "completion_pct")
    for j in range(1, len(keyframes)):
        _require(keyframes[j].completion_pct > keyframes[j - 1].completion_pct,
                 f"completion percentages must strictly increase "
                 f"({keyframes[j - 1].completion_pct} then {keyframes[j].completion_pct} at keyframe {j})",
                 index, "completion_pct")
    return Episode(task_name=task_name, goal_text=goal_text, keyframes=tuple(keyframes))


def parse_manifest_document(doc: Any) -> list[Episode]:
    """Validate a parsed manifest document into Episodes."""
    _require(isinstance(doc, dict), "manifest root must be an object")
    version = doc.get("version")
    _require(version == MANIFEST_VERSION,
             f"unsupported manifest version {version!r} (expected {MANIFEST_VERSION})", field="version")
    episodes_raw = doc.get("episodes")
    _require(isinstance(episodes_raw, list), "episodes must be a list", field="episodes")
    _require(len(episodes_raw) >= 1, "manifest contains no episodes", field="episodes")
    return [_parse_episode(i, raw) for i, raw in enumerate(episodes_raw)]


def manifest_document(episodes: Sequence[Episode]) -> dict:
    return {
        "version": MANIFEST_VERSION,
        "episodes": [
            {
                "task_name": ep.task_name,
                "goal_text": ep.goal_text,
                "keyframes": [
                    {"frame_ref": kf.frame_ref, "completion_pct": kf.completion_pct}
                    for kf in ep.keyframes
                ],
            }
            for ep in episodes
        ],
    }


def load_manifest(path: str | Path) -> list[Episode]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestParseError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(f"manifest {path} is not valid JSON: {exc}") from exc
    return parse_manifest_document(doc)


def save_manifest(episodes: Sequence[Episode], path: str | Path) -> None:
    doc = manifest_document(episodes)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def count_forward_transitions(episodes: Sequence[Episode]) -> int:
    """Total number of consecutive keyframe pairs across all episodes."""
    return sum(len(ep.keyframes) - 1 for ep in episodes)


def unique_goal_texts(episodes: Sequence[Episode]) -> list[str]:
    """Distinct goal texts in first-appearance order."""
    seen: dict[str, None] = {}
    for ep in episodes:
        seen.setdefault(ep.goal_text, None)
    return list(seen)


def unique_frame_refs(episodes: Sequence[Episode]) -> list[str]:
    """Distinct frame references in first-appearance order."""
    seen: dict[str, None] = {}
    for ep in episodes:
        for kf in ep.keyframes:
            seen.setdefault(kf.frame_ref, None)
    return list(seen)
