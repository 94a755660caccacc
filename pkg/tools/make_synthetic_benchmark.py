"""Generate the shipped synthetic benchmark: manifests plus embedding cache.

Each episode's frame embeddings live on a fixed 2-D plane spanned by two
basis axes of a 16-dim space; the goal embedding is the first axis. A
frame at angle theta from the goal axis has goal similarity cos(theta),
so shrinking theta with completion makes the penalized potential
  0.7 * cos(theta_i) - 0.3 * cos(theta_i - theta_0)
strictly increasing with margins far above the reward threshold. The
reversed manifest lists the same frames in opposite order, which makes
every potential sequence strictly decreasing.

Two episodes share one goal text, so the manifest has 24 frames and 5
unique goals (29 cache entries).

Run from the repo root:  python3 tools/make_synthetic_benchmark.py
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from rewardzero.cache import EmbeddingCache, EmbeddingCacheEntry, EmbeddingKind  # noqa: E402
from rewardzero.manifest import Episode, Keyframe, save_manifest  # noqa: E402
from rewardzero.vectors import EmbeddingVector  # noqa: E402

DIM = 16
MODEL_TAG = "synthetic-v1"
COMPLETIONS = (0, 33, 66, 100)

# (task_name, goal_text, plane, start/end angle in degrees)
EPISODES = [
    ("SlideTrack-a", "The slider is at the rightmost end of the track", 0, (80.0, 5.0)),
    ("SlideTrack-b", "The slider is at the rightmost end of the track", 0, (78.0, 6.0)),
    ("TurnDial", "The dial points at the topmost mark", 1, (82.0, 8.0)),
    ("DropBall", "The ball is inside the basket", 2, (75.0, 4.0)),
    ("CloseDoor", "The door is fully closed", 3, (84.0, 7.0)),
    ("StackRings", "The rings are stacked on the peg", 4, (77.0, 9.0)),
]


def plane_vector(plane: int, theta_deg: float) -> list[float]:
    values = [0.0] * DIM
    theta = math.radians(theta_deg)
    values[2 * plane] = math.cos(theta)
    values[2 * plane + 1] = math.sin(theta)
    return values


def frame_ref(task: str, pct: int) -> str:
    return f"{task.lower()}/frame_{pct:03d}"


def main() -> None:
    out_dir = REPO / "data" / "synthetic"
    out_dir.mkdir(parents=True, exist_ok=True)

    cache = EmbeddingCache()
    episodes = []
    reversed_episodes = []
    for task, goal_text, plane, (theta_start, theta_end) in EPISODES:
        keyframes = []
        for pct in COMPLETIONS:
            theta = theta_start + (theta_end - theta_start) * pct / 100.0
            ref = frame_ref(task, pct)
            cache.add(EmbeddingCacheEntry(
                id=ref,
                kind=EmbeddingKind.IMAGE,
                model_tag=MODEL_TAG,
                vector=EmbeddingVector(plane_vector(plane, theta)),
            ))
            keyframes.append(Keyframe(frame_ref=ref, completion_pct=pct))
        if not cache.has(goal_text, EmbeddingKind.TEXT, MODEL_TAG):
            cache.add(EmbeddingCacheEntry(
                id=goal_text,
                kind=EmbeddingKind.TEXT,
                model_tag=MODEL_TAG,
                vector=EmbeddingVector(plane_vector(plane, 0.0)),
            ))
        episodes.append(Episode(task_name=task, goal_text=goal_text, keyframes=tuple(keyframes)))
        reversed_refs = [kf.frame_ref for kf in reversed(keyframes)]
        reversed_episodes.append(Episode(
            task_name=task,
            goal_text=goal_text,
            keyframes=tuple(
                Keyframe(frame_ref=ref, completion_pct=pct)
                for ref, pct in zip(reversed_refs, COMPLETIONS)
            ),
        ))

    save_manifest(episodes, out_dir / "manifest.json")
    save_manifest(reversed_episodes, out_dir / "manifest_reversed.json")
    cache.save(out_dir / "cache.jsonl")
    print(f"wrote {out_dir}/manifest.json, manifest_reversed.json, cache.jsonl "
          f"({len(cache)} cache entries)")


if __name__ == "__main__":
    main()
