"""Completion-sense benchmark: score a potential function per episode.

Four metrics per episode, aggregated across the manifest:

- forward transition accuracy: for each consecutive keyframe pair, does
  the shaped reward of the transition exceed epsilon,
- monotonicity: fraction of consecutive potential pairs that strictly
  increase (plus whether all of them do),
- rank correlation between ground-truth completion percentages and
  potentials (average ranks on tied potentials),
- jump detection: does the single first-to-last transition clear epsilon.

The reward used by the transition metrics defaults to beta = 0 with the
difference base, so the benchmark scores the potential function itself;
any reward configuration can be substituted to score the full bonus.
Latency is measured around provider calls only and recorded at 0.1 ms
granularity so reports stay byte-stable across runs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyResultsError, LengthMismatchError, TooFewFramesError
from .manifest import Episode
from .rewards import (
    BaseRewardMode,
    PotentialConfig,
    PotentialMode,
    RewardConfig,
    caption_potential,
    clip_potential,
    completion_reward,
)

DEFAULT_EPSILON = 1e-3


def _potential_only_reward() -> RewardConfig:
    # beta = 0: transition metrics reduce to potential differences
    return RewardConfig(beta=0.0, base_mode=BaseRewardMode.POTENTIAL_DIFFERENCE)


@dataclass(frozen=True)
class BenchConfig:
    epsilon: float = DEFAULT_EPSILON
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    reward: RewardConfig = field(default_factory=_potential_only_reward)

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class EpisodeResult:
    potentials: list[float]
    forward_hits: int
    forward_total: int
    monotone: bool
    mono_fraction: float
    spearman_rho: float
    jump_positive: bool
    latency_per_frame_ms: float


@dataclass(frozen=True)
class BenchmarkReport:
    label: str
    per_episode: list[EpisodeResult]
    fta: tuple[int, int]
    jump: tuple[int, int]
    mono_episodes: tuple[int, int]
    mean_spearman: float
    mean_latency_ms: float


class _TimedProvider:
    """Forwards embed calls while accumulating the time spent in them."""

    def __init__(self, inner):
        self._inner = inner
        self.seconds = 0.0

    def embed_text(self, texts):
        t0 = time.perf_counter()
        out = self._inner.embed_text(texts)
        self.seconds += time.perf_counter() - t0
        return out

    def embed_image(self, frame_refs):
        t0 = time.perf_counter()
        out = self._inner.embed_image(frame_refs)
        self.seconds += time.perf_counter() - t0
        return out


def episode_potentials(ep: Episode, provider, cfg: BenchConfig) -> list[float]:
    """One potential per keyframe, in keyframe order.

    In clip-direct mode keyframe 0 serves as its own baseline, so its
    initial-state penalty term is the self-similarity (exactly 1 up to
    rounding).
    """
    goal = provider.embed_text([ep.goal_text])[0]
    frames = provider.embed_image(ep.frame_refs())
    if cfg.potential.mode is PotentialMode.CAPTION_DIRECT:
        return [caption_potential(f, goal) for f in frames]
    baseline = frames[ep.baseline_index]
    return [clip_potential(f, goal, baseline, cfg.potential) for f in frames]


def forward_transition_accuracy(potentials: Sequence[float], cfg: BenchConfig) -> tuple[int, int]:
    """(hits, total): transitions whose shaped reward exceeds epsilon."""
    if len(potentials) < 2:
        raise TooFewFramesError(f"need >= 2 potentials, got {len(potentials)}")
    hits = 0
    for prev, cur in zip(potentials, potentials[1:]):
        if completion_reward(cur, prev, cfg.reward).total > cfg.epsilon:
            hits += 1
    return hits, len(potentials) - 1


def monotonicity(potentials: Sequence[float]) -> tuple[float, bool]:
    """(fraction of strictly increasing consecutive pairs, all increased)."""
    if len(potentials) < 2:
        raise TooFewFramesError(f"need >= 2 potentials, got {len(potentials)}")
    increases = sum(1 for prev, cur in zip(potentials, potentials[1:]) if cur > prev)
    total = len(potentials) - 1
    fraction = increases / total
    return fraction, increases == total


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    n = len(values)
    sorted_vals = values[order]
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(completions: Sequence[float], potentials: Sequence[float]) -> float:
    """Rank correlation between completions and potentials, in [-1, 1].

    Completions are assumed strictly increasing (the manifest guarantees
    it), so only the potential side can tie; tied potentials share average
    ranks. A constant potential sequence has no ordering information and
    scores 0.
    """
    if len(completions) != len(potentials):
        raise LengthMismatchError(
            f"length mismatch: {len(completions)} completions vs {len(potentials)} potentials"
        )
    if len(completions) < 2:
        raise TooFewFramesError(f"need >= 2 values, got {len(completions)}")
    rx = _average_ranks(np.asarray(completions, dtype=np.float64))
    ry = _average_ranks(np.asarray(potentials, dtype=np.float64))
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom_sq = float(np.dot(dx, dx)) * float(np.dot(dy, dy))
    if denom_sq == 0.0:
        return 0.0
    rho = float(np.dot(dx, dy)) / float(np.sqrt(denom_sq))
    return min(1.0, max(-1.0, rho))


def jump_detection(phi_first: float, phi_last: float, cfg: BenchConfig) -> bool:
    """Whether the single first-to-last transition clears epsilon."""
    return completion_reward(phi_last, phi_first, cfg.reward).total > cfg.epsilon


def evaluate_episode(ep: Episode, provider, cfg: BenchConfig) -> EpisodeResult:
    timed = _TimedProvider(provider)
    potentials = episode_potentials(ep, timed, cfg)
    hits, total = forward_transition_accuracy(potentials, cfg)
    fraction, fully = monotonicity(potentials)
    rho = spearman(ep.completions(), potentials)
    jump = jump_detection(potentials[0], potentials[-1], cfg)
    # 0.1 ms granularity keeps serialized reports stable across runs
    latency_ms = round(timed.seconds * 1000.0 / len(potentials), 1)
    return EpisodeResult(
        potentials=potentials,
        forward_hits=hits,
        forward_total=total,
        monotone=fully,
        mono_fraction=fraction,
        spearman_rho=rho,
        jump_positive=jump,
        latency_per_frame_ms=latency_ms,
    )


def aggregate(results: Sequence[EpisodeResult], label: str = "") -> BenchmarkReport:
    """Sum counts and average means across episodes (order-invariant)."""
    if not results:
        raise EmptyResultsError("no episode results to aggregate")
    n = len(results)
    return BenchmarkReport(
        label=label,
        per_episode=list(results),
        fta=(sum(r.forward_hits for r in results), sum(r.forward_total for r in results)),
        jump=(sum(1 for r in results if r.jump_positive), n),
        mono_episodes=(sum(1 for r in results if r.monotone), n),
        mean_spearman=float(np.mean([r.spearman_rho for r in results])),
        mean_latency_ms=round(float(np.mean([r.latency_per_frame_ms for r in results])), 1),
    )


def run_benchmark(episodes: Sequence[Episode], provider, cfg: BenchConfig,
                  label: str = "") -> BenchmarkReport:
    if not label:
        if cfg.potential.mode is PotentialMode.CAPTION_DIRECT:
            label = "caption-direct"
        else:
            label = f"clip-direct(alpha={cfg.potential.alpha:g})"
    results = [evaluate_episode(ep, provider, cfg) for ep in episodes]
    return aggregate(results, label=label)


def report_to_json(report: BenchmarkReport) -> str:
    doc = {
        "label": report.label,
        "per_episode": [
            {
                "potentials": r.potentials,
                "forward_hits": r.forward_hits,
                "forward_total": r.forward_total,
                "monotone": r.monotone,
                "mono_fraction": r.mono_fraction,
                "spearman_rho": r.spearman_rho,
                "jump_positive": r.jump_positive,
                "latency_per_frame_ms": r.latency_per_frame_ms,
            }
            for r in report.per_episode
        ],
        "fta": list(report.fta),
        "jump": list(report.jump),
        "mono_episodes": list(report.mono_episodes),
        "mean_spearman": report.mean_spearman,
        "mean_latency_ms": report.mean_latency_ms,
    }
    return json.dumps(doc, indent=2) + "\n"


def report_from_json(text: str) -> BenchmarkReport:
    doc = json.loads(text)
    per_episode = [
        EpisodeResult(
            potentials=[float(p) for p in r["potentials"]],
            forward_hits=r["forward_hits"],
            forward_total=r["forward_total"],
            monotone=r["monotone"],
            mono_fraction=r["mono_fraction"],
            spearman_rho=r["spearman_rho"],
            jump_positive=r["jump_positive"],
            latency_per_frame_ms=r["latency_per_frame_ms"],
        )
        for r in doc["per_episode"]
    ]
    return BenchmarkReport(
        label=doc["label"],
        per_episode=per_episode,
        fta=tuple(doc["fta"]),
        jump=tuple(doc["jump"]),
        mono_episodes=tuple(doc["mono_episodes"]),
        mean_spearman=doc["mean_spearman"],
        mean_latency_ms=doc["mean_latency_ms"],
    )


def render_report(report: BenchmarkReport, format: str = "table") -> str:
    """Deterministic text rendering: 'table', 'json', or 'md'."""
    if format == "json":
        return report_to_json(report)
    fta = f"{report.fta[0]}/{report.fta[1]}"
    jump = f"{report.jump[0]}/{report.jump[1]}"
    mono = f"{report.mono_episodes[0]}/{report.mono_episodes[1]}"
    rho = f"{report.mean_spearman:.3f}"
    latency = f"{report.mean_latency_ms:.1f} ms"
    if format == "md":
        lines = [
            "| Method | FTA | J+ | Mono | Spearman | Latency |",
            "| --- | --- | --- | --- | --- | --- |",
            f"| {report.label} | {fta} | {jump} | {mono} | {rho} | {latency} |",
        ]
        return "\n".join(lines) + "\n"
    if format == "table":
        header = f"{'Method':<28} {'FTA':>7} {'J+':>5} {'Mono':>6} {'Spearman':>9} {'Latency':>9}"
        row = f"{report.label:<28} {fta:>7} {jump:>5} {mono:>6} {rho:>9} {latency:>9}"
        return header + "\n" + row + "\n"
    raise ValueError(f"unknown report format {format!r} (expected table, json, or md)")
