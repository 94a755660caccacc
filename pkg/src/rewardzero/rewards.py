"""Completion-sense reward engine.

The potential of a state is a cosine similarity between embeddings: either
the plain state/goal cosine (caption-direct mode) or a goal-affinity term
penalized by similarity to the episode's initial observation (clip-direct
mode). A sigmoid gate centered at a completion threshold amplifies the
signal near the goal, a clamped potential delta rewards forward progress,
and ``completion_reward`` combines them into a single scalar with a full
per-term breakdown. ``RewardTracker`` applies the same formula online when
potentials are only recomputed every N environment steps.

All functions are pure; only RewardTracker carries state, and each tracker
must be owned by exactly one environment instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionMismatchError, MissingPotentialError, ZeroVectorError
from .vectors import ZERO_NORM_EPS, EmbeddingVector

#: |k * (phi - tau)| beyond this saturates the sigmoid instead of overflowing exp().
SIGMOID_SATURATION = 700.0


class PotentialMode(Enum):
    CAPTION_DIRECT = "caption-direct"
    CLIP_DIRECT = "clip-direct"


class BaseRewardMode(Enum):
    POTENTIAL_VALUE = "value"
    POTENTIAL_DIFFERENCE = "difference"


@dataclass(frozen=True)
class PotentialConfig:
    """Weights for the state/goal potential.

    alpha balances goal affinity against departure from the initial state.
    Caption-direct mode ignores alpha and the baseline embedding entirely.
    """

    alpha: float = 0.7
    mode: PotentialMode = PotentialMode.CLIP_DIRECT

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class ActivationConfig:
    """Sigmoid gate: midpoint tau (completion threshold) and steepness k."""

    tau: float = 0.7
    k: float = 10.0

    def __post_init__(self) -> None:
        if not -1.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie strictly inside (-1, 1), got {self.tau}")
        if not self.k > 0.0:
            raise ValueError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class RewardConfig:
    """Full shaped-reward configuration.

    beta scales the completion bonus; base_mode selects whether the base
    term is the potential itself or the step-to-step potential difference
    (the default, which telescopes over an episode); invocation_interval
    is the number of environment steps between potential recomputations.
    """

    activation: ActivationConfig = field(default_factory=ActivationConfig)
    beta: float = 0.1
    base_mode: BaseRewardMode = BaseRewardMode.POTENTIAL_DIFFERENCE
    invocation_interval: int = 25

    def __post_init__(self) -> None:
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.invocation_interval < 1:
            raise ValueError(f"invocation_interval must be >= 1, got {self.invocation_interval}")


@dataclass(frozen=True)
class RewardBreakdown:
    """One shaped reward split into its terms.

    total = base + beta * activation * (1 + progress) for the beta in force
    when the breakdown was produced; progress is never negative.
    """

    base: float
    activation: float
    progress: float
    total: float
    phi: float


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between two embeddings, clamped to [-1, 1].

    Symmetric in its arguments and invariant to positive rescaling. Zero
    vectors are an error, never similarity 0.
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
    na = a.norm()
    nb = b.norm()
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        raise ZeroVectorError(f"cosine undefined for near-zero vector (norms {na:.3e}, {nb:.3e})")
    sim = float(np.dot(a.values, b.values)) / (na * nb)
    # clamp absorbs rounding just outside [-1, 1]
    return min(1.0, max(-1.0, sim))


def caption_potential(state_text_emb: EmbeddingVector, goal_text_emb: EmbeddingVector) -> float:
    """Potential as the plain cosine between state and goal embeddings."""
    return cosine_similarity(state_text_emb, goal_text_emb)


def clip_potential(
    state_emb: EmbeddingVector,
    goal_emb: EmbeddingVector,
    baseline_emb: EmbeddingVector,
    cfg: PotentialConfig,
) -> float:
    """Goal-affinity potential with an initial-state penalty.

    alpha * sim(state, goal) - (1 - alpha) * sim(state, baseline), bounded
    in [-1, 1]. The penalty term discourages staying visually similar to
    the episode's first observation.
    """
    if cfg.mode is not PotentialMode.CLIP_DIRECT:
        raise ValueError("clip_potential requires PotentialMode.CLIP_DIRECT")
    goal_sim = cosine_similarity(state_emb, goal_emb)
    baseline_sim = cosine_similarity(state_emb, baseline_emb)
    return cfg.alpha * goal_sim - (1.0 - cfg.alpha) * baseline_sim


def activation(phi: float, cfg: ActivationConfig) -> float:
    """Sigmoid gate 1 / (1 + exp(-k * (phi - tau))).

    Strictly increasing in phi, exactly 0.5 at phi = tau, and saturating
    to 0.0 / 1.0 for extreme arguments instead of overflowing.
    """
    z = cfg.k * (phi - cfg.tau)
    if z <= -SIGMOID_SATURATION:
        return 0.0
    if z >= SIGMOID_SATURATION:
        return 1.0
    return 1.0 / (1.0 + math.exp(-z))


def progress_delta(phi_t: float, phi_prev: float) -> float:
    """Forward potential change, clamped at zero: max(0, phi_t - phi_prev)."""
    return max(0.0, phi_t - phi_prev)


def completion_reward(phi_t: float, phi_prev: float, cfg: RewardConfig) -> RewardBreakdown:
    """Shaped reward for one potential transition.

    base is phi_t (POTENTIAL_VALUE) or phi_t - phi_prev
    (POTENTIAL_DIFFERENCE); the bonus beta * activation(phi_t) *
    (1 + progress) amplifies near-goal forward movement.
    """
    sigma = activation(phi_t, cfg.activation)
    delta = progress_delta(phi_t, phi_prev)
    if cfg.base_mode is BaseRewardMode.POTENTIAL_VALUE:
        base = phi_t
    else:
        base = phi_t - phi_prev
    total = base + cfg.beta * sigma * (1.0 + delta)
    return RewardBreakdown(base=base, activation=sigma, progress=delta, total=total, phi=phi_t)


class RewardTracker:
    """Applies completion_reward online with interval-cached potentials.

    The first step of an episode must supply the initial potential; it
    defines phi_prev := phi_0, so the first breakdown has zero progress
    (and zero base under POTENTIAL_DIFFERENCE). Afterwards a new potential
    is consumed whenever env_step is a multiple of the invocation interval
    and the reward is computed against the previously cached potential.

    Between recomputations nothing new is known, so no bonus is re-emitted:
    the breakdown reports zero activation, progress, and (under
    POTENTIAL_DIFFERENCE) zero base and total. Under POTENTIAL_VALUE the
    cached potential remains the per-step base. Re-emitting the cached
    bonus instead would scale the shaped return with the interval.

    Single-owner mutable state: one tracker per environment instance.
    """

    def __init__(self, cfg: RewardConfig):
        self.cfg = cfg
        self._phi: float | None = None
        self._evals = 0

    @property
    def potential_evals(self) -> int:
        """Number of potential values consumed since construction."""
        return self._evals

    @property
    def last_phi(self) -> float | None:
        return self._phi

    def reset(self) -> None:
        """Forget the cached potential; the next step starts a new episode."""
        self._phi = None

    def step(self, phi_input: float | None, env_step: int) -> RewardBreakdown:
        cfg = self.cfg
        if self._phi is None:
            if phi_input is None:
                raise MissingPotentialError(
                    f"tracker not initialized: the first step (env_step={env_step}) must supply a potential"
                )
            self._phi = float(phi_input)
            self._evals += 1
            return completion_reward(self._phi, self._phi, cfg)
        if env_step % cfg.invocation_interval == 0:
            if phi_input is None:
                raise MissingPotentialError(f"recomputation step {env_step} received no potential")
            prev = self._phi
            self._phi = float(phi_input)
            self._evals += 1
            return completion_reward(self._phi, prev, cfg)
        if cfg.base_mode is BaseRewardMode.POTENTIAL_VALUE:
            return RewardBreakdown(
                base=self._phi, activation=0.0, progress=0.0, total=self._phi, phi=self._phi
            )
        return RewardBreakdown(base=0.0, activation=0.0, progress=0.0, total=0.0, phi=self._phi)
