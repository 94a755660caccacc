"""Synthetic embedding-observable reach task and its shaping wrapper.

The agent is a point in the unit square that must reach a fixed goal
position. Observations are not coordinates but embeddings of the position
under a fixed smooth feature map (random Fourier features), so the cosine
between a state embedding and the goal embedding rises as the agent
approaches the goal. That makes the embedding-similarity potential
meaningful without any vision model, and the environment reward can stay
maximally sparse: 1 on success, 0 otherwise.

ShapedEnv adds the completion-sense bonus on top, recomputing the
potential only every ``invocation_interval`` steps against the fixed goal
embedding, with the episode's reset observation as baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import StepAfterDoneError
from .rewards import PotentialConfig, RewardBreakdown, RewardTracker, RewardConfig, clip_potential
from .vectors import EmbeddingVector

#: The smooth position-to-embedding map is shared by every env instance.
_FEATURE_MAP_SEED = 99
_FEATURE_BANDWIDTH = 0.5
#: Construction-time sanity check over a 32x32 grid.
_GRID_SIDE = 32
_MIN_GRID_RANK_CORR = 0.95


@dataclass(frozen=True)
class SyntheticEnvConfig:
    state_dim: int = 2  # planar position; the only supported value
    embedding_dim: int = 64
    max_steps: int = 200
    goal_radius: float = 0.05
    action_scale: float = 0.05
    obs_noise_std: float = 0.01
    min_start_distance: float = 0.0  # episodes start at least this far from the goal
    seed: int = 0

    def __post_init__(self) -> None:
        if self.state_dim != 2:
            raise ValueError("only planar (state_dim=2) environments are supported")
        if self.embedding_dim < 8:
            raise ValueError(f"embedding_dim must be >= 8, got {self.embedding_dim}")
        if self.max_steps < 1 or self.goal_radius <= 0 or self.action_scale <= 0:
            raise ValueError("max_steps, goal_radius, action_scale must be positive")
        if self.obs_noise_std < 0:
            raise ValueError("obs_noise_std must be nonnegative")
        if self.min_start_distance < 0:
            raise ValueError("min_start_distance must be nonnegative")


def shaping_study_env_config(seed: int = 0) -> SyntheticEnvConfig:
    """Env configuration for shaped-vs-sparse training studies.

    Slow dynamics, far starts, and noisier observations make random and
    drifting policies genuinely unlikely to stumble into the goal, so the
    sparse baseline has almost no reward signal while the embedding
    potential still guides shaped runs.
    """
    return SyntheticEnvConfig(
        action_scale=0.015,
        min_start_distance=0.45,
        obs_noise_std=0.03,
        seed=seed,
    )


class PositionEncoder:
    """Fixed random-Fourier-feature map from positions to embeddings.

    cos(W x + b) features approximate an RBF kernel, so the cosine between
    two embeddings decays smoothly with the distance between positions.
    The weights depend only on the dimension, not on the env seed: every
    environment sees the same embedding space.
    """

    def __init__(self, dim: int):
        rng = np.random.default_rng(_FEATURE_MAP_SEED)
        self._w = rng.normal(0.0, 1.0 / _FEATURE_BANDWIDTH, size=(dim, 2))
        self._b = rng.uniform(0.0, 2.0 * np.pi, size=dim)
        self._scale = np.sqrt(2.0 / dim)
        self.dim = dim

    def __call__(self, position: np.ndarray) -> np.ndarray:
        return self._scale * np.cos(self._w @ position + self._b)

    def batch(self, positions: np.ndarray) -> np.ndarray:
        return self._scale * np.cos(positions @ self._w.T + self._b)


def _unit_rows(m: np.ndarray) -> np.ndarray:
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def _verify_completion_gradient(encoder: PositionEncoder, goal: np.ndarray) -> None:
    """Check that embedding-goal cosine rises as distance to goal falls.

    Evaluated over a 32x32 grid: rank correlation between negated distance
    and cosine must clear a threshold, and distance-binned mean cosines
    must strictly decrease outward.
    """
    xs = np.linspace(0.0, 1.0, _GRID_SIDE)
    pts = np.array([[x, y] for x in xs for y in xs])
    z = _unit_rows(encoder.batch(pts))
    zg = encoder(goal)
    zg = zg / np.linalg.norm(zg)
    cos = z @ zg
    dist = np.linalg.norm(pts - goal, axis=1)

    cos_ranks = np.argsort(np.argsort(cos))
    dist_ranks = np.argsort(np.argsort(-dist))
    rho = float(np.corrcoef(cos_ranks, dist_ranks)[0, 1])
    edges = np.quantile(dist, np.linspace(0.0, 1.0, 9))
    means = [float(cos[(dist >= lo) & (dist <= hi)].mean()) for lo, hi in zip(edges, edges[1:])]
    binned_monotone = all(a > b for a, b in zip(means, means[1:]))
    if rho < _MIN_GRID_RANK_CORR or not binned_monotone:
        raise RuntimeError(
            f"embedding map does not track goal proximity (rank corr {rho:.3f}, "
            f"binned monotone {binned_monotone})"
        )


class SyntheticReachEnv:
    """Sparse-reward planar reach task observed through embeddings.

    The goal position is fixed at construction from cfg.seed; episode
    randomness (start positions, observation noise) comes from a separate
    per-instance stream so parallel instances of the same task stay
    decorrelated while sharing one goal. ``reset(seed=...)`` reseeds the
    episode stream for exact replay.
    """

    def __init__(self, cfg: SyntheticEnvConfig, instance: int = 0):
        self.cfg = cfg
        self.encoder = PositionEncoder(cfg.embedding_dim)
        goal_rng = np.random.default_rng([cfg.seed, 0])
        self.goal = goal_rng.uniform(0.25, 0.75, size=2)
        _verify_completion_gradient(self.encoder, self.goal)
        farthest = max(
            float(np.linalg.norm(np.array(corner) - self.goal))
            for corner in ((0, 0), (0, 1), (1, 0), (1, 1))
        )
        if cfg.min_start_distance > farthest - 0.05:
            raise ValueError(
                f"min_start_distance {cfg.min_start_distance} leaves no start region "
                f"(farthest corner at {farthest:.3f})"
            )
        self._rng = np.random.default_rng([cfg.seed, instance, 1])
        self._pos: np.ndarray | None = None
        self._steps = 0
        self._done = True

    @property
    def position(self) -> np.ndarray:
        if self._pos is None:
            raise StepAfterDoneError("environment has not been reset")
        return self._pos.copy()

    @property
    def steps(self) -> int:
        return self._steps

    def goal_embedding(self) -> np.ndarray:
        """Noise-free embedding of the goal position."""
        return self.encoder(self.goal)

    def _observe(self) -> np.ndarray:
        emb = self.encoder(self._pos)
        if self.cfg.obs_noise_std > 0:
            emb = emb + self._rng.normal(0.0, self.cfg.obs_noise_std, size=emb.shape)
        return emb

    def reset(self, seed: int | None = None, start: np.ndarray | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        if start is None:
            while True:
                self._pos = self._rng.uniform(0.0, 1.0, size=2)
                if np.linalg.norm(self._pos - self.goal) >= self.cfg.min_start_distance:
                    break
        else:
            start = np.asarray(start, dtype=np.float64)
            if start.shape != (2,) or np.any(start < 0.0) or np.any(start > 1.0):
                raise ValueError(f"start must lie in the unit square, got {start}")
            self._pos = start.copy()
        self._steps = 0
        self._done = False
        return self._observe()

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, bool]:
        """Apply an action in [-1, 1]^2 scaled by action_scale.

        Returns (observation embedding, env_reward, done, success) with
        env_reward 1.0 exactly at success and 0.0 otherwise. The episode
        ends at success or after max_steps.
        """
        if self._done or self._pos is None:
            raise StepAfterDoneError("step() called on a finished episode; call reset()")
        action = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        self._pos = np.clip(self._pos + self.cfg.action_scale * action, 0.0, 1.0)
        self._steps += 1
        success = bool(np.linalg.norm(self._pos - self.goal) <= self.cfg.goal_radius)
        done = success or self._steps >= self.cfg.max_steps
        self._done = done
        reward = 1.0 if success else 0.0
        return self._observe(), reward, done, success


class ShapedEnv:
    """Adds the completion-sense bonus to an env's sparse reward.

    The potential is recomputed only on steps whose index is a multiple of
    the reward config's invocation interval (the reset observation counts
    as step 0 and initializes the tracker); between recomputations the
    tracker emits nothing. ``combine`` selects whether the bonus is added
    to the env reward or replaces it.
    """

    def __init__(
        self,
        env: SyntheticReachEnv,
        reward_cfg: RewardConfig,
        goal_embedding: np.ndarray,
        potential_cfg: PotentialConfig | None = None,
        combine: str = "add",
    ):
        if combine not in ("add", "replace"):
            raise ValueError(f"combine must be 'add' or 'replace', got {combine!r}")
        self.env = env
        self.reward_cfg = reward_cfg
        self.potential_cfg = potential_cfg or PotentialConfig()
        self.combine = combine
        self._goal = EmbeddingVector(goal_embedding).normalized()
        self._tracker = RewardTracker(reward_cfg)
        self._baseline: EmbeddingVector | None = None
        self._step_index = 0
        self.last_breakdown: RewardBreakdown | None = None
        self.last_env_reward = 0.0

    @property
    def cfg(self) -> SyntheticEnvConfig:
        return self.env.cfg

    @property
    def potential_evals(self) -> int:
        return self._tracker.potential_evals

    def _potential(self, obs: np.ndarray) -> float:
        state = EmbeddingVector(obs)
        return clip_potential(state, self._goal, self._baseline, self.potential_cfg)

    def reset(self, seed: int | None = None, start: np.ndarray | None = None) -> np.ndarray:
        obs = self.env.reset(seed=seed, start=start)
        self._baseline = EmbeddingVector(obs).normalized()
        self._tracker.reset()
        self._step_index = 0
        self.last_breakdown = self._tracker.step(self._potential(obs), 0)
        self.last_env_reward = 0.0
        return obs

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, bool]:
        obs, env_reward, done, success = self.env.step(action)
        self._step_index += 1
        phi = None
        if self._step_index % self.reward_cfg.invocation_interval == 0:
            phi = self._potential(obs)
        breakdown = self._tracker.step(phi, self._step_index)
        self.last_breakdown = breakdown
        self.last_env_reward = env_reward
        if self.combine == "replace":
            shaped = breakdown.total
        else:
            shaped = env_reward + breakdown.total
        return obs, shaped, done, success


@dataclass
class EpisodeRecord:
    """Stats of one completed episode inside the vector env."""

    env_return: float
    shaped_return: float
    length: int
    success_once: bool
    success_at_end: bool


@dataclass
class VectorStep:
    obs: np.ndarray  # [N, D], post auto-reset
    reward: np.ndarray  # [N], the reward the learner trains on
    env_reward: np.ndarray  # [N], the raw sparse reward
    terminated: np.ndarray  # [N] bool, episode ended in success
    truncated: np.ndarray  # [N] bool, episode hit the step limit
    final_obs: np.ndarray  # [N, D], valid where terminated | truncated
    completed: list[EpisodeRecord]


class VectorEnv:
    """Synchronous batch of independently seeded envs with auto-reset.

    Each env owns its own shaping tracker (if shaped); there is no shared
    mutable state between instances, and all instances advance in lockstep.
    """

    def __init__(self, env_fns: list[Callable[[], SyntheticReachEnv | ShapedEnv]]):
        if not env_fns:
            raise ValueError("need at least one env")
        self.envs = [fn() for fn in env_fns]
        self.num_envs = len(self.envs)
        self._env_returns = np.zeros(self.num_envs)
        self._shaped_returns = np.zeros(self.num_envs)
        self._lengths = np.zeros(self.num_envs, dtype=np.int64)
        self._succeeded = np.zeros(self.num_envs, dtype=bool)

    def reset(self) -> np.ndarray:
        obs = np.stack([env.reset() for env in self.envs])
        self._env_returns[:] = 0.0
        self._shaped_returns[:] = 0.0
        self._lengths[:] = 0
        self._succeeded[:] = False
        return obs

    def step(self, actions: np.ndarray) -> VectorStep:
        n = self.num_envs
        dim = self.envs[0].cfg.embedding_dim
        obs = np.zeros((n, dim))
        reward = np.zeros(n)
        env_reward = np.zeros(n)
        terminated = np.zeros(n, dtype=bool)
        truncated = np.zeros(n, dtype=bool)
        final_obs = np.zeros((n, dim))
        completed: list[EpisodeRecord] = []

        for i, env in enumerate(self.envs):
            o, r, done, success = env.step(actions[i])
            if isinstance(env, ShapedEnv):
                raw = env.last_env_reward
            else:
                raw = r
            reward[i] = r
            env_reward[i] = raw
            self._env_returns[i] += raw
            self._shaped_returns[i] += r
            self._lengths[i] += 1
            self._succeeded[i] |= success
            if done:
                terminated[i] = success
                truncated[i] = not success
                final_obs[i] = o
                completed.append(EpisodeRecord(
                    env_return=float(self._env_returns[i]),
                    shaped_return=float(self._shaped_returns[i]),
                    length=int(self._lengths[i]),
                    success_once=bool(self._succeeded[i]),
                    success_at_end=bool(success),
                ))
                self._env_returns[i] = 0.0
                self._shaped_returns[i] = 0.0
                self._lengths[i] = 0
                self._succeeded[i] = False
                o = env.reset()
            obs[i] = o

        return VectorStep(
            obs=obs,
            reward=reward,
            env_reward=env_reward,
            terminated=terminated,
            truncated=truncated,
            final_obs=final_obs,
            completed=completed,
        )
