"""Desk-scale PPO with GAE over the synthetic reach environment.

Standard clipped-surrogate PPO: separate 2x64 tanh policy and value MLPs,
a diagonal Gaussian policy with state-independent log-std initialized to
zero, per-minibatch advantage normalization, and gradient-norm clipping.
Training logs one row per update with the usual optimization diagnostics
(losses, approximate KL, clip fraction, entropy, explained variance) plus
episode-level success statistics, and can snapshot greedy-evaluation
checkpoints for shaped-vs-sparse comparisons.

Everything is seeded: identical seeds give identical environment
trajectories and (single-threaded) identical metric logs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn

from .envs import ShapedEnv, SyntheticEnvConfig, SyntheticReachEnv, VectorEnv
from .errors import NonFiniteGradientError
from .rewards import PotentialConfig, RewardConfig

LOG_COLUMNS = (
    "step",
    "episodic_return",
    "success_once",
    "success_at_end",
    "value_loss",
    "policy_loss",
    "approx_kl",
    "clip_fraction",
    "entropy",
    "explained_variance",
)


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    epochs_per_update: int = 4
    minibatches: int = 4
    rollout_length: int = 512
    num_envs: int = 8
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    learning_rate: float = 3e-4
    max_grad_norm: float = 0.5
    total_steps: int = 100_000

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        for name in ("clip_epsilon", "epochs_per_update", "minibatches", "rollout_length",
                     "num_envs", "value_coef", "learning_rate", "max_grad_norm", "total_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.entropy_coef < 0:
            raise ValueError("entropy_coef must be nonnegative")
        if (self.rollout_length * self.num_envs) % self.minibatches != 0:
            raise ValueError("rollout_length * num_envs must be divisible by minibatches")

    @property
    def batch_size(self) -> int:
        return self.rollout_length * self.num_envs


@dataclass(frozen=True)
class TrainMetrics:
    step: int
    episodic_return: float
    success_once: float
    success_at_end: float
    value_loss: float
    policy_loss: float
    approx_kl: float
    clip_fraction: float
    entropy: float
    explained_variance: float


@dataclass(frozen=True)
class EvalResult:
    success_once: float
    success_at_end: float
    mean_return: float


@dataclass(frozen=True)
class EvalPoint:
    step: int
    success_once: float
    success_at_end: float
    mean_return: float


@dataclass
class TrainResult:
    metrics: list[TrainMetrics]
    eval_points: list[EvalPoint]
    agent: "ActorCritic"

    def final_metrics(self) -> TrainMetrics:
        return self.metrics[-1]


def _layer_init(layer: nn.Linear, std: float = math.sqrt(2), bias: float = 0.0) -> nn.Linear:
    nn.init.orthogonal_(layer.weight, std)
    nn.init.constant_(layer.bias, bias)
    return layer


class ActorCritic(nn.Module):
    """Separate policy and value MLPs (2 hidden layers of 64 units)."""

    def __init__(self, obs_dim: int, act_dim: int, hidden: int = 64):
        super().__init__()
        self.actor_mean = nn.Sequential(
            _layer_init(nn.Linear(obs_dim, hidden)),
            nn.Tanh(),
            _layer_init(nn.Linear(hidden, hidden)),
            nn.Tanh(),
            _layer_init(nn.Linear(hidden, act_dim), std=0.01),
        )
        self.critic = nn.Sequential(
            _layer_init(nn.Linear(obs_dim, hidden)),
            nn.Tanh(),
            _layer_init(nn.Linear(hidden, hidden)),
            nn.Tanh(),
            _layer_init(nn.Linear(hidden, 1), std=1.0),
        )
        self.log_std = nn.Parameter(torch.zeros(act_dim))

    def value(self, obs: torch.Tensor) -> torch.Tensor:
        return self.critic(obs).squeeze(-1)

    def _dist(self, obs: torch.Tensor) -> torch.distributions.Normal:
        mean = self.actor_mean(obs)
        std = torch.exp(self.log_std).expand_as(mean)
        return torch.distributions.Normal(mean, std)

    def act(self, obs: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Sample actions; returns (action, log_prob, value)."""
        dist = self._dist(obs)
        action = dist.sample()
        return action, dist.log_prob(action).sum(-1), self.value(obs)

    def greedy(self, obs: torch.Tensor) -> torch.Tensor:
        return self.actor_mean(obs)

    def evaluate_actions(
        self, obs: torch.Tensor, actions: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(log_prob, entropy, value) of given actions under the current policy."""
        dist = self._dist(obs)
        return dist.log_prob(actions).sum(-1), dist.entropy().sum(-1), self.value(obs)


@dataclass
class Rollout:
    """Fixed-length on-policy batch of shape [T, N, ...]."""

    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    env_rewards: np.ndarray
    terminated: np.ndarray
    truncated: np.ndarray
    final_values: np.ndarray
    completed: list


def compute_gae(
    rollout: Rollout,
    next_value: np.ndarray,
    gamma: float,
    gae_lambda: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over a [T, N] rollout.

    Termination bootstraps zero; truncation bootstraps the value of the
    final observation (stored per step in rollout.final_values). Returns
    (advantages, returns) with returns = advantages + values.
    """
    rewards = rollout.rewards.astype(np.float64)
    values = rollout.values.astype(np.float64)
    done = rollout.terminated | rollout.truncated
    T, _ = rewards.shape
    advantages = np.zeros_like(rewards)
    last = np.zeros(rewards.shape[1], dtype=np.float64)
    for t in reversed(range(T)):
        next_values = next_value if t == T - 1 else values[t + 1]
        bootstrap = np.where(
            done[t],
            np.where(rollout.truncated[t], rollout.final_values[t], 0.0),
            next_values,
        )
        delta = rewards[t] + gamma * bootstrap - values[t]
        last = delta + gamma * gae_lambda * (~done[t]) * last
        advantages[t] = last
    return advantages, advantages + values


def clipped_surrogate_loss(
    agent: ActorCritic,
    obs: torch.Tensor,
    actions: torch.Tensor,
    old_log_probs: torch.Tensor,
    advantages: torch.Tensor,
    clip_epsilon: float,
) -> torch.Tensor:
    """PPO's pessimistic clipped policy objective (to be minimized)."""
    new_log_probs, _, _ = agent.evaluate_actions(obs, actions)
    ratio = torch.exp(new_log_probs - old_log_probs)
    unclipped = -advantages * ratio
    clipped = -advantages * torch.clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    return torch.max(unclipped, clipped).mean()


@dataclass(frozen=True)
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    approx_kl: float
    clip_fraction: float
    explained_variance: float


def _check_finite_grads(agent: ActorCritic, context: str) -> None:
    bad = [
        name for name, p in agent.named_parameters()
        if p.grad is not None and not torch.all(torch.isfinite(p.grad))
    ]
    if bad:
        agent.zero_grad(set_to_none=True)
        raise NonFiniteGradientError(f"non-finite gradients in {bad} during {context}; update aborted")


def ppo_update(
    agent: ActorCritic,
    optimizer: torch.optim.Optimizer,
    batch: dict[str, torch.Tensor],
    cfg: PpoConfig,
) -> UpdateStats:
    """Run epochs_per_update x minibatches optimization passes on one batch.

    The batch must come from the current policy (stored log_probs and
    values). Advantages are normalized per minibatch. Diagnostics are
    averaged over all minibatch passes; explained variance is computed
    once from the stored values against the returns.
    """
    batch_size = batch["obs"].shape[0]
    minibatch_size = batch_size // cfg.minibatches
    pg_losses, v_losses, entropies, kls, clip_fracs = [], [], [], [], []

    for _ in range(cfg.epochs_per_update):
        perm = torch.randperm(batch_size)
        for start in range(0, batch_size, minibatch_size):
            idx = perm[start : start + minibatch_size]
            obs = batch["obs"][idx]
            actions = batch["actions"][idx]
            old_logp = batch["log_probs"][idx]
            adv = batch["advantages"][idx]
            returns = batch["returns"][idx]

            new_logp, entropy, value = agent.evaluate_actions(obs, actions)
            log_ratio = new_logp - old_logp
            ratio = torch.exp(log_ratio)

            with torch.no_grad():
                kls.append((-log_ratio).mean().item())
                clip_fracs.append(
                    ((ratio - 1.0).abs() > cfg.clip_epsilon).float().mean().item()
                )

            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
            unclipped = -adv * ratio
            clipped = -adv * torch.clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
            pg_loss = torch.max(unclipped, clipped).mean()
            v_loss = 0.5 * ((value - returns) ** 2).mean()
            entropy_mean = entropy.mean()
            loss = pg_loss - cfg.entropy_coef * entropy_mean + cfg.value_coef * v_loss

            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            _check_finite_grads(agent, f"loss={loss.item():.6g}")
            nn.utils.clip_grad_norm_(agent.parameters(), cfg.max_grad_norm)
            optimizer.step()

            pg_losses.append(pg_loss.item())
            v_losses.append(v_loss.item())
            entropies.append(entropy_mean.item())

    with torch.no_grad():
        returns_np = batch["returns"].double().numpy()
        values_np = batch["values"].double().numpy()
        var_returns = np.var(returns_np)
        if var_returns == 0.0:
            explained_var = float("nan")
        else:
            explained_var = float(1.0 - np.var(returns_np - values_np) / var_returns)

    return UpdateStats(
        policy_loss=float(np.mean(pg_losses)),
        value_loss=float(np.mean(v_losses)),
        entropy=float(np.mean(entropies)),
        approx_kl=float(np.mean(kls)),
        clip_fraction=float(np.mean(clip_fracs)),
        explained_variance=explained_var,
    )


def collect_rollout(venv: VectorEnv, agent: ActorCritic, obs: np.ndarray,
                    cfg: PpoConfig) -> tuple[Rollout, np.ndarray]:
    """Advance the vector env rollout_length steps under the current policy.

    Returns the rollout and the observation that follows it (for value
    bootstrapping). Actions are clipped to [-1, 1] before stepping; the
    unclipped samples are stored so the log-probs stay exact.
    """
    T, N = cfg.rollout_length, venv.num_envs
    dim = venv.envs[0].cfg.embedding_dim
    act_dim = 2
    rollout = Rollout(
        obs=np.zeros((T, N, dim), dtype=np.float64),
        actions=np.zeros((T, N, act_dim), dtype=np.float64),
        log_probs=np.zeros((T, N), dtype=np.float64),
        values=np.zeros((T, N), dtype=np.float64),
        rewards=np.zeros((T, N), dtype=np.float64),
        env_rewards=np.zeros((T, N), dtype=np.float64),
        terminated=np.zeros((T, N), dtype=bool),
        truncated=np.zeros((T, N), dtype=bool),
        final_values=np.zeros((T, N), dtype=np.float64),
        completed=[],
    )
    for t in range(T):
        rollout.obs[t] = obs
        with torch.no_grad():
            obs_t = torch.as_tensor(obs, dtype=torch.float32)
            action, log_prob, value = agent.act(obs_t)
        actions_np = action.numpy().astype(np.float64)
        rollout.actions[t] = actions_np
        rollout.log_probs[t] = log_prob.numpy()
        rollout.values[t] = value.numpy()

        # tanh keeps executed actions inside [-1, 1] without the gradient
        # dead-zone of hard clipping (greedy eval applies the same squash)
        step = venv.step(np.tanh(actions_np))
        rollout.rewards[t] = step.reward
        rollout.env_rewards[t] = step.env_reward
        rollout.terminated[t] = step.terminated
        rollout.truncated[t] = step.truncated
        rollout.completed.extend(step.completed)
        if np.any(step.truncated):
            with torch.no_grad():
                fv = agent.value(torch.as_tensor(step.final_obs, dtype=torch.float32)).numpy()
            rollout.final_values[t] = np.where(step.truncated, fv, 0.0)
        obs = step.obs
    return rollout, obs


def make_env(env_cfg: SyntheticEnvConfig, reward_cfg: RewardConfig | None,
             instance: int = 0, potential_cfg: PotentialConfig | None = None,
             combine: str = "add") -> SyntheticReachEnv | ShapedEnv:
    """Build one (optionally shaped) reach env; reward_cfg None means sparse."""
    env = SyntheticReachEnv(env_cfg, instance=instance)
    if reward_cfg is None:
        return env
    return ShapedEnv(env, reward_cfg, env.goal_embedding(),
                     potential_cfg=potential_cfg, combine=combine)


def evaluate(agent: ActorCritic, env: SyntheticReachEnv,
             seeds: Sequence[int]) -> EvalResult:
    """Greedy-policy evaluation over one episode per seed.

    success_once is the fraction of episodes that reach the goal at any
    step; success_at_end the fraction whose final step is a success state.
    Deterministic for fixed seeds.
    """
    if len(seeds) < 1:
        raise ValueError("need at least one evaluation seed")
    once = 0
    at_end = 0
    returns = []
    for seed in seeds:
        obs = env.reset(seed=int(seed))
        done = False
        success_any = False
        last_success = False
        ep_return = 0.0
        while not done:
            with torch.no_grad():
                action = agent.greedy(torch.as_tensor(obs, dtype=torch.float32))
            obs, r, done, success = env.step(np.tanh(action.numpy()))
            ep_return += r
            success_any |= success
            last_success = success
        once += success_any
        at_end += last_success
        returns.append(ep_return)
    n = len(seeds)
    return EvalResult(
        success_once=once / n,
        success_at_end=at_end / n,
        mean_return=float(np.mean(returns)),
    )


def train(
    ppo_cfg: PpoConfig,
    env_cfg: SyntheticEnvConfig,
    reward_cfg: RewardConfig | None = None,
    *,
    seed: int = 0,
    potential_cfg: PotentialConfig | None = None,
    combine: str = "add",
    log_path: str | Path | None = None,
    eval_points: int = 0,
    eval_at: Sequence[int] | None = None,
    eval_episodes: int = 20,
    eval_seed_base: int = 1_000_000,
) -> TrainResult:
    """Run PPO and return per-update metrics (optionally written as CSV).

    reward_cfg None trains on the sparse env reward alone; otherwise each
    env instance carries its own shaping tracker. The goal position is
    part of the task (env_cfg.seed); `seed` varies network init, action
    sampling, and episode randomness. Single-threaded torch keeps runs
    with equal seeds identical.
    """
    torch.set_num_threads(1)
    torch.manual_seed(seed)

    venv = VectorEnv([
        (lambda i=i: make_env(env_cfg, reward_cfg, instance=seed * 10_007 + i,
                              potential_cfg=potential_cfg, combine=combine))
        for i in range(ppo_cfg.num_envs)
    ])
    agent = ActorCritic(env_cfg.embedding_dim, 2)
    optimizer = torch.optim.Adam(agent.parameters(), lr=ppo_cfg.learning_rate, eps=1e-5)

    num_updates = max(1, ppo_cfg.total_steps // ppo_cfg.batch_size)
    eval_updates: set[int] = set()
    if eval_at is not None:
        eval_updates = {u for u in eval_at if u > 0}
    elif eval_points > 0:
        eval_updates = {round(k * num_updates / eval_points) for k in range(1, eval_points + 1)}
        eval_updates.add(num_updates)

    metrics: list[TrainMetrics] = []
    eval_log: list[EvalPoint] = []

    def run_eval(step: int) -> None:
        eval_env = SyntheticReachEnv(env_cfg, instance=777_777)
        res = evaluate(agent, eval_env, range(eval_seed_base, eval_seed_base + eval_episodes))
        eval_log.append(EvalPoint(step=step, success_once=res.success_once,
                                  success_at_end=res.success_at_end,
                                  mean_return=res.mean_return))

    if (eval_at is not None and 0 in eval_at) or (eval_at is None and eval_points > 0):
        run_eval(0)

    obs = venv.reset()
    last_return, last_once, last_at_end = 0.0, 0.0, 0.0
    for update in range(1, num_updates + 1):
        rollout, obs = collect_rollout(venv, agent, obs, ppo_cfg)
        with torch.no_grad():
            next_value = agent.value(torch.as_tensor(obs, dtype=torch.float32)).numpy()
        advantages, returns = compute_gae(rollout, next_value,
                                          ppo_cfg.gamma, ppo_cfg.gae_lambda)
        T, N = ppo_cfg.rollout_length, ppo_cfg.num_envs
        batch = {
            "obs": torch.as_tensor(rollout.obs.reshape(T * N, -1), dtype=torch.float32),
            "actions": torch.as_tensor(rollout.actions.reshape(T * N, -1), dtype=torch.float32),
            "log_probs": torch.as_tensor(rollout.log_probs.reshape(-1), dtype=torch.float32),
            "advantages": torch.as_tensor(advantages.reshape(-1), dtype=torch.float32),
            "returns": torch.as_tensor(returns.reshape(-1), dtype=torch.float32),
            "values": torch.as_tensor(rollout.values.reshape(-1), dtype=torch.float32),
        }
        stats = ppo_update(agent, optimizer, batch, ppo_cfg)

        if rollout.completed:
            last_return = float(np.mean([ep.shaped_return for ep in rollout.completed]))
            last_once = float(np.mean([ep.success_once for ep in rollout.completed]))
            last_at_end = float(np.mean([ep.success_at_end for ep in rollout.completed]))
        step = update * ppo_cfg.batch_size
        metrics.append(TrainMetrics(
            step=step,
            episodic_return=last_return,
            success_once=last_once,
            success_at_end=last_at_end,
            value_loss=stats.value_loss,
            policy_loss=stats.policy_loss,
            approx_kl=stats.approx_kl,
            clip_fraction=stats.clip_fraction,
            entropy=stats.entropy,
            explained_variance=stats.explained_variance,
        ))
        if update in eval_updates:
            run_eval(step)

    if log_path is not None:
        write_training_log(metrics, log_path)
    return TrainResult(metrics=metrics, eval_points=eval_log, agent=agent)


def ablation_run(
    param: str,
    values: Sequence[float],
    *,
    ppo_cfg: PpoConfig,
    env_cfg: SyntheticEnvConfig,
    reward_cfg: RewardConfig,
    seeds: Sequence[int] = (0,),
    potential_cfg: PotentialConfig | None = None,
    combine: str = "add",
    eval_points: int = 0,
    eval_at: Sequence[int] | None = None,
    eval_episodes: int = 20,
) -> dict[float, list[TrainResult]]:
    """Sweep one shaping parameter, all else (including seeds) held fixed.

    param is 'beta' or 'interval'; returns one list of per-seed results
    per swept value.
    """
    if param not in ("beta", "interval"):
        raise ValueError(f"param must be 'beta' or 'interval', got {param!r}")
    if not values:
        raise ValueError("values must be nonempty")
    results: dict[float, list[TrainResult]] = {}
    for value in values:
        if param == "beta":
            cfg_v = replace(reward_cfg, beta=float(value))
        else:
            cfg_v = replace(reward_cfg, invocation_interval=int(value))
        results[float(value)] = [
            train(ppo_cfg, env_cfg, cfg_v, seed=int(s), potential_cfg=potential_cfg,
                  combine=combine, eval_points=eval_points, eval_at=eval_at,
                  eval_episodes=eval_episodes)
            for s in seeds
        ]
    return results


def write_training_log(rows: Sequence[TrainMetrics], path: str | Path) -> None:
    """Write one CSV row per update with the exact LOG_COLUMNS header."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(LOG_COLUMNS)
        for row in rows:
            writer.writerow([
                row.step,
                repr(row.episodic_return),
                repr(row.success_once),
                repr(row.success_at_end),
                repr(row.value_loss),
                repr(row.policy_loss),
                repr(row.approx_kl),
                repr(row.clip_fraction),
                repr(row.entropy),
                repr(row.explained_variance),
            ])


def read_training_log(path: str | Path) -> list[TrainMetrics]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader))
        if header != LOG_COLUMNS:
            raise ValueError(f"unexpected log header {header}")
        rows = []
        for raw in reader:
            rows.append(TrainMetrics(
                step=int(raw[0]),
                episodic_return=float(raw[1]),
                success_once=float(raw[2]),
                success_at_end=float(raw[3]),
                value_loss=float(raw[4]),
                policy_loss=float(raw[5]),
                approx_kl=float(raw[6]),
                clip_fraction=float(raw[7]),
                entropy=float(raw[8]),
                explained_variance=float(raw[9]),
            ))
    return rows
