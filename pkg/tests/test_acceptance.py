"""Acceptance suite.

One test per acceptance criterion, each printing a [PASS] line (run with
-s to see them). The training-based criteria use the shaped-vs-sparse
study configuration of the synthetic reach env (slow dynamics, far
starts, noisier observations) with the task goal fixed by env seed 0,
training seeds {1, 2, 3}, and a 22-update budget of 90,112 env steps
(well under the 500k cap); greedy-evaluation checkpoints sit at updates
{0, 14, 18, 22} with 20 shared evaluation episodes.
"""

import base64
import copy
import json
import subprocess
import sys
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest
import torch

from rewardzero import (
    ActorCritic,
    BaseRewardMode,
    BenchConfig,
    CacheProvider,
    EmbeddingCache,
    HttpProvider,
    PpoConfig,
    RewardConfig,
    ShapedEnv,
    SyntheticEnvConfig,
    SyntheticReachEnv,
    activation,
    clip_potential,
    completion_reward,
    cosine_similarity,
    forward_transition_accuracy,
    jump_detection,
    load_manifest,
    monotonicity,
    run_benchmark,
    spearman,
)
from rewardzero.envs import shaping_study_env_config
from rewardzero.ppo import Rollout, ablation_run, clipped_surrogate_loss, compute_gae, train
from rewardzero.rewards import ActivationConfig, EmbeddingVector, PotentialConfig

from test_bench import spearman_oracle, transition_reward_oracle
from test_gae_ppo import gae_oracle, make_rollout

mpmath.mp.dps = 50

REPO = Path(__file__).resolve().parents[1]

TRAIN_SEEDS = (1, 2, 3)
NUM_UPDATES = 22
CHECKPOINT_UPDATES = (0, 14, 18, 22)
EVAL_EPISODES = 20


def report(name: str, runtime: float | None = None, budget: float | None = None):
    note = ""
    if runtime is not None:
        note = f" ({runtime:.2f}s"
        if budget is not None:
            assert runtime < budget, f"{name}: {runtime:.1f}s exceeds {budget}s budget"
            note += f" < {budget:g}s"
        note += ")"
    print(f"[PASS] {name}{note}")


# -- criterion: formula suite --------------------------------------------------

def test_formula_suite():
    t0 = time.perf_counter()

    def sig(phi, tau, k):
        return 1 / (1 + mpmath.e ** (-mpmath.mpf(k) * (mpmath.mpf(phi) - mpmath.mpf(tau))))

    # cosine of (1,1) with (1,0)
    got = cosine_similarity(EmbeddingVector([1, 1]), EmbeddingVector([1, 0]))
    assert abs(got - float(mpmath.sqrt(2) / 2)) <= 1e-5

    # penalized potential, hand-constructed similarities
    state = EmbeddingVector([1.0, 0.0])
    goal = EmbeddingVector([0.5, float(mpmath.sqrt(1 - mpmath.mpf("0.25")))])
    base = EmbeddingVector([0.9, float(mpmath.sqrt(1 - mpmath.mpf("0.81")))])
    cfg_pot = PotentialConfig(alpha=0.7)
    assert abs(clip_potential(state, goal, base, cfg_pot) - 0.08) <= 1e-9
    goal2 = EmbeddingVector([0.2, float(mpmath.sqrt(1 - mpmath.mpf("0.04")))])
    assert abs(clip_potential(state, goal2, state, cfg_pot) - (-0.16)) <= 1e-9

    # sigmoid gate values
    act = ActivationConfig(tau=0.7, k=10.0)
    assert abs(activation(0.8, act) - float(sig(0.8, 0.7, 10))) <= 1e-5
    assert abs(activation(0.0, act) - float(sig(0.0, 0.7, 10))) <= 1e-6
    for tau in (-0.3, 0.0, 0.7):
        assert abs(activation(tau, ActivationConfig(tau=tau, k=10.0)) - 0.5) <= 1e-12

    # full reward, difference base
    cfg = RewardConfig(activation=act, beta=0.5, base_mode=BaseRewardMode.POTENTIAL_DIFFERENCE)
    total = completion_reward(0.8, 0.6, cfg).total
    expected = mpmath.mpf("0.2") + mpmath.mpf("0.5") * sig(0.8, 0.7, 10) * mpmath.mpf("1.2")
    assert abs(total - float(expected)) <= 1e-4
    assert abs(total - float(expected)) <= 1e-9  # exceeds the stated tolerance

    stationary = completion_reward(0.9, 0.9, cfg).total
    expected = mpmath.mpf("0.5") * sig(0.9, 0.7, 10)
    assert abs(stationary - float(expected)) <= 1e-4

    assert completion_reward(0.31, -0.4, RewardConfig(activation=act, beta=0.0)).total == \
        pytest.approx(0.71, abs=1e-12)

    report("formula suite: worked examples match the high-precision oracle",
           time.perf_counter() - t0, budget=1.0)


# -- criterion: metric oracle suite ---------------------------------------------

def test_metric_oracle_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)

    for _ in range(1000):
        n = int(rng.integers(2, 7))
        completions = np.sort(rng.choice(np.arange(0, 101), size=n, replace=False))
        potentials = rng.uniform(-1, 1, size=n)
        if rng.random() < 0.25 and n >= 3:
            potentials[1] = potentials[0]
        got = spearman(completions.tolist(), potentials.tolist())
        assert abs(got - spearman_oracle(completions, potentials)) <= 1e-9

    for _ in range(1000):
        n = int(rng.integers(2, 9))
        pots = rng.uniform(-1, 1, size=n).tolist()
        beta = float(rng.choice([0.0, 0.1, 0.5]))
        cfg = BenchConfig(reward=RewardConfig(beta=beta,
                                              base_mode=BaseRewardMode.POTENTIAL_DIFFERENCE))
        hits, total = forward_transition_accuracy(pots, cfg)
        want_hits = sum(1 for a, b in zip(pots, pots[1:])
                        if transition_reward_oracle(a, b, cfg) > cfg.epsilon)
        assert (hits, total) == (want_hits, n - 1)
        frac, full = monotonicity(pots)
        ups = sum(1 for a, b in zip(pots, pots[1:]) if b > a)
        assert frac == pytest.approx(ups / (n - 1), abs=1e-12)
        assert full == (ups == n - 1)
        assert jump_detection(pots[0], pots[-1], cfg) == \
            (transition_reward_oracle(pots[0], pots[-1], cfg) > cfg.epsilon)

    report("metric oracle suite: 1000-case agreement for rank correlation, "
           "transitions, monotonicity, jumps", time.perf_counter() - t0, budget=10.0)


# -- criterion: benchmark plumbing ----------------------------------------------

def test_benchmark_plumbing(synthetic_manifest, synthetic_manifest_reversed, synthetic_cache):
    provider = CacheProvider(EmbeddingCache.load(synthetic_cache))
    forward = run_benchmark(load_manifest(synthetic_manifest), provider, BenchConfig())
    assert forward.fta == (18, 18)
    assert forward.mono_episodes == (6, 6)
    assert forward.mean_spearman == 1.0

    reverse = run_benchmark(load_manifest(synthetic_manifest_reversed), provider, BenchConfig())
    assert reverse.fta == (0, 18)
    assert reverse.mean_spearman == -1.0

    report("benchmark plumbing: synthetic manifest scores 18/18, 6/6, rho 1.0; "
           "reversed scores 0/18, rho -1.0 (exact)")


# -- criterion: GAE and gradient checks -------------------------------------------

def test_gae_and_gradient_checks():
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    for _ in range(40):
        T = int(rng.integers(2, 17))
        N = int(rng.integers(1, 4))
        rollout = make_rollout(rng, T, N)
        next_value = rng.normal(0, 1, size=N)
        for gamma, lam in ((0.99, 0.95), (1.0, 1.0), (0.9, 0.0)):
            adv, _ = compute_gae(rollout, next_value, gamma, lam)
            assert np.allclose(adv, gae_oracle(rollout, next_value, gamma, lam), atol=1e-9)

    torch.manual_seed(42)
    frng = np.random.default_rng(42)
    agent = ActorCritic(4, 2, hidden=8).double()
    old_agent = copy.deepcopy(agent)
    with torch.no_grad():
        for p in old_agent.parameters():
            p.add_(0.05 * torch.randn_like(p))
    obs = torch.as_tensor(frng.normal(0, 1, size=(48, 4)), dtype=torch.float64)
    with torch.no_grad():
        actions, _, _ = old_agent.act(obs)
        old_logp, _, _ = old_agent.evaluate_actions(obs, actions)
    advantages = torch.as_tensor(frng.normal(0, 1, size=48), dtype=torch.float64)

    def loss_value():
        return clipped_surrogate_loss(agent, obs, actions, old_logp, advantages, 0.2)

    loss = loss_value()
    agent.zero_grad()
    loss.backward()
    h = 1e-6
    worst = 0.0
    for param in [agent.log_std] + list(agent.actor_mean.parameters()):
        flat, flat_grad = param.data.view(-1), param.grad.view(-1)
        for i in frng.choice(flat.numel(), size=min(8, flat.numel()), replace=False):
            orig = flat[i].item()
            flat[i] = orig + h
            up = loss_value().item()
            flat[i] = orig - h
            down = loss_value().item()
            flat[i] = orig
            fd = (up - down) / (2 * h)
            analytic = flat_grad[i].item()
            rel = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-6)
            worst = max(worst, rel)
    assert worst <= 1e-3

    report(f"GAE backward-recursion oracle (1e-9) and finite-difference gradient "
           f"check (worst rel err {worst:.2e})", time.perf_counter() - t0, budget=30.0)


# -- criterion: telescoping invariant ----------------------------------------------

def test_telescoping_invariant():
    cfg = RewardConfig(beta=0.0, base_mode=BaseRewardMode.POTENTIAL_DIFFERENCE,
                       invocation_interval=1)
    env = SyntheticReachEnv(SyntheticEnvConfig(seed=0, max_steps=60))
    shaped = ShapedEnv(env, cfg, env.goal_embedding())
    rng = np.random.default_rng(77)
    for episode in range(100):
        shaped.reset(seed=40_000 + episode)
        phi_first = shaped.last_breakdown.phi
        bonus_sum = 0.0
        done = False
        while not done:
            _, r, done, _ = shaped.step(rng.uniform(-1, 1, 2))
            bonus_sum += shaped.last_breakdown.total
        assert abs(bonus_sum - (shaped.last_breakdown.phi - phi_first)) <= 1e-9
    report("telescoping: per-episode bonus sum equals last-minus-first potential "
           "on 100 random episodes (1e-9)")


# -- criteria: shaping benefit and ablations ---------------------------------------

@pytest.fixture(scope="module")
def study_setup():
    env_cfg = shaping_study_env_config(seed=0)
    ppo_cfg = PpoConfig(total_steps=NUM_UPDATES * PpoConfig().batch_size)
    return env_cfg, ppo_cfg


@pytest.fixture(scope="module")
def ablation_results(study_setup):
    env_cfg, ppo_cfg = study_setup
    reward_cfg = RewardConfig(beta=0.1, invocation_interval=25)
    t0 = time.perf_counter()
    beta_sweep = ablation_run(
        "beta", [0.05, 0.1, 0.2],
        ppo_cfg=ppo_cfg, env_cfg=env_cfg, reward_cfg=reward_cfg,
        seeds=TRAIN_SEEDS, eval_at=CHECKPOINT_UPDATES, eval_episodes=EVAL_EPISODES,
    )
    interval_sweep = ablation_run(
        "interval", [50],
        ppo_cfg=ppo_cfg, env_cfg=env_cfg, reward_cfg=reward_cfg,
        seeds=TRAIN_SEEDS, eval_at=CHECKPOINT_UPDATES, eval_episodes=EVAL_EPISODES,
    )
    return beta_sweep, interval_sweep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sparse_results(study_setup):
    env_cfg, ppo_cfg = study_setup
    return [
        train(ppo_cfg, env_cfg, None, seed=s, eval_at=CHECKPOINT_UPDATES,
              eval_episodes=EVAL_EPISODES)
        for s in TRAIN_SEEDS
    ]


def checkpoint_means(results):
    by_step = {}
    for res in results:
        for point in res.eval_points:
            by_step.setdefault(point.step, []).append(point.success_once)
    return {step: float(np.mean(vals)) for step, vals in sorted(by_step.items())}


def test_shaping_benefit(ablation_results, sparse_results):
    t0 = time.perf_counter()
    beta_sweep, _, sweep_runtime = ablation_results
    shaped = beta_sweep[0.1]  # the default configuration: beta 0.1, interval 25

    shaped_curve = checkpoint_means(shaped)
    sparse_curve = checkpoint_means(sparse_results)
    assert set(shaped_curve) == set(sparse_curve)
    steps = sorted(shaped_curve)

    final_step = steps[-1]
    assert final_step <= 500_000
    shaped_final = shaped_curve[final_step]
    sparse_final = sparse_curve[final_step]
    assert shaped_final >= 0.9, f"shaped mean success_once {shaped_final} < 0.9"
    assert sparse_final <= 0.5, f"sparse mean success_once {sparse_final} > 0.5"
    for step in steps:
        assert shaped_curve[step] >= sparse_curve[step], (
            f"checkpoint {step}: shaped {shaped_curve[step]} < sparse {sparse_curve[step]}"
        )

    runtime = sweep_runtime + (time.perf_counter() - t0)
    assert runtime < 1800.0
    report(
        "shaping benefit: shaped mean success_once "
        + " -> ".join(f"{shaped_curve[s]:.2f}" for s in steps)
        + f" vs sparse {' -> '.join(f'{sparse_curve[s]:.2f}' for s in steps)}"
        + f" over steps {steps}",
        runtime, budget=1800.0,
    )


def test_ablation_harness(study_setup, ablation_results, tmp_path):
    env_cfg, ppo_cfg = study_setup
    beta_sweep, interval_sweep, _ = ablation_results

    # well-formed logs for every value and seed
    all_runs = {**{("beta", v): runs for v, runs in beta_sweep.items()},
                ("interval", 50.0): interval_sweep[50.0],
                ("interval", 25.0): beta_sweep[0.1]}  # interval 25 is the default config
    for key, runs in all_runs.items():
        assert len(runs) == len(TRAIN_SEEDS)
        for res in runs:
            assert len(res.metrics) == NUM_UPDATES
            for row in res.metrics:
                assert np.isfinite(row.value_loss)
                assert 0.0 <= row.clip_fraction <= 1.0
                assert 0.0 <= row.success_once <= 1.0

    # deterministic per seed: repeating one configuration reproduces its log
    reward_cfg = RewardConfig(beta=0.1, invocation_interval=50)
    repeat = train(ppo_cfg, env_cfg, reward_cfg, seed=TRAIN_SEEDS[0],
                   eval_at=CHECKPOINT_UPDATES, eval_episodes=EVAL_EPISODES)
    assert repeat.metrics == interval_sweep[50.0][0].metrics
    assert repeat.eval_points == interval_sweep[50.0][0].eval_points

    # ordering: the default configuration's mean final evaluation reward is
    # within a 5% band of every alternative
    def final_eval_mean(runs):
        return float(np.mean([res.eval_points[-1].mean_return for res in runs]))

    ours = final_eval_mean(beta_sweep[0.1])
    alternatives = {
        "beta=0.05": final_eval_mean(beta_sweep[0.05]),
        "beta=0.2": final_eval_mean(beta_sweep[0.2]),
        "interval=50": final_eval_mean(interval_sweep[50.0]),
    }
    for name, value in alternatives.items():
        assert ours >= value - 0.05, f"default config ({ours:.3f}) trails {name} ({value:.3f})"

    report("ablation harness: deterministic per-seed logs; default config final "
           f"eval reward {ours:.2f} vs " +
           ", ".join(f"{k} {v:.2f}" for k, v in alternatives.items()))


# -- criterion: end-to-end with cache only -------------------------------------------

def test_end_to_end_cache_only(tmp_path, synthetic_manifest, synthetic_cache):
    outputs = []
    for i in range(2):
        out = tmp_path / f"report{i}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "rewardzero.cli", "bench",
             "--manifest", str(synthetic_manifest),
             "--provider", "cache", "--cache", str(synthetic_cache),
             "--out", str(out)],
            capture_output=True, text=True, cwd=REPO,
        )
        assert proc.returncode == 0, proc.stderr
        assert "FTA" in proc.stdout
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["fta"] == [18, 18]
    report("end-to-end: bench over the file cache exits 0 with byte-stable JSON")


# -- criterion (secondary, client side): protocol fixtures against a stub ---------------

def test_client_passes_protocol_fixtures_against_stub(tmp_path, fixtures_path):
    from stub_service import StubEmbedService

    fixtures = json.loads(fixtures_path.read_text())
    replay = {
        (case["path"], json.dumps(case["request"], sort_keys=True)): json.dumps(case["response"])
        for case in fixtures["cases"]
    }
    model = fixtures["model"]
    dim = fixtures["healthz"]["dim"]

    with StubEmbedService(model_tag=model, dim=dim, replay=replay) as stub:
        provider = HttpProvider(stub.endpoint, model_tag=model)
        health = provider.healthz()
        assert health == fixtures["healthz"]

        for case in fixtures["cases"]:
            expected = np.asarray(case["response"]["embeddings"])
            if case["path"].endswith("text"):
                vectors = provider.embed_text(case["request"]["texts"])
            else:
                paths = []
                for i, b64 in enumerate(case["request"]["images_b64"]):
                    p = tmp_path / f"{case['name']}-{i}.png"
                    p.write_bytes(base64.b64decode(b64))
                    paths.append(str(p))
                vectors = provider.embed_image(paths)
            assert len(vectors) == expected.shape[0], case["name"]
            for got, want in zip(vectors, expected):
                assert abs(got.norm() - 1.0) <= 1e-5
                want_vec = EmbeddingVector(want)
                assert cosine_similarity(got, want_vec) >= 1.0 - 1e-6, case["name"]
                assert np.allclose(got.values, want / np.linalg.norm(want), atol=1e-6)

        repeated = next(c for c in fixtures["cases"] if c["name"] == "repeated-text")
        vecs = provider.embed_text(repeated["request"]["texts"])
        assert cosine_similarity(vecs[0], vecs[1]) >= 1.0 - 1e-6

    report("client conformance: HTTP provider passes the recorded protocol "
           "fixtures against a stub server")
