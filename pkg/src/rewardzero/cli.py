"""Command-line interface.

Subcommands:

    rewardzero bench        score a manifest's potentials (cache or HTTP provider)
    rewardzero embed-cache  populate an embedding cache from the HTTP service
    rewardzero train        PPO on the synthetic reach env, sparse or shaped
    rewardzero ablate       sweep beta or the invocation interval

Exit codes: 0 success, 1 validation/usage, 2 provider/IO, 3 numeric failure.
Every subcommand is deterministic given its flags, input files, and seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import bench as bench_mod
from .cache import EmbeddingCache, EmbeddingCacheEntry, EmbeddingKind
from .envs import SyntheticEnvConfig, shaping_study_env_config
from .errors import (
    CacheIoError,
    DimensionInconsistencyError,
    DuplicateIdError,
    ManifestParseError,
    ManifestValidationError,
    NonFiniteGradientError,
    ProviderUnavailableError,
    RewardZeroError,
    UnknownIdError,
)
from .manifest import load_manifest, unique_frame_refs, unique_goal_texts
from .ppo import PpoConfig, ablation_run, train, write_training_log
from .providers import DEFAULT_MODEL_TAG, CacheProvider, HttpProvider
from .rewards import (
    ActivationConfig,
    BaseRewardMode,
    PotentialConfig,
    PotentialMode,
    RewardConfig,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PROVIDER_IO = 2
EXIT_NUMERIC = 3

ENDPOINT_ENV_VAR = "REWARD_ZERO_ENDPOINT"

_PROVIDER_IO_ERRORS = (
    ProviderUnavailableError,
    UnknownIdError,
    CacheIoError,
    DuplicateIdError,
    DimensionInconsistencyError,
    OSError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the contract wants 1
    def error(self, message: str):
        raise UsageError(message)


def _base_mode(name: str) -> BaseRewardMode:
    return BaseRewardMode.POTENTIAL_VALUE if name == "value" else BaseRewardMode.POTENTIAL_DIFFERENCE


def _resolve_endpoint(value: str | None) -> str:
    endpoint = value or os.environ.get(ENDPOINT_ENV_VAR)
    if not endpoint:
        raise UsageError(
            f"no endpoint given: pass --endpoint or set {ENDPOINT_ENV_VAR}"
        )
    return endpoint


def _build_parser() -> _Parser:
    parser = _Parser(prog="rewardzero", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="score completion-sense metrics over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--provider", choices=["cache", "http"], default="cache")
    p.add_argument("--cache", help="embedding cache file (provider=cache)")
    p.add_argument("--endpoint", help=f"service URL (provider=http; falls back to ${ENDPOINT_ENV_VAR})")
    p.add_argument("--model_tag", "--model-tag", dest="model_tag", default=None)
    p.add_argument("--mode", choices=["clip", "caption"], default="clip")
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--beta", type=float, default=0.0,
                   help="bonus weight for transition rewards (0 scores the raw potential)")
    p.add_argument("--tau", type=float, default=0.7)
    p.add_argument("--k", type=float, default=10.0)
    p.add_argument("--base_mode", "--base-mode", dest="base_mode",
                   choices=["value", "difference"], default="difference")
    p.add_argument("--label", default=None, help="row label in rendered reports")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--format", choices=["table", "json", "md"], default="table")

    p = sub.add_parser("embed-cache", help="embed manifest texts and frames into a cache file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--endpoint", help=f"service URL (falls back to ${ENDPOINT_ENV_VAR})")
    p.add_argument("--model_tag", "--model-tag", dest="model_tag", default=DEFAULT_MODEL_TAG)
    p.add_argument("--out", required=True, help="cache file to create or extend")
    p.add_argument("--batch_size", "--batch-size", dest="batch_size", type=int, default=16)

    def add_env_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--max_steps", "--max-steps", dest="max_steps", type=int, default=200)
        p.add_argument("--action_scale", "--action-scale", dest="action_scale",
                       type=float, default=0.05)
        p.add_argument("--obs_noise_std", "--obs-noise-std", dest="obs_noise_std",
                       type=float, default=0.01)
        p.add_argument("--min_start_distance", "--min-start-distance", dest="min_start_distance",
                       type=float, default=0.0)
        p.add_argument("--study_env", "--study-env", dest="study_env", action="store_true",
                       help="use the shaped-vs-sparse study configuration "
                            "(slow dynamics, far starts, noisier observations)")

    p = sub.add_parser("train", help="PPO on the synthetic reach env")
    p.add_argument("--env", choices=["reach"], default="reach")
    p.add_argument("--reward", choices=["sparse", "zero"], default="zero")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--interval", type=int, default=25)
    p.add_argument("--tau", type=float, default=0.7)
    p.add_argument("--k", type=float, default=10.0)
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--base_mode", "--base-mode", dest="base_mode",
                   choices=["value", "difference"], default="difference")
    p.add_argument("--replace_env_reward", "--replace-env-reward", dest="replace_env_reward",
                   action="store_true",
                   help="shaped reward replaces the sparse env reward instead of adding to it")
    p.add_argument("--total_steps", "--total-steps", dest="total_steps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--env_seed", "--env-seed", dest="env_seed", type=int, default=0,
                   help="task seed fixing the goal position")
    p.add_argument("--log", required=True, help="training log CSV path")
    add_env_flags(p)

    p = sub.add_parser("ablate", help="sweep beta or the invocation interval")
    p.add_argument("--param", choices=["beta", "interval"], required=True)
    p.add_argument("--values", required=True, help="comma-separated values, e.g. 0.05,0.1,0.2")
    p.add_argument("--reward", choices=["zero"], default="zero")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--interval", type=int, default=25)
    p.add_argument("--tau", type=float, default=0.7)
    p.add_argument("--k", type=float, default=10.0)
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--base_mode", "--base-mode", dest="base_mode",
                   choices=["value", "difference"], default="difference")
    p.add_argument("--total_steps", "--total-steps", dest="total_steps", type=int, default=100_000)
    p.add_argument("--seeds", default="0", help="comma-separated training seeds shared by all values")
    p.add_argument("--env_seed", "--env-seed", dest="env_seed", type=int, default=0)
    p.add_argument("--log", required=True, help="base log path; one file per value (and seed)")
    add_env_flags(p)

    return parser


def _env_from_args(args: argparse.Namespace) -> SyntheticEnvConfig:
    if args.study_env:
        return shaping_study_env_config(seed=args.env_seed)
    return SyntheticEnvConfig(
        max_steps=args.max_steps,
        action_scale=args.action_scale,
        obs_noise_std=args.obs_noise_std,
        min_start_distance=args.min_start_distance,
        seed=args.env_seed,
    )


def _cmd_bench(args: argparse.Namespace) -> int:
    episodes = load_manifest(args.manifest)
    if args.provider == "cache":
        if not args.cache:
            raise UsageError("--cache is required with --provider cache")
        provider = CacheProvider(EmbeddingCache.load(args.cache), model_tag=args.model_tag)
    else:
        endpoint = _resolve_endpoint(args.endpoint)
        provider = HttpProvider(endpoint, model_tag=args.model_tag or DEFAULT_MODEL_TAG)
        provider.healthz()
    mode = PotentialMode.CAPTION_DIRECT if args.mode == "caption" else PotentialMode.CLIP_DIRECT
    cfg = bench_mod.BenchConfig(
        epsilon=args.epsilon,
        potential=PotentialConfig(alpha=args.alpha, mode=mode),
        reward=RewardConfig(
            activation=ActivationConfig(tau=args.tau, k=args.k),
            beta=args.beta,
            base_mode=_base_mode(args.base_mode),
        ),
    )
    report = bench_mod.run_benchmark(episodes, provider, cfg, label=args.label or "")
    if args.out:
        Path(args.out).write_text(bench_mod.report_to_json(report), encoding="utf-8")
    sys.stdout.write(bench_mod.render_report(report, args.format))
    return EXIT_OK


def _cmd_embed_cache(args: argparse.Namespace) -> int:
    episodes = load_manifest(args.manifest)
    endpoint = _resolve_endpoint(args.endpoint)
    provider = HttpProvider(endpoint, model_tag=args.model_tag)
    provider.healthz()

    out = Path(args.out)
    cache = EmbeddingCache.load(out) if out.exists() else EmbeddingCache()

    texts = [t for t in unique_goal_texts(episodes)
             if not cache.has(t, EmbeddingKind.TEXT, args.model_tag)]
    refs = [r for r in unique_frame_refs(episodes)
            if not cache.has(r, EmbeddingKind.IMAGE, args.model_tag)]

    embedded = 0
    for batch_start in range(0, len(texts), args.batch_size):
        batch = texts[batch_start : batch_start + args.batch_size]
        for text, vec in zip(batch, provider.embed_text(batch)):
            cache.add(EmbeddingCacheEntry(id=text, kind=EmbeddingKind.TEXT,
                                          model_tag=args.model_tag, vector=vec))
            embedded += 1
    for batch_start in range(0, len(refs), args.batch_size):
        batch = refs[batch_start : batch_start + args.batch_size]
        for ref, vec in zip(batch, provider.embed_image(batch)):
            cache.add(EmbeddingCacheEntry(id=ref, kind=EmbeddingKind.IMAGE,
                                          model_tag=args.model_tag, vector=vec))
            embedded += 1
    cache.save(out)
    print(f"embedded {embedded} new entries; cache now holds {len(cache)} ({out})")
    return EXIT_OK


def _reward_from_args(args: argparse.Namespace) -> RewardConfig:
    return RewardConfig(
        activation=ActivationConfig(tau=args.tau, k=args.k),
        beta=args.beta,
        base_mode=_base_mode(args.base_mode),
        invocation_interval=args.interval,
    )


def _cmd_train(args: argparse.Namespace) -> int:
    reward_cfg = None if args.reward == "sparse" else _reward_from_args(args)
    env_cfg = _env_from_args(args)
    ppo_cfg = PpoConfig(total_steps=args.total_steps)
    combine = "replace" if args.replace_env_reward else "add"
    potential_cfg = PotentialConfig(alpha=args.alpha)
    train(ppo_cfg, env_cfg, reward_cfg, seed=args.seed, potential_cfg=potential_cfg,
          combine=combine, log_path=args.log)
    print(f"wrote training log {args.log}")
    return EXIT_OK


def _cmd_ablate(args: argparse.Namespace) -> int:
    raw_values = [v for v in args.values.split(",") if v.strip()]
    if not raw_values:
        raise UsageError("--values must list at least one value")
    try:
        if args.param == "interval":
            values = [int(v) for v in raw_values]
        else:
            values = [float(v) for v in raw_values]
    except ValueError as exc:
        raise UsageError(f"bad --values entry: {exc}") from exc
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise UsageError("--seeds must list at least one seed")

    env_cfg = _env_from_args(args)
    ppo_cfg = PpoConfig(total_steps=args.total_steps)
    reward_cfg = _reward_from_args(args)
    results = ablation_run(
        args.param, values,
        ppo_cfg=ppo_cfg, env_cfg=env_cfg, reward_cfg=reward_cfg,
        seeds=seeds, potential_cfg=PotentialConfig(alpha=args.alpha),
    )

    base = Path(args.log)
    for value, runs in results.items():
        shown = int(value) if args.param == "interval" else value
        for seed, result in zip(seeds, runs):
            suffix = f"_{args.param}-{shown:g}" + (f"_s{seed}" if len(seeds) > 1 else "")
            path = base.with_name(base.stem + suffix + (base.suffix or ".csv"))
            write_training_log(result.metrics, path)
            print(f"wrote {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "embed-cache":
            return _cmd_embed_cache(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "ablate":
            return _cmd_ablate(args)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, ManifestParseError, ManifestValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _PROVIDER_IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER_IO
    except (NonFiniteGradientError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RewardZeroError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
