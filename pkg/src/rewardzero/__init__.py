"""Embedding-similarity completion rewards, benchmark, and PPO harness."""

from .bench import (
    BenchConfig,
    BenchmarkReport,
    EpisodeResult,
    aggregate,
    episode_potentials,
    evaluate_episode,
    forward_transition_accuracy,
    jump_detection,
    monotonicity,
    render_report,
    report_from_json,
    report_to_json,
    run_benchmark,
    spearman,
)
from .cache import EmbeddingCache, EmbeddingCacheEntry, EmbeddingKind
from .envs import (
    EpisodeRecord,
    ShapedEnv,
    SyntheticEnvConfig,
    SyntheticReachEnv,
    VectorEnv,
    shaping_study_env_config,
)
from .errors import (
    CacheIoError,
    DimensionInconsistencyError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyResultsError,
    LengthMismatchError,
    ManifestParseError,
    ManifestValidationError,
    MissingPotentialError,
    NonFiniteGradientError,
    ProviderUnavailableError,
    RewardZeroError,
    StepAfterDoneError,
    TooFewFramesError,
    UnknownIdError,
    ZeroVectorError,
)
from .manifest import Episode, Keyframe, load_manifest, save_manifest
from .ppo import (
    ActorCritic,
    EvalResult,
    PpoConfig,
    TrainMetrics,
    TrainResult,
    ablation_run,
    compute_gae,
    evaluate,
    make_env,
    ppo_update,
    train,
)
from .providers import CacheProvider, HttpProvider
from .rewards import (
    ActivationConfig,
    BaseRewardMode,
    PotentialConfig,
    PotentialMode,
    RewardBreakdown,
    RewardConfig,
    RewardTracker,
    activation,
    caption_potential,
    clip_potential,
    completion_reward,
    cosine_similarity,
    progress_delta,
)
from .vectors import EmbeddingVector

__version__ = "0.1.0"
