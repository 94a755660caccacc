from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return REPO / "data"


@pytest.fixture(scope="session")
def synthetic_manifest(data_dir: Path) -> Path:
    return data_dir / "synthetic" / "manifest.json"


@pytest.fixture(scope="session")
def synthetic_manifest_reversed(data_dir: Path) -> Path:
    return data_dir / "synthetic" / "manifest_reversed.json"


@pytest.fixture(scope="session")
def synthetic_cache(data_dir: Path) -> Path:
    return data_dir / "synthetic" / "cache.jsonl"


@pytest.fixture(scope="session")
def benchmark_manifest(data_dir: Path) -> Path:
    return data_dir / "benchmark" / "manifest.json"


@pytest.fixture(scope="session")
def fixtures_path() -> Path:
    return REPO / "protocol" / "fixtures" / "embed_v1.json"
