import base64
import io
import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient
from PIL import Image

from embedservice import ServiceConfig, create_app

REPO = Path(__file__).resolve().parents[2]
FIXTURES = REPO / "protocol" / "fixtures" / "embed_v1.json"

MODEL_TAG = "hash-512"


@pytest.fixture(scope="session")
def client() -> TestClient:
    return TestClient(create_app(ServiceConfig(model_tag=MODEL_TAG)))


@pytest.fixture(scope="session")
def fixtures() -> dict:
    return json.loads(FIXTURES.read_text())


@pytest.fixture(scope="session")
def png_b64() -> str:
    img = Image.new("RGB", (8, 8))
    for x in range(8):
        for y in range(8):
            img.putpixel((x, y), (x * 30, y * 30, 128))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")
