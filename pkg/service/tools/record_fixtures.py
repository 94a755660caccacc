"""Record the protocol conformance fixtures.

Runs the deterministic hash-512 encoder behind an in-process test client
and freezes exact request/response pairs into
protocol/fixtures/embed_v1.json at the repo root. Both the service tests
and the primary-side HTTP client tests replay this file.

Run from anywhere:  python3 service/tools/record_fixtures.py
"""

from __future__ import annotations

import base64
import io
import json
import sys
from pathlib import Path

from PIL import Image

SERVICE_ROOT = Path(__file__).resolve().parents[1]
REPO = SERVICE_ROOT.parent
sys.path.insert(0, str(SERVICE_ROOT / "src"))

from fastapi.testclient import TestClient  # noqa: E402

from embedservice import ServiceConfig, create_app  # noqa: E402

MODEL_TAG = "hash-512"


def png_bytes(painter) -> str:
    img = Image.new("RGB", (8, 8))
    for x in range(8):
        for y in range(8):
            img.putpixel((x, y), painter(x, y))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def main() -> None:
    client = TestClient(create_app(ServiceConfig(model_tag=MODEL_TAG)))

    gradient = png_bytes(lambda x, y: (32 * x, 32 * y, 16 * (x + y)))
    solid = png_bytes(lambda x, y: (200, 40, 90))

    requests = [
        ("single-text", "/v1/embed/text",
         {"texts": ["The cabinet drawer is fully open"], "model": MODEL_TAG}),
        ("text-batch", "/v1/embed/text",
         {"texts": ["The cabinet drawer is fully open",
                    "The cabinet drawer is closed",
                    "a"], "model": MODEL_TAG}),
        ("repeated-text", "/v1/embed/text",
         {"texts": ["same text twice", "same text twice"], "model": MODEL_TAG}),
        ("image-pair", "/v1/embed/image",
         {"images_b64": [gradient, solid], "model": MODEL_TAG}),
        ("image-repeat", "/v1/embed/image",
         {"images_b64": [gradient, gradient], "model": MODEL_TAG}),
    ]

    cases = []
    for name, path, body in requests:
        resp = client.post(path, json=body)
        assert resp.status_code == 200, (name, resp.status_code, resp.text[:200])
        cases.append({
            "name": name,
            "path": path,
            "request": body,
            "response": resp.json(),
        })

    health = client.get("/healthz")
    assert health.status_code == 200

    doc = {
        "protocol": "v1",
        "model": MODEL_TAG,
        "healthz": health.json(),
        "cases": cases,
    }
    out = REPO / "protocol" / "fixtures" / "embed_v1.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(cases)} cases)")


if __name__ == "__main__":
    main()
