"""Run the service:  python -m embedservice --model_tag hash-512 --port 8080"""

import argparse

import uvicorn

from .app import create_app
from .config import DEFAULT_MODEL_TAG, ServiceConfig


def main() -> None:
    parser = argparse.ArgumentParser(prog="embedservice")
    parser.add_argument("--model_tag", "--model-tag", dest="model_tag",
                        default=DEFAULT_MODEL_TAG)
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--device", choices=["cpu", "accelerator"], default="cpu")
    parser.add_argument("--max_batch", "--max-batch", dest="max_batch", type=int, default=16)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args()

    config = ServiceConfig(model_tag=args.model_tag, port=args.port,
                           device=args.device, max_batch=args.max_batch)
    uvicorn.run(create_app(config), host=args.host, port=config.port)


if __name__ == "__main__":
    main()
