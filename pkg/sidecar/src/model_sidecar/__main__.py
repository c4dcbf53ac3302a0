"""Serve the sidecar: ``model-sidecar [--config cfg.json] [--host H] [--port P]``."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import SidecarConfig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="model-sidecar")
    parser.add_argument("--config", help="JSON config file (or MODEL_SIDECAR_CONFIG env var)")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    args = parser.parse_args(argv)

    config = SidecarConfig.load(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
