"""Sidecar configuration: model selection, limits, and auth.

Everything comes from a JSON config file (path via --config or the
MODEL_SIDECAR_CONFIG env var); only the auth token itself lives in the
environment (SIDECAR_AUTH_TOKEN). Defaults are CPU-trivial hash models so
the service runs anywhere.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

AUTH_TOKEN_ENV = "SIDECAR_AUTH_TOKEN"

DEFAULT_EMBED_MODEL = "hashed-trigram-v1"
DEFAULT_FUNCTION_MODEL = "hashed-text-v1"
DEFAULT_GENERATE_MODEL = "echo"


@dataclass
class SidecarConfig:
    embed_model: str = DEFAULT_EMBED_MODEL
    function_embed_model: str = DEFAULT_FUNCTION_MODEL
    generate_model: str = DEFAULT_GENERATE_MODEL
    embedding_dim: int = 256
    max_batch: int = 256
    generate_timeout_seconds: float = 30.0
    host: str = "127.0.0.1"
    port: int = 8601

    @classmethod
    def load(cls, path: str | Path | None = None) -> "SidecarConfig":
        path = path or os.environ.get("MODEL_SIDECAR_CONFIG")
        if not path:
            return cls()
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown sidecar config keys: {', '.join(sorted(unknown))}")
        return cls(**doc)

    def auth_token(self) -> str | None:
        return os.environ.get(AUTH_TOKEN_ENV) or None
