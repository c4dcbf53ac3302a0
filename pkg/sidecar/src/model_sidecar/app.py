"""The HTTP surface: /health, /embed, /embed_function, /generate.

Responses preserve request order and report the serving model id. Failures
map to 400 (bad request), 401 (auth), 408 (generation budget exceeded),
and 503 (model not loaded).
"""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from pydantic import BaseModel, Field
from starlette.responses import JSONResponse

from .config import SidecarConfig
from .models import ModelLoadError, build_embedder, build_generator


class EmbedRequest(BaseModel):
    texts: list[str] = Field(min_length=1)


class GenerateMessage(BaseModel):
    role: str
    content: str


class GenerateRequest(BaseModel):
    messages: list[GenerateMessage] = Field(min_length=1)
    model: str | None = None
    temperature: float = 0.0
    seed: int | None = None
    max_tokens: int | None = None


def create_app(config: SidecarConfig | None = None) -> FastAPI:
    config = config or SidecarConfig.load()
    app = FastAPI(title="model-sidecar")

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse({"detail": exc.errors()}, status_code=400)

    models: dict[str, object] = {}
    load_errors: dict[str, str] = {}
    for slot, name in (
        ("embed", config.embed_model),
        ("embed_function", config.function_embed_model),
    ):
        try:
            models[slot] = build_embedder(name, config.embedding_dim)
        except ModelLoadError as exc:
            load_errors[slot] = str(exc)
    try:
        models["generate"] = build_generator(config.generate_model)
    except ModelLoadError as exc:
        load_errors["generate"] = str(exc)

    def require(slot: str):
        model = models.get(slot)
        if model is None:
            raise HTTPException(status_code=503, detail=f"{slot} model not loaded: {load_errors.get(slot)}")
        return model

    @app.middleware("http")
    async def check_auth(request: Request, call_next):
        token = config.auth_token()
        if token and request.url.path != "/health":
            supplied = request.headers.get("Authorization", "")
            if supplied != f"Bearer {token}":
                return JSONResponse({"detail": "missing or wrong bearer token"}, status_code=401)
        return await call_next(request)

    @app.get("/health")
    def health():
        return {
            "status": "ok" if not load_errors else "degraded",
            "models": {
                slot: getattr(models.get(slot), "model_id", None)
                for slot in ("embed", "embed_function", "generate")
            },
            "load_errors": load_errors,
        }

    def _embed_with(slot: str, texts: list[str]) -> dict:
        model = require(slot)
        if len(texts) > config.max_batch:
            raise HTTPException(
                status_code=400,
                detail=f"batch of {len(texts)} exceeds the limit of {config.max_batch}",
            )
        vectors = model.embed(texts)
        return {"model": model.model_id, "vectors": [v.tolist() for v in vectors]}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        return _embed_with("embed", request.texts)

    @app.post("/embed_function")
    def embed_function(request: EmbedRequest):
        return _embed_with("embed_function", request.texts)

    @app.post("/generate")
    def generate(request: GenerateRequest):
        model = require("generate")
        started = time.perf_counter()
        completion = model.generate(
            [m.model_dump() for m in request.messages],
            request.temperature,
            request.seed,
            request.max_tokens,
        )
        elapsed = time.perf_counter() - started
        if elapsed > config.generate_timeout_seconds:
            raise HTTPException(
                status_code=408,
                detail=f"generation took {elapsed:.2f}s, budget {config.generate_timeout_seconds}s",
            )
        prompt_tokens = sum(len(m.content.split()) for m in request.messages)
        completion_tokens = len(completion.split())
        return {
            "model": model.model_id,
            "choices": [
                {
                    "index": 0,
                    "message": {"role": "assistant", "content": completion},
                    "finish_reason": "stop",
                }
            ],
            "usage": {
                "prompt_tokens": prompt_tokens,
                "completion_tokens": completion_tokens,
                "total_tokens": prompt_tokens + completion_tokens,
            },
        }

    return app
