"""HTTP clients for the optional model sidecar (embeddings and similarity).

The core package never requires the sidecar; these classes exist so runs
can swap in real sentence embeddings for value similarity, dense retrieval,
and function-definition slot embeddings.
"""

from __future__ import annotations

import os

import numpy as np
import requests

from .prompts import ProviderUnavailable
from .runtime import DEFAULT_AUTH_ENV


class SidecarClient:
    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        auth_env: str = DEFAULT_AUTH_ENV,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.auth_env = auth_env
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, path: str, body: dict) -> dict:
        try:
            response = self._session.post(
                f"{self.base_url}{path}", json=body, timeout=self.timeout, headers=self._headers()
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"sidecar unreachable: {exc}") from None
        if response.status_code != 200:
            raise ProviderUnavailable(f"sidecar {path} returned HTTP {response.status_code}")
        return response.json()

    def health(self) -> dict:
        try:
            response = self._session.get(f"{self.base_url}/health", timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"sidecar unreachable: {exc}") from None
        return response.json()

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        doc = self._post("/embed", {"texts": texts})
        return [np.asarray(v, dtype=float) for v in doc["vectors"]]

    def embed_function(self, texts: list[str]) -> list[np.ndarray]:
        doc = self._post("/embed_function", {"texts": texts})
        return [np.asarray(v, dtype=float) for v in doc["vectors"]]


class SidecarSimilarityProvider:
    """SimilarityProvider backed by /embed cosine; scores clamp to [0, 1]."""

    def __init__(self, client: SidecarClient):
        self.client = client
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = self.client.embed([text])[0]
            self._cache[text] = vec
        return vec

    def similarity(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        va, vb = self._vector(a), self._vector(b)
        denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
        if denom == 0.0:
            return 0.0
        return max(0.0, min(1.0, float(va @ vb / denom)))


class SidecarFunctionEmbeddingProvider:
    """FunctionEmbeddingProvider backed by /embed_function."""

    def __init__(self, client: SidecarClient, model_id: str = "sidecar"):
        self.client = client
        self._model_id = model_id

    @property
    def provider_id(self) -> str:
        return f"sidecar:{self._model_id}"

    def embed(self, text: str) -> np.ndarray:
        return self.client.embed_function([text])[0]
