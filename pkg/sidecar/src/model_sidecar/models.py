"""Model registry: embedders and generators behind the HTTP surface.

The default models are deterministic hash encoders and an echo generator,
so the service is useful for contract tests and desk-scale runs with no
checkpoints on disk. Real checkpoints plug in by name:

  * ``sentence-transformers/<name>`` for /embed (needs sentence-transformers)
  * ``causal/<name>`` for /embed_function (needs transformers+torch; serves
    the hidden state at the final position of each definition text)
"""

from __future__ import annotations

import hashlib
import time
from typing import Protocol, Sequence

import numpy as np


class ModelLoadError(RuntimeError):
    """The configured checkpoint could not be loaded."""


class Embedder(Protocol):
    model_id: str

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


class TrigramHashEmbedder:
    """Bag of character trigrams hashed into a fixed-width unit vector.

    Deterministic across platforms; near-duplicate strings land close in
    cosine, which is all the lenient value matching needs.
    """

    def __init__(self, dim: int = 256, model_id: str = "hashed-trigram-v1"):
        self.dim = dim
        self.model_id = model_id

    def _vector(self, text: str) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        padded = f"  {text.casefold()}  "
        for i in range(len(padded) - 2):
            digest = hashlib.blake2b(padded[i : i + 3].encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            out[value % self.dim] += 1.0 if (value >> 63) & 1 else -1.0
        return out

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        return _unit_rows(np.stack([self._vector(t) for t in texts]))


class WholeTextHashEmbedder:
    """One deterministic unit vector per full text; the model-free stand-in
    for a causal encoder's final-position hidden state.
    """

    def __init__(self, dim: int = 256, model_id: str = "hashed-text-v1"):
        self.dim = dim
        self.model_id = model_id

    def _vector(self, text: str) -> np.ndarray:
        out = np.empty(self.dim, dtype=np.float64)
        data = text.encode("utf-8")
        filled = 0
        block = 0
        while filled < self.dim:
            digest = hashlib.blake2b(data, digest_size=64, salt=f"fn:{block}"[:16].encode()).digest()
            vals = np.frombuffer(digest, dtype=">u8").astype(np.float64) / 2.0**63 - 1.0
            take = min(len(vals), self.dim - filled)
            out[filled : filled + take] = vals[:take]
            filled += take
            block += 1
        return out

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        return _unit_rows(np.stack([self._vector(t) for t in texts]))


class SentenceTransformerEmbedder:
    def __init__(self, checkpoint: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelLoadError(f"sentence-transformers not installed: {exc}") from None
        try:
            self._model = SentenceTransformer(checkpoint)
        except Exception as exc:
            raise ModelLoadError(f"cannot load checkpoint {checkpoint!r}: {exc}") from None
        self.model_id = f"sentence-transformers/{checkpoint}"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self._model.encode(list(texts), normalize_embeddings=True)
        return np.asarray(vectors, dtype=np.float64)


class CausalLastTokenEmbedder:
    """Final-position hidden state of a causal LM, one vector per text."""

    def __init__(self, checkpoint: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(f"transformers/torch not installed: {exc}") from None
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(checkpoint)
            self._model = AutoModel.from_pretrained(checkpoint)
        except Exception as exc:
            raise ModelLoadError(f"cannot load checkpoint {checkpoint!r}: {exc}") from None
        self._torch = torch
        self._model.eval()
        self.model_id = f"causal/{checkpoint}"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        vectors = []
        with self._torch.no_grad():
            for text in texts:
                tokens = self._tokenizer(text, return_tensors="pt")
                hidden = self._model(**tokens).last_hidden_state
                vectors.append(hidden[0, -1].numpy().astype(np.float64))
        return _unit_rows(np.stack(vectors))


def build_embedder(name: str, dim: int) -> Embedder:
    if name == "hashed-trigram-v1":
        return TrigramHashEmbedder(dim=dim)
    if name == "hashed-text-v1":
        return WholeTextHashEmbedder(dim=dim)
    if name.startswith("sentence-transformers/"):
        return SentenceTransformerEmbedder(name.split("/", 1)[1])
    if name.startswith("causal/"):
        return CausalLastTokenEmbedder(name.split("/", 1)[1])
    raise ModelLoadError(f"unknown embed model {name!r}")


class Generator(Protocol):
    model_id: str

    def generate(self, messages: list[dict], temperature: float, seed: int | None, max_tokens: int | None) -> str: ...


class EchoGenerator:
    """Debug model: returns the last line of the last user message."""

    model_id = "echo"

    def generate(self, messages, temperature, seed, max_tokens):
        users = [m for m in messages if m.get("role") == "user"]
        source = users[-1] if users else messages[-1]
        lines = source.get("content", "").splitlines()
        return lines[-1] if lines else ""


class SleepGenerator:
    """Debug model that stalls; exists to exercise the timeout path."""

    def __init__(self, seconds: float):
        self.seconds = seconds
        self.model_id = f"sleep:{seconds}"

    def generate(self, messages, temperature, seed, max_tokens):
        time.sleep(self.seconds)
        return "slept"


def build_generator(name: str) -> Generator:
    if name == "echo":
        return EchoGenerator()
    if name.startswith("sleep:"):
        return SleepGenerator(float(name.split(":", 1)[1]))
    raise ModelLoadError(f"unknown generate model {name!r}")
