"""Acceptance for the sidecar: every criterion exercised over live HTTP.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

from __future__ import annotations

import json
import math
import random
import socket
import threading
import time
from contextlib import contextmanager

import numpy as np
import pytest
import uvicorn

from model_sidecar.app import create_app
from model_sidecar.config import SidecarConfig


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def live_server():
    port = _free_port()
    config = uvicorn.Config(
        create_app(SidecarConfig()), host="127.0.0.1", port=port, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("sidecar did not start in time")
        time.sleep(0.02)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_live_embed_identity_cosine(live_server):
    with criterion("sidecar-embed-identity"):
        import requests

        doc = requests.post(f"{live_server}/embed", json={"texts": ["abc", "abc"]}, timeout=10).json()
        a, b = np.asarray(doc["vectors"][0]), np.asarray(doc["vectors"][1])
        cosine = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        assert math.isclose(cosine, 1.0, abs_tol=1e-6)


def test_live_batch_order_preserved_on_100_shuffled(live_server):
    with criterion("sidecar-batch-order-100"):
        import requests

        texts = [f"sentence number {i} about topic {i % 7}" for i in range(100)]
        singles = {
            t: requests.post(f"{live_server}/embed", json={"texts": [t]}, timeout=10).json()["vectors"][0]
            for t in texts
        }
        shuffled = list(texts)
        random.Random(13).shuffle(shuffled)
        batch = requests.post(f"{live_server}/embed", json={"texts": shuffled}, timeout=10).json()
        assert len(batch["vectors"]) == 100
        for text, vector in zip(shuffled, batch["vectors"]):
            assert vector == singles[text]


def test_live_generate_echo_verbatim(live_server):
    with criterion("sidecar-generate-echo"):
        import requests

        payload = {
            "messages": [{"role": "user", "content": "first line\nthe exact echo payload"}]
        }
        doc = requests.post(f"{live_server}/generate", json=payload, timeout=10).json()
        assert doc["choices"][0]["message"]["content"] == "the exact echo payload"


def test_runtime_http_backend_completes_one_step_episode(live_server):
    with criterion("sidecar-echo-one-step-episode"):
        from pocketagents.catalog import AgentKind, default_catalog
        from pocketagents.calls import FunctionCall
        from pocketagents.fixtures import barcelona_fixture
        from pocketagents.runtime import EpisodeConfig, HttpBackend, run_episode

        catalog = default_catalog()
        state, _ = barcelona_fixture(catalog)
        backend = HttpBackend(f"{live_server}/generate", timeout=10)
        config = EpisodeConfig(
            catalog=catalog,
            examples={
                AgentKind.HIGH_ORDER_REASONING: "[Task Completion Agent]",
                AgentKind.TASK_COMPLETION: '["create_notes(content=\'echo episode\')"]',
            },
        )
        trajectory = run_episode(backend, state.clone_for_episode(), "Echo round trip.", config)
        assert trajectory.status == "completed"
        assert len(trajectory.steps) == 1
        assert trajectory.final_plan == [FunctionCall("create_notes", {"content": "echo episode"})]


def test_plan_f1_provider_agreement_on_exact_fixtures(live_server):
    with criterion("sidecar-plan-f1-provider-agreement"):
        from pocketagents.calls import FunctionCall
        from pocketagents.catalog import default_catalog
        from pocketagents.fixtures import bundled_fixture_dir
        from pocketagents.metrics import TrigramSimilarity, plan_f1
        from pocketagents.sidecar_client import SidecarClient, SidecarSimilarityProvider

        catalog = default_catalog()
        fixture = json.loads(
            (bundled_fixture_dir() / "similarity_pairs.json").read_text(encoding="utf-8")
        )
        pairs = fixture["pairs"]
        assert pairs, "fixture must not be empty"
        trigram = TrigramSimilarity()
        sidecar = SidecarSimilarityProvider(SidecarClient(live_server, timeout=10))
        for pair in pairs:
            a, b = pair["a"], pair["b"]
            assert trigram.similarity(a, b) > 0.7
            assert sidecar.similarity(a, b) > 0.7
            gold = [FunctionCall("create_notes", {"content": a})]
            pred = [FunctionCall("create_notes", {"content": b})]
            score_default = plan_f1(gold, pred, trigram, catalog=catalog)
            score_sidecar = plan_f1(gold, pred, sidecar, catalog=catalog)
            assert score_default == score_sidecar == 1.0
