import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from model_sidecar.app import create_app
from model_sidecar.config import SidecarConfig

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture()
def client():
    return TestClient(create_app(SidecarConfig()))


@pytest.fixture(scope="session")
def paraphrase_pairs():
    doc = json.loads((DATA_DIR / "paraphrase_pairs.json").read_text(encoding="utf-8"))
    return doc["pairs"]
