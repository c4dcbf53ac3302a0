"""Shared fixtures: the bundled catalog, fixture datasets, and device states."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from pocketagents.catalog import default_catalog
from pocketagents.dataset import load_trajectories
from pocketagents.device import load_device_states
from pocketagents.fixtures import barcelona_fixture, bundled_fixture_dir

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def fixture_dir():
    return bundled_fixture_dir()


@pytest.fixture(scope="session")
def gold_dataset(fixture_dir):
    return load_trajectories(fixture_dir / "dataset.jsonl")


@pytest.fixture(scope="session")
def device_states(fixture_dir, catalog):
    return load_device_states(fixture_dir / "device_states.jsonl", catalog)


@pytest.fixture(scope="session")
def adversarial_dataset(fixture_dir):
    return load_trajectories(fixture_dir / "adversarial.jsonl")


@pytest.fixture()
def barcelona(catalog):
    state, trajectory = barcelona_fixture(catalog)
    return state, trajectory
