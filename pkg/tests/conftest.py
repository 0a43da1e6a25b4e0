"""Shared fixtures: the MNIST digit pair loaded once per session."""

from pathlib import Path

import pytest

from sparsefront.experiments import ExperimentConfig, load_mnist_pair

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "mnist: needs the vendored MNIST files under data/"
    )


@pytest.fixture(scope="session")
def mnist_config() -> ExperimentConfig:
    if not DATA_DIR.exists():
        pytest.skip(f"MNIST data directory {DATA_DIR} not present")
    return ExperimentConfig(data_dir=str(DATA_DIR))


@pytest.fixture(scope="session")
def mnist_pair(mnist_config):
    return load_mnist_pair(mnist_config)
