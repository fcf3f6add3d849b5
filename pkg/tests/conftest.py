import numpy as np
import pytest

from planeguard.experiments import synthesize_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def key():
    return bytes(range(32))


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Small synthetic set shared by experiment and CLI tests."""
    root = tmp_path_factory.mktemp("tinyset")
    manifest = synthesize_dataset(root, seed=11, n_per_class=10, size=64)
    return manifest
