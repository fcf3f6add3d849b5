from types import SimpleNamespace

import numpy as np
import pytest

from recognizability import (read_class_manifest, split_class_manifest,
                             synthesize_class_dataset)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture(scope="session")
def stripes(tmp_path_factory):
    """Two-class stripe corpus: 30 images per class, split 80/20."""
    root = tmp_path_factory.mktemp("stripes")
    manifest = synthesize_class_dataset(root, n_per_class=30, size=96, seed=5)
    entries = read_class_manifest(manifest)
    train, test = split_class_manifest(entries, 0.8, 0)
    return SimpleNamespace(root=root, manifest=manifest, entries=entries,
                           train=train, test=test)
