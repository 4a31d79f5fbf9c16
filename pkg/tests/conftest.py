import numpy as np
import pytest

from fastfal.datastore import EmbeddingStore, gen_synthetic


@pytest.fixture
def tiny_store() -> EmbeddingStore:
    """Six hand-placed 2-D points, two classes (A=0, B=1)."""
    feats = np.array(
        [[0, 0], [0, 1], [5, 0], [5, 1], [5, 2], [0, 2]], dtype=np.float32
    )
    labels = np.array([0, 0, 1, 1, 1, 0], dtype=np.int64)
    return EmbeddingStore(features=feats, labels=labels, class_count=2)


@pytest.fixture
def cluster_store() -> EmbeddingStore:
    """Well-separated 4-cluster synthetic data, the workhorse fixture."""
    return gen_synthetic(c=4, per_class=100, d=16, sigma=0.1, seed=99)
