import numpy as np
import pytest

from gwselect.embed_io import EmbeddingSet, Modality
from gwselect.linear_ot import Coupling
from gwselect.mmspace import DistanceMatrix, pairwise_angular


def make_set(n, d, seed=0, modality=Modality.VISION, source="synthetic"):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((n, d)).astype(np.float32)
    ids = tuple(f"s{i:04d}" for i in range(n))
    return EmbeddingSet(ids=ids, modality=modality, data=data, source=source)


def random_distance_matrix(n, seed=0, d=4, label=""):
    rng = np.random.default_rng(seed)
    return DistanceMatrix(values=pairwise_angular(rng.standard_normal((n, d))), label=label)


def random_doubly_stochastic(n, rng, iters=400):
    """Random coupling with uniform marginals via Sinkhorn projection of a
    strictly positive matrix."""
    w = rng.uniform(0.5, 1.5, size=(n, n))
    for _ in range(iters):
        w /= w.sum(axis=1, keepdims=True) * n
        w /= w.sum(axis=0, keepdims=True) * n
    return Coupling(weights=w)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
