import numpy as np
import pytest

from ldknn.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def make_blobs(rng, centers, n_per_class, spread=1.0):
    """Gaussian blob dataset with one class per center."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    blocks, labels = [], []
    for ci, center in enumerate(centers):
        blocks.append(center + spread * rng.standard_normal((n_per_class, centers.shape[1])))
        labels += [str(ci)] * n_per_class
    return Dataset.from_arrays(np.vstack(blocks), labels, "blobs")


@pytest.fixture
def blobs(rng):
    return make_blobs(rng, [[0.0, 0.0], [3.0, 3.0], [-3.0, 3.0]], 40)
