from pathlib import Path

import numpy as np
import pytest

from pilkit.dataset import Dataset, TargetEncoding

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def xor_data():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    t = np.array([[-0.8], [0.8], [0.8], [-0.8]])
    return Dataset.from_arrays(x, t, TargetEncoding("regression-raw"), source="xor")


def random_regression(rng, n, n_features, m=1, low=-0.8, high=0.8):
    """Distinct uniform inputs in [-1, 1] and targets in [low, high]."""
    x = rng.uniform(-1, 1, size=(n, n_features))
    t = rng.uniform(low, high, size=(n, m))
    return Dataset.from_arrays(x, t, TargetEncoding("regression-raw"), source="random")


def random_rank_matrix(rng, rows, cols, rank):
    """rows x cols matrix of exact rank ``rank`` with O(1) singular values."""
    if rank == 0:
        return np.zeros((rows, cols))
    u, _ = np.linalg.qr(rng.standard_normal((rows, rank)))
    v, _ = np.linalg.qr(rng.standard_normal((cols, rank)))
    s = rng.uniform(0.5, 2.0, size=rank)
    return (u * s) @ v.T
