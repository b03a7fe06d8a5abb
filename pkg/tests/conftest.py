from pathlib import Path

import numpy as np
import pytest

from gmtree import DataSet, DirichletParams

REPO = Path(__file__).resolve().parents[1]
DATA_DIR = REPO / "data"

# The five-point single-feature example used as a golden fixture throughout:
# three class-0 points below 1.375, two class-1 points above.
FIVEPOINT_X = np.array([[0.0], [0.5], [1.25], [1.5], [1.75]])
FIVEPOINT_Y = np.array([0, 0, 0, 1, 1])


@pytest.fixture
def fivepoint_dataset() -> DataSet:
    return DataSet(FIVEPOINT_X, FIVEPOINT_Y)


@pytest.fixture
def flat_prior() -> DirichletParams:
    return DirichletParams(np.array([1.0, 1.0]))


def random_dataset(rng, n=None, d=None, C=None, max_n=60, integer_features=True):
    """Small random classification dataset; integer features force ties."""
    n = n or int(rng.integers(2, max_n))
    d = d or int(rng.integers(1, 5))
    C = C or int(rng.integers(2, 5))
    if integer_features:
        X = rng.integers(0, 8, size=(n, d)).astype(float)
    else:
        X = rng.normal(size=(n, d))
    y = rng.integers(0, C, size=n)
    if len(np.unique(y)) < 2:  # training data needs two classes present
        y[0] = 0
        y[-1] = 1
    return DataSet(X, y, n_classes=C)


def uci_file(name: str):
    """Path of a real benchmark CSV if the user has dropped it in, else None."""
    path = DATA_DIR / "uci" / f"{name}.csv"
    return path if path.exists() else None
