from pathlib import Path

import numpy as np
import pytest

from mdidro.api import DiscreteDistribution


DATA_DIR = Path(__file__).parent / "api" / "data"


@pytest.fixture
def coin() -> DiscreteDistribution:
    return DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])


@pytest.fixture
def symmetric() -> DiscreteDistribution:
    return DiscreteDistribution([[-1.0], [0.0], [1.0]], [1 / 3, 1 / 3, 1 / 3])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def heart_csv() -> Path:
    return DATA_DIR / "heart.csv"
