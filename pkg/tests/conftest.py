import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import fieldbridge as fb


def sincos2(x, y):
    return np.sin(x) * np.cos(y) + 2.0


@pytest.fixture(scope="session")
def unit_tri():
    return fb.build_mesh([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(0, 1, 2)])


@pytest.fixture(scope="session")
def disk_small():
    return fb.disk(1.0, 8)  # 384 elements


@pytest.fixture(scope="session")
def disk_small_grid(disk_small):
    return fb.build_grid(disk_small)


@pytest.fixture(scope="session")
def disk_5k():
    return fb.disk(1.0, 29)  # 5046 elements


@pytest.fixture(scope="session")
def disk_5k_grid(disk_5k):
    return fb.build_grid(disk_5k)
