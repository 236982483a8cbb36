import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bsvem.domain import box, sphere  # noqa: E402
from bsvem.mesher import generate_cut_extrude  # noqa: E402
from bsvem.system import assemble_global  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20260514)


@pytest.fixture(scope="session")
def sphere5():
    return generate_cut_extrude(sphere(), 5)


@pytest.fixture(scope="session")
def sphere10():
    return generate_cut_extrude(sphere(), 10)


@pytest.fixture(scope="session")
def sphere10_mats(sphere10):
    return assemble_global(sphere10)


@pytest.fixture(scope="session")
def sphere20():
    return generate_cut_extrude(sphere(), 20)


@pytest.fixture(scope="session")
def sphere40():
    return generate_cut_extrude(sphere(), 40)


@pytest.fixture(scope="session")
def box4():
    return generate_cut_extrude(box(), 4)
