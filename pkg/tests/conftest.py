import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from pairqmc.integrals import load_fcidump

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data" / "fcidump"

_CACHE = {}


def fixture_path(name: str) -> pathlib.Path:
    return DATA_DIR / f"{name}.fcidump"


def load_fixture(name: str):
    if name not in _CACHE:
        _CACHE[name] = load_fcidump(fixture_path(name))
    return _CACHE[name]


@pytest.fixture(scope="session")
def h2():
    return load_fixture("h2_0.74")


@pytest.fixture(scope="session")
def h4():
    return load_fixture("h4_1.00")


@pytest.fixture(scope="session")
def h4_stretched():
    return load_fixture("h4_2.00")


@pytest.fixture(scope="session")
def h6_stretched():
    return load_fixture("h6_2.40")


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR
