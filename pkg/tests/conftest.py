import os
import random

import pytest

from invsynth.backend import SolverHandle
from invsynth.parsing import parse_problem_file

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
MINI_DIR = os.path.join(ROOT, "problems", "mini")
TRAIN_DIR = os.path.join(ROOT, "problems", "train")


def mini_path(name: str) -> str:
    return os.path.join(MINI_DIR, name)


@pytest.fixture(scope="session")
def c1():
    return parse_problem_file(mini_path("c1.chc"))


@pytest.fixture(scope="session")
def shared_handle():
    """One solver process reused by tests that fire many small queries."""
    handle = SolverHandle()
    yield handle
    handle.close()


@pytest.fixture()
def rng():
    return random.Random(20240817)
