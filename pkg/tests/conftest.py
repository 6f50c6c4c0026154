import sys

import numpy as np
import pytest
from hypothesis import settings

from qetlab.aql import parse_program
from qetlab.bundled import corpus, entry

# the evaluator deepens the limit itself; doing it up front keeps hypothesis quiet
sys.setrecursionlimit(200_000)

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def program(name):
    return parse_program(entry(name).text())


def accepted():
    return [e for e in corpus() if e.accept and e.file.endswith(".aql")]
