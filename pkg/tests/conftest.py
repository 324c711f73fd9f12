import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nncert.globalcert import GlobalConfig, global_certificate
from nncert.problem import Problem

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PROBLEMS = os.path.join(ROOT, "problems")


def problem_path(name):
    return os.path.join(PROBLEMS, name + ".json")


@pytest.fixture(scope="session")
def worked():
    """f = x1^2 + x2^2 - 1 on {x1 >= 1}: single zero (1, 0) with multiplier 2."""
    return Problem.from_strings(2, "x1^2 + x2^2 - 1", ["x1 - 1"], box=([-2, -2], [2, 2]))


@pytest.fixture(scope="session")
def worked_global(worked):
    return global_certificate(worked, GlobalConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
