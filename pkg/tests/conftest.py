import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ctmcgsa import build_seiarhd, build_sir, make_model

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def sir():
    return build_sir()


@pytest.fixture(scope="session")
def seiarhd():
    return build_seiarhd()


def pure_death(n0=10):
    return make_model("pure-death", ("I", "R"), ("gamma",), [("I", "R", "gamma * W_I")], (n0, 0))


def constant_rate(rate_names=("a",), n0=10**6):
    """One source compartment draining into one sink per constant-rate channel."""
    comps = ("X",) + tuple(f"Y{k}" for k in range(len(rate_names)))
    channels = [("X", f"Y{k}", name) for k, name in enumerate(rate_names)]
    return make_model("const", comps, rate_names, channels, (n0,) + (0,) * len(rate_names))


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
