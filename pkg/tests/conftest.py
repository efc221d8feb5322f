import math

import numpy as np
import pytest

from quadevo.core import SimConfig

S = 1.0 / math.sqrt(2.0)


def make_config(**overrides) -> SimConfig:
    base = dict(d=4, m=8, sigma_w0_sq=225.0, sigma_w_sq=64.0, sigma_n_sq=16.0,
                transmittances=((S, S),) * overrides.get("m", 8), seed=11, trials=200)
    base.update(overrides)
    return SimConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
