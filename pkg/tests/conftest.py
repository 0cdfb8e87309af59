import numpy as np
import pytest

from sagin_ia.channel import FadingParams, generate_block, generate_slot
from sagin_ia.config import SystemConfig


def make_channels(kd, n, ms, l, seed=0, fading=None):
    cfg = SystemConfig(kd=kd, n=n, ms=ms, l=l, seed=seed)
    return generate_slot(cfg, fading or FadingParams(), np.random.default_rng(seed))


def make_block(kd, n, ms, l, seed=0):
    cfg = SystemConfig(kd=kd, n=n, ms=ms, l=l, seed=seed)
    return generate_block(cfg, FadingParams(), np.random.default_rng(seed), kd + 2)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
