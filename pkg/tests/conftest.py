import numpy as np
import pytest

from filament_net import learning, synthgen
from filament_net.windowing import WindowConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def seed1_fragment():
    """Default-parameter corpus member derived from corpus seed 1."""
    return synthgen.corpus(1, seed=1)[0]


@pytest.fixture(scope="session")
def seed1_model(seed1_fragment):
    X, M = seed1_fragment
    return learning.train(X, M, WindowConfig(5))


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(test_acceptance.RESULTS.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
