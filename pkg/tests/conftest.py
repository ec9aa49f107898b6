import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qconsensus import network

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def path3():
    return network.path_graph(3)


@pytest.fixture
def path3_w(path3):
    return network.metropolis_weights(path3)


def random_connected_graph(m, seed):
    g, _ = network.connected_rgg(m, max(network.default_radius(m), 0.5), seed)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
