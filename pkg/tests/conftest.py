import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from anisocrn import catalog

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def net1():
    return catalog.unimolecular()


@pytest.fixture
def net2():
    return catalog.triangle()


@pytest.fixture
def net2_varying():
    return catalog.triangle_varying_barrier()


@pytest.fixture
def net3():
    return catalog.two_channel()


def initial(net):
    return np.array(net.initial_state.rho), net.initial_state.theta


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
