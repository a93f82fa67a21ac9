import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spinboson.bath import BathSpec, QubitSpec
from spinboson.fitting import fit_matsubara

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PARAM_SETS = [(0.2, 0.05), (0.4, 0.4), (1.0, 1.0)]


@pytest.fixture(scope="session")
def qubit():
    return QubitSpec(0.0, 1.0)


@pytest.fixture(scope="session")
def fits():
    """Seed-0 fits for the three reference parameter sets."""
    return {p: fit_matsubara(BathSpec(*p), seed=0) for p in PARAM_SETS}


@pytest.fixture
def no_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        yield


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """``record(n, ok, detail)`` logs one pass/fail line for acceptance criterion ``n``."""
    log = request.config.stash[ACCEPTANCE]

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        log.append((n, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, [])
    if log:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(log):
            terminalreporter.write_line(line)
