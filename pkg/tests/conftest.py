import zlib
from pathlib import Path

import numpy as np
import pytest

from bdgmaps.oracle import exact_laws
from bdgmaps.weights import fixture

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true", help="skip tests marked slow")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    skip = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def q4():
    return fixture("q4")


@pytest.fixture(scope="session")
def mixed():
    return fixture("mixed")


@pytest.fixture(scope="session")
def q4_exact(q4):
    return exact_laws(q4[0])


@pytest.fixture(scope="session")
def mixed_exact(mixed):
    return exact_laws(mixed[0])


@pytest.fixture
def rng(request):
    # one independent, reproducible stream per test
    seed = zlib.crc32(request.node.nodeid.encode())
    return np.random.Generator(np.random.Philox(seed))


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
