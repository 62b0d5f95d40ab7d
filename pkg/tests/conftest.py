import os
import sys
from dataclasses import replace

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from lecflex.runner import run_scenario  # noqa: E402
from lecflex.scenarios import load_bundled  # noqa: E402

_CACHE = {}


def outcome(name: str, transport: str = "in-process"):
    """Market outcome for a bundled scenario, computed once per session."""
    key = (name, transport)
    if key not in _CACHE:
        _CACHE[key] = run_scenario(load_bundled(name), transport)
    return _CACHE[key]


def zero_device_scenario():
    """Case-I network with every LEC stripped of its devices."""
    s = load_bundled("case1")
    lecs = tuple(replace(l, devices=()) for l in s.lecs)
    return replace(s, lecs=lecs, market=replace(s.market, max_iterations=8), name="zero-device")


def zero_device_outcome():
    if "zero" not in _CACHE:
        _CACHE["zero"] = run_scenario(zero_device_scenario())
    return _CACHE["zero"]


@pytest.fixture(scope="session")
def case1_outcome():
    return outcome("case1")


@pytest.fixture(scope="session")
def case2_outcome():
    return outcome("case2")


@pytest.fixture(scope="session")
def rebound_outcome():
    return outcome("rebound")


@pytest.fixture(scope="session")
def zero_outcome():
    return zero_device_outcome()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
