"""Shared fixtures: small network descriptions and the shipped study run."""

import copy

import pytest

from elzgrid import build_network

#: One line per acceptance criterion, filled in by the acceptance suite and
#: echoed after the test run so the verdict list is always visible.
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


#: Two buses, one line, one fixed load -- the smallest non-trivial network.
DIVIDER_CONFIG = {
    "base": {"s_base": 5e6, "v_bases": {"mv": 13200.0}, "f_nom": 60.0},
    "buses": [{"name": "a", "zone": "mv"}, {"name": "b", "zone": "mv"}],
    "source": "a",
    "injection": "b",
    "branches": [{"name": "ab", "from": "a", "to": "b", "r": 0.01, "x": 0.05}],
    "loads": [{"name": "ld", "bus": "b", "r": 1.0, "x": 0.3}],
}

#: Three-bus feeder with a switched load and a transformer-coupled converter
#: terminal, mirroring the shipped study topology.
FEEDER_CONFIG = {
    "base": {
        "s_base": 5e6,
        "v_bases": {"mv": 13200.0, "lv": 480.0, "stack": 70.0},
        "f_nom": 60.0,
    },
    "buses": [
        {"name": "bus1", "zone": "mv"},
        {"name": "bus2", "zone": "mv"},
        {"name": "bus3", "zone": "lv"},
        {"name": "conv", "zone": "stack"},
    ],
    "source": "bus1",
    "injection": "conv",
    "branches": [
        {"name": "line12", "from": "bus1", "to": "bus2", "r": 0.01, "x": 0.05},
        {
            "name": "tx23",
            "from": "bus2",
            "to": "bus3",
            "r": 0.005,
            "x": 0.03,
            "transformer": True,
        },
        {
            "name": "txconv",
            "from": "bus3",
            "to": "conv",
            "r": 0.005,
            "x": 0.03,
            "transformer": True,
        },
    ],
    "loads": [
        {"name": "z1", "bus": "bus2", "r": 1.2906, "x": 0.40548},
        {"name": "z2", "bus": "bus2", "r": 30.6, "x": 10.2, "breaker": "S"},
    ],
}


def feeder_config():
    return copy.deepcopy(FEEDER_CONFIG)


def divider_config():
    return copy.deepcopy(DIVIDER_CONFIG)


@pytest.fixture
def feeder_network():
    return build_network(feeder_config())


@pytest.fixture
def divider_network():
    return build_network(divider_config())
