"""Unit tests for the nodal network model and quasi-static solver."""

import cmath

import pytest

from elzgrid import (
    Branch,
    ImpedanceLoad,
    PerUnitBase,
    SingularNetwork,
    TopologyError,
    UnitError,
    build_network,
    measure_frequency_and_voltage,
    solve,
)

from conftest import divider_config, feeder_config


# ------------------------------------------------------------------ type checks


def test_per_unit_base_z_base():
    base = PerUnitBase(5e6, {"mv": 13200.0})
    assert base.z_base("mv") == pytest.approx(13200.0**2 / 5e6)


def test_per_unit_base_validation():
    with pytest.raises(ValueError):
        PerUnitBase(0.0, {"mv": 13200.0})
    with pytest.raises(ValueError):
        PerUnitBase(5e6, {"mv": -1.0})


def test_branch_and_load_validation():
    with pytest.raises(ValueError):
        Branch("b", "x", "y", 0j)
    with pytest.raises(ValueError):
        Branch("b", "x", "y", 0.1 + 0.1j, tap=0.0)
    with pytest.raises(ValueError):
        ImpedanceLoad("ld", "x", complex(-1.0, 0.5))
    with pytest.raises(ValueError):
        ImpedanceLoad("ld", "x", complex(1.0, -0.5))


# ---------------------------------------------------------------- construction


def test_build_feeder_network(feeder_network):
    assert len(feeder_network.buses) == 4
    assert sum(br.transformer for br in feeder_network.branches) == 2
    assert len(feeder_network.loads) == 2
    assert feeder_network.breakers == ["S"]


def test_unreachable_bus_rejected():
    cfg = divider_config()
    cfg["buses"].append({"name": "island", "zone": "mv"})
    with pytest.raises(TopologyError):
        build_network(cfg)


def test_duplicate_branch_rejected():
    cfg = divider_config()
    cfg["branches"].append(
        {"name": "ab2", "from": "b", "to": "a", "r": 0.02, "x": 0.1}
    )
    with pytest.raises(TopologyError):
        build_network(cfg)


def test_self_loop_rejected():
    cfg = divider_config()
    cfg["branches"].append({"name": "aa", "from": "a", "to": "a", "r": 0.1, "x": 0.1})
    with pytest.raises(TopologyError):
        build_network(cfg)


def test_zone_crossing_requires_transformer():
    cfg = divider_config()
    cfg["base"]["v_bases"]["lv"] = 480.0
    cfg["buses"][1]["zone"] = "lv"
    with pytest.raises(UnitError):
        build_network(cfg)


def test_undeclared_zone_rejected():
    cfg = divider_config()
    cfg["buses"][1]["zone"] = "hv"
    with pytest.raises(UnitError):
        build_network(cfg)


def test_source_must_be_declared():
    cfg = divider_config()
    cfg["source"] = "ghost"
    with pytest.raises(TopologyError):
        build_network(cfg)


def test_single_bus_no_load_network():
    cfg = {
        "base": {"s_base": 5e6, "v_bases": {"mv": 13200.0}},
        "buses": [{"name": "a", "zone": "mv"}],
        "source": "a",
        "injection": "a",
        "branches": [],
        "loads": [],
    }
    net = build_network(cfg)
    sol = solve(net, 1.0 + 0j, 0j)
    assert sol.bus_voltages["a"] == 1.0 + 0j


# ----------------------------------------------------------------------- solver


def test_no_load_network_has_no_drops():
    cfg = divider_config()
    cfg["loads"] = []
    net = build_network(cfg)
    sol = solve(net, 1.0 + 0.2j, 0j)
    assert sol.bus_voltages["b"] == pytest.approx(1.0 + 0.2j, abs=1e-14)


def test_voltage_divider_closed_form(divider_network):
    v_src = 1.0 + 0j
    z_line = complex(0.01, 0.05)
    z_load = complex(1.0, 0.3)
    sol = solve(divider_network, v_src, 0j)
    expected = v_src * z_load / (z_load + z_line)
    assert abs(sol.bus_voltages["b"] - expected) < 1e-12


def test_feeder_residuals_within_invariants(feeder_network):
    for closed in (False, True):
        for i_elz in (0j, 0.08 - 0.02j, -0.05 + 0.1j):
            sol = solve(feeder_network, 1.0 + 0j, i_elz, {"S": closed})
            assert sol.kcl_residual < 1e-10
            assert sol.power_residual < 1e-8


def test_solution_superposition(feeder_network):
    a = 0.7 - 0.4j
    base = solve(feeder_network, 1.0 + 0j, 0.05 + 0.01j, {"S": True})
    scaled = solve(feeder_network, a * (1.0 + 0j), a * (0.05 + 0.01j), {"S": True})
    for bus, v in base.bus_voltages.items():
        assert abs(scaled.bus_voltages[bus] - a * v) < 1e-12
    for name, i in base.branch_currents.items():
        assert abs(scaled.branch_currents[name] - a * i) < 1e-12


def test_closing_breaker_never_raises_voltages(feeder_network):
    open_sol = solve(feeder_network, 1.0 + 0j, 0.08j, {"S": False})
    closed_sol = solve(feeder_network, 1.0 + 0j, 0.08j, {"S": True})
    for bus in feeder_network.buses:
        assert abs(closed_sol.bus_voltages[bus]) <= abs(open_sol.bus_voltages[bus]) + 1e-14
    assert abs(closed_sol.bus_voltages["conv"]) < abs(open_sol.bus_voltages["conv"])


def test_injection_power_matches_voltage_times_current(feeder_network):
    i = 0.08 - 0.02j
    sol = solve(feeder_network, 1.0 + 0j, i, {"S": True})
    s = sol.bus_voltages["conv"] * i.conjugate() * feeder_network.base.s_base
    assert sol.injection_at_pcc.p == pytest.approx(s.real, rel=1e-12)
    assert sol.injection_at_pcc.q == pytest.approx(s.imag, rel=1e-12)


def test_zero_source_voltage_rejected(feeder_network):
    with pytest.raises(ValueError):
        solve(feeder_network, 0j, 0j)


def test_extreme_impedance_spread_is_singular():
    cfg = {
        "base": {"s_base": 5e6, "v_bases": {"mv": 13200.0}},
        "buses": [
            {"name": "a", "zone": "mv"},
            {"name": "b", "zone": "mv"},
            {"name": "c", "zone": "mv"},
        ],
        "source": "a",
        "injection": "c",
        "branches": [
            {"name": "ab", "from": "a", "to": "b", "r": 1e-9, "x": 0.0},
            {"name": "bc", "from": "b", "to": "c", "r": 1e9, "x": 0.0},
        ],
        "loads": [],
    }
    net = build_network(cfg)
    with pytest.raises(SingularNetwork):
        solve(net, 1.0 + 0j, 0j)


# ----------------------------------------------------------------- measurements


def test_measurements_mean_and_pcc(feeder_network):
    sol = solve(feeder_network, 1.0 + 0j, 0.08j, {"S": True})
    f, e_pcc, e_bar = measure_frequency_and_voltage(
        sol, 59.9, ["bus1", "bus3"], "bus3"
    )
    assert f == 59.9
    assert e_pcc == pytest.approx(abs(sol.bus_voltages["bus3"]))
    expected = 0.5 * (abs(sol.bus_voltages["bus1"]) + abs(sol.bus_voltages["bus3"]))
    assert e_bar == pytest.approx(expected)
    # bus2 is excluded from the average
    assert e_bar != pytest.approx(
        (abs(sol.bus_voltages["bus1"]) + abs(sol.bus_voltages["bus2"])) / 2
    )


def test_measurements_arithmetic_mean_example(feeder_network):
    sol = solve(feeder_network, 1.0 + 0j, 0j)
    sol.bus_voltages["bus1"] = cmath.rect(1.02, 0.1)
    sol.bus_voltages["bus3"] = cmath.rect(0.98, -0.2)
    _, _, e_bar = measure_frequency_and_voltage(sol, 60.0, ["bus1", "bus3"], "bus3")
    assert e_bar == pytest.approx(1.00, abs=1e-12)


def test_measurements_unknown_bus_rejected(feeder_network):
    sol = solve(feeder_network, 1.0 + 0j, 0j)
    with pytest.raises(KeyError):
        measure_frequency_and_voltage(sol, 60.0, ["ghost"], "bus3")
