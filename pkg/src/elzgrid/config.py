"""Scenario/study configuration parsing and validation.

Configurations are TOML documents in a documented key-value schema (see the
shipped `data/paper_study.toml` for a fully commented example).  Unknown keys
are rejected so typos fail loudly, and every default that gets applied is
echoed back in the resolved-configuration dictionary so a run can be
reproduced from its summary alone.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .control import (
    DroopParams,
    OppositeDroopParams,
    PiController,
    PowerPair,
    SecondaryState,
)
from .engine import BreakerEvent, Scenario
from .network import build_network
from .plant import make_der_state, make_electrolyzer_state


class ParseError(Exception):
    """Configuration document is not well-formed."""


class ValidationError(Exception):
    """Configuration violates an invariant; the message names it."""


_DEFAULTS = {
    "simulation": {
        "duration": 5.0,
        "dt": 1e-4,
        "record_interval": 1e-3,
        "warmup": 0.0,
    },
    "der": {
        "p_set_pu": 0.85,
        "q_set_pu": 0.85,
        "droop_f_pu": 0.1,
        "droop_v_pu": 0.1,
        "t_f": 0.02,
    },
    "electrolyzer": {
        "mode": "current_control",
        "p_min": 0.0,
        "inner_kp": 10.0,
        "inner_ki": 0.1,
        "l_filter": 0.02,
        "efficiency": 0.95,
    },
    "secondary": {
        "enabled": False,
        "kp": 10.0,
        "ki": 10.0,
        "period": 0.01,
        "smoothing": 0.1,
        "delta_f_limit": 5.0,
        "delta_e_limit": 0.25,
    },
}

_ALLOWED = {
    "": {"kind", "simulation", "network", "der", "electrolyzer", "secondary", "events"},
    "simulation": {"duration", "dt", "record_interval", "warmup"},
    "network": {
        "s_base",
        "f_nom",
        "v_bases",
        "source",
        "injection",
        "pcc",
        "monitored",
        "buses",
        "branches",
        "loads",
    },
    "network.buses": {"name", "zone"},
    "network.branches": {"name", "from", "to", "r", "x", "tap", "transformer"},
    "network.loads": {"name", "bus", "r", "x", "breaker"},
    "der": {
        "s_rated",
        "p_set_pu",
        "q_set_pu",
        "droop_f_pu",
        "droop_v_pu",
        "t_f",
    },
    "electrolyzer": {
        "mode",
        "p_rated",
        "q_rated",
        "p_set",
        "q_set",
        "p_min",
        "k_f",
        "k_v",
        "inner_kp",
        "inner_ki",
        "l_filter",
        "efficiency",
        "constant_p",
        "constant_q",
    },
    "secondary": {
        "enabled",
        "kp",
        "ki",
        "period",
        "smoothing",
        "delta_f_limit",
        "delta_e_limit",
    },
    "events": {"time", "breaker", "action"},
}


def _check_keys(mapping: dict, section: str) -> None:
    allowed = _ALLOWED[section]
    for key in mapping:
        if key not in allowed:
            raise ValidationError(
                f"unknown key {key!r} in section [{section or 'top level'}]"
            )


def _require(mapping: dict, key: str, section: str):
    if key not in mapping:
        raise ValidationError(f"missing required key {key!r} in section [{section}]")
    return mapping[key]


@dataclass(frozen=True)
class ParsedConfig:
    """Parse result: the base scenario, its kind, and the resolved raw config."""

    kind: str  # "scenario" or "study"
    scenario: Scenario
    resolved: dict


def parse_config(text: str) -> ParsedConfig:
    """Parse and validate a scenario or study configuration document."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(str(exc)) from exc

    _check_keys(raw, "")
    kind = raw.get("kind", "scenario")
    if kind not in ("scenario", "study"):
        raise ValidationError("kind must be 'scenario' or 'study'")

    resolved = {"kind": kind}
    for section, defaults in _DEFAULTS.items():
        merged = dict(defaults)
        merged.update(raw.get(section, {}))
        _check_keys(merged, section)
        resolved[section] = merged

    if "network" not in raw:
        raise ValidationError("missing required section [network]")
    net_raw = dict(raw["network"])
    _check_keys(net_raw, "network")
    resolved["network"] = copy.deepcopy(net_raw)
    resolved["events"] = copy.deepcopy(raw.get("events", []))

    try:
        scenario = _build_scenario(resolved)
    except (ValueError, KeyError) as exc:
        raise ValidationError(str(exc)) from exc
    return ParsedConfig(kind=kind, scenario=scenario, resolved=resolved)


def parse_config_file(path) -> ParsedConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _build_scenario(resolved: dict) -> Scenario:
    net_raw = resolved["network"]
    f_nom = net_raw.get("f_nom", 60.0)
    s_base = _require(net_raw, "s_base", "network")

    net_config = {
        "base": {
            "s_base": s_base,
            "v_bases": _require(net_raw, "v_bases", "network"),
            "f_nom": f_nom,
        },
        "buses": _require(net_raw, "buses", "network"),
        "source": _require(net_raw, "source", "network"),
        "injection": _require(net_raw, "injection", "network"),
        "branches": _require(net_raw, "branches", "network"),
        "loads": net_raw.get("loads", []),
    }
    for item, section in (
        (net_config["buses"], "network.buses"),
        (net_config["branches"], "network.branches"),
        (net_config["loads"], "network.loads"),
    ):
        for entry in item:
            _check_keys(entry, section)
    network = build_network(net_config)

    der_raw = resolved["der"]
    s_rated = _require(der_raw, "s_rated", "der")
    if s_rated <= 0:
        raise ValidationError("der.s_rated must be > 0")
    der_params = DroopParams(
        k_p=der_raw["droop_f_pu"] * f_nom / s_rated,
        k_q=der_raw["droop_v_pu"] * 1.0 / s_rated,
        f_nom=f_nom,
        e_nom=1.0,
        p_set=der_raw["p_set_pu"] * s_rated,
        q_set=der_raw["q_set_pu"] * s_rated,
        sign_convention="generator_side",
    )
    der = make_der_state(der_params, der_raw["t_f"])

    elz_raw = resolved["electrolyzer"]
    p_rated = _require(elz_raw, "p_rated", "electrolyzer")
    q_rated = _require(elz_raw, "q_rated", "electrolyzer")
    od_params = OppositeDroopParams(
        k_f=_require(elz_raw, "k_f", "electrolyzer"),
        k_v=_require(elz_raw, "k_v", "electrolyzer"),
        f_nom=f_nom,
        e_nom=1.0,
        p_set=_require(elz_raw, "p_set", "electrolyzer"),
        q_set=_require(elz_raw, "q_set", "electrolyzer"),
        p_min=elz_raw["p_min"],
        p_max=p_rated,
        q_min=-q_rated,  # symmetric reactive capability of the converter
        q_max=q_rated,
    )
    electrolyzer = make_electrolyzer_state(
        mode=elz_raw["mode"],
        od_params=od_params,
        s_base=s_base,
        inner_kp=elz_raw["inner_kp"],
        inner_ki=elz_raw["inner_ki"],
        l_filter=elz_raw["l_filter"],
        efficiency=elz_raw["efficiency"],
        const_power=PowerPair(
            elz_raw.get("constant_p", od_params.p_set),
            elz_raw.get("constant_q", od_params.q_set),
        ),
    )

    sec_raw = resolved["secondary"]
    secondary = SecondaryState(
        f_regulator=PiController(
            sec_raw["kp"],
            sec_raw["ki"],
            -sec_raw["delta_f_limit"],
            sec_raw["delta_f_limit"],
        ),
        v_regulator=PiController(
            sec_raw["kp"],
            sec_raw["ki"],
            -sec_raw["delta_e_limit"],
            sec_raw["delta_e_limit"],
        ),
        execution_period=sec_raw["period"],
        meas_smoothing=sec_raw["smoothing"],
    )

    events = []
    for ev in resolved["events"]:
        _check_keys(ev, "events")
        action = _require(ev, "action", "events")
        if action not in ("open", "close"):
            raise ValidationError("event action must be 'open' or 'close'")
        events.append(
            BreakerEvent(
                time=_require(ev, "time", "events"),
                breaker=_require(ev, "breaker", "events"),
                close=(action == "close"),
            )
        )

    sim = resolved["simulation"]
    return Scenario(
        network=network,
        der=der,
        electrolyzer=electrolyzer,
        duration=sim["duration"],
        dt=sim["dt"],
        record_interval=sim["record_interval"],
        warmup=sim["warmup"],
        secondary_enabled=sec_raw["enabled"],
        secondary=secondary,
        events=events,
        monitored_buses=list(_require(net_raw, "monitored", "network")),
        pcc_bus=_require(net_raw, "pcc", "network"),
        converter_bus=_require(net_raw, "injection", "network"),
    )
