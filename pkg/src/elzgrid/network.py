"""Quasi-static complex-phasor network model and nodal solver.

The network is a small per-unit positive-sequence model: one ideal voltage
source (the grid-forming DER), series branches (lines and transformers with
ideal ratio), constant-impedance loads that can sit behind a breaker, and a
single current-injection node for the electrolyzer converter.  All reactances
are frozen at nominal frequency; the solve at each simulation step is a plain
linear complex nodal solution.

Everything is per-unit on the system MVA base; `PerUnitBase` carries the
voltage-zone bases so results can be rescaled to SI where needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import PowerPair


class TopologyError(Exception):
    """Malformed network description (unknown/unreachable bus, duplicate branch)."""


class UnitError(Exception):
    """Inconsistent per-unit voltage zones across a branch."""


class SingularNetwork(Exception):
    """Nodal admittance matrix is numerically singular."""


@dataclass(frozen=True)
class PerUnitBase:
    """System power base plus per-zone voltage bases (line-line RMS volts)."""

    s_base: float
    v_bases: dict[str, float]
    f_nom: float = 60.0

    def __post_init__(self):
        if self.s_base <= 0:
            raise ValueError("s_base must be > 0")
        if self.f_nom <= 0:
            raise ValueError("f_nom must be > 0")
        for zone, v in self.v_bases.items():
            if v <= 0:
                raise ValueError(f"v_base for zone {zone!r} must be > 0")

    def z_base(self, zone: str) -> float:
        return self.v_bases[zone] ** 2 / self.s_base


@dataclass(frozen=True)
class Branch:
    """Series branch; transformers carry an ideal ratio and may cross zones."""

    name: str
    from_bus: str
    to_bus: str
    z: complex
    tap: float = 1.0
    transformer: bool = False

    def __post_init__(self):
        if abs(self.z) <= 0.0:
            raise ValueError(f"branch {self.name!r}: series impedance must be nonzero")
        if self.tap <= 0:
            raise ValueError(f"branch {self.name!r}: tap must be > 0")


@dataclass(frozen=True)
class ImpedanceLoad:
    """Constant-impedance RL load, optionally switched by a named breaker."""

    name: str
    bus: str
    z: complex
    breaker: str | None = None

    def __post_init__(self):
        if self.z.real <= 0:
            raise ValueError(f"load {self.name!r} must be dissipative (Re z > 0)")
        if self.z.imag < 0:
            raise ValueError(f"load {self.name!r} must be RL (Im z >= 0)")


@dataclass(frozen=True)
class NetworkSolution:
    """One quasi-static solve: voltages, branch currents, PCC injection."""

    bus_voltages: dict[str, complex]
    branch_currents: dict[str, complex]
    injection_at_pcc: PowerPair
    source_power: PowerPair
    kcl_residual: float
    power_residual: float


class NetworkModel:
    """Validated immutable network with precomputed admittance structure.

    Built by `build_network`; `solve` is a pure function of the source
    voltage, the electrolyzer current and the breaker states, so one model
    can serve many concurrent scenario runs.
    """

    def __init__(self, buses, zones, source_bus, injection_bus, branches, loads, base):
        self.buses = list(buses)
        self.zones = dict(zones)
        self.source_bus = source_bus
        self.injection_bus = injection_bus
        self.branches = list(branches)
        self.loads = list(loads)
        self.base = base
        self.breakers = sorted({ld.breaker for ld in loads if ld.breaker})

        self._index = {b: k for k, b in enumerate(self.buses)}
        self._unknown = [b for b in self.buses if b != source_bus]
        self._uindex = {b: k for k, b in enumerate(self._unknown)}
        self._solve_cache: dict[tuple, tuple] = {}

    # -- construction-time helpers -------------------------------------------------

    def _full_admittance(self, breaker_states) -> np.ndarray:
        n = len(self.buses)
        y = np.zeros((n, n), dtype=complex)
        for br in self.branches:
            i, j = self._index[br.from_bus], self._index[br.to_bus]
            yb = 1.0 / br.z
            # standard pi-model of an ideal-ratio transformer branch
            t = br.tap
            y[i, i] += yb / (t * t)
            y[i, j] -= yb / t
            y[j, i] -= yb / t
            y[j, j] += yb
        for ld in self.loads:
            if ld.breaker is not None and not breaker_states.get(ld.breaker, False):
                continue
            y[self._index[ld.bus], self._index[ld.bus]] += 1.0 / ld.z
        return y

    def _factorized(self, breaker_states):
        """Per-breaker-configuration solve tables, as plain Python structures.

        The network is tiny (a handful of buses), so the hot loop avoids
        numpy call overhead entirely: the reduced admittance inverse, the
        source coupling column and the full admittance rows are precomputed
        as nested tuples of complex scalars.
        """
        key = tuple(bool(breaker_states.get(b, False)) for b in self.breakers)
        hit = self._solve_cache.get(key)
        if hit is None:
            y = self._full_admittance(breaker_states)
            ui = [self._index[b] for b in self._unknown]
            si = self._index[self.source_bus]
            y_red = y[np.ix_(ui, ui)]
            y_src = y[ui, si]
            if ui:
                cond = np.linalg.cond(y_red)
                if not np.isfinite(cond) or cond > 1e12:
                    raise SingularNetwork(
                        f"nodal matrix is numerically singular (cond={cond:.3e})"
                    )
            inv_rows = tuple(tuple(row) for row in np.linalg.inv(y_red)) if ui else ()
            full_rows = tuple(tuple(row) for row in y)
            loads_on = tuple(
                (self._index[ld.bus], 1.0 / ld.z)
                for ld in self.loads
                if ld.breaker is None or breaker_states.get(ld.breaker, False)
            )
            hit = (inv_rows, tuple(y_src), full_rows, loads_on)
            self._solve_cache[key] = hit
        return hit


def build_network(config: dict) -> NetworkModel:
    """Validate a network description and precompute its admittance structure.

    `config` keys:
      base:     {s_base, v_bases: {zone: volts}, f_nom}
      buses:    [{name, zone}, ...]
      source:   name of the single voltage-source bus
      injection: name of the electrolyzer current-injection bus
      branches: [{name, from, to, r, x, tap?, transformer?}, ...]
      loads:    [{name, bus, r, x, breaker?}, ...]
    """
    base = PerUnitBase(
        s_base=config["base"]["s_base"],
        v_bases=dict(config["base"]["v_bases"]),
        f_nom=config["base"].get("f_nom", 60.0),
    )
    buses = [b["name"] for b in config["buses"]]
    if len(set(buses)) != len(buses):
        raise TopologyError("duplicate bus names")
    zones = {b["name"]: b["zone"] for b in config["buses"]}
    for bus, zone in zones.items():
        if zone not in base.v_bases:
            raise UnitError(f"bus {bus!r} references undeclared voltage zone {zone!r}")

    source = config["source"]
    injection = config["injection"]
    for name, role in ((source, "source"), (injection, "injection")):
        if name not in zones:
            raise TopologyError(f"{role} bus {name!r} is not a declared bus")

    branches = []
    seen_pairs = set()
    for b in config["branches"]:
        br = Branch(
            name=b["name"],
            from_bus=b["from"],
            to_bus=b["to"],
            z=complex(b["r"], b["x"]),
            tap=b.get("tap", 1.0),
            transformer=b.get("transformer", False),
        )
        if br.from_bus not in zones or br.to_bus not in zones:
            raise TopologyError(f"branch {br.name!r} references an undeclared bus")
        pair = frozenset((br.from_bus, br.to_bus))
        if pair in seen_pairs:
            raise TopologyError(f"duplicate branch between {set(pair)}")
        if len(pair) == 1:
            raise TopologyError(f"branch {br.name!r} is a self-loop")
        seen_pairs.add(pair)
        if (zones[br.from_bus] != zones[br.to_bus]) and not br.transformer:
            raise UnitError(
                f"branch {br.name!r} crosses voltage zones but is not a transformer"
            )
        branches.append(br)

    loads = []
    for ld in config.get("loads", []):
        load = ImpedanceLoad(
            name=ld["name"],
            bus=ld["bus"],
            z=complex(ld["r"], ld["x"]),
            breaker=ld.get("breaker"),
        )
        if load.bus not in zones:
            raise TopologyError(f"load {load.name!r} sits on an undeclared bus")
        loads.append(load)

    # connectivity from the source over all branches
    adjacency: dict[str, set] = {b: set() for b in buses}
    for br in branches:
        adjacency[br.from_bus].add(br.to_bus)
        adjacency[br.to_bus].add(br.from_bus)
    reached = {source}
    frontier = [source]
    while frontier:
        nxt = adjacency[frontier.pop()] - reached
        reached |= nxt
        frontier.extend(nxt)
    unreachable = set(buses) - reached
    if unreachable:
        raise TopologyError(f"buses unreachable from the source: {sorted(unreachable)}")

    return NetworkModel(buses, zones, source, injection, branches, loads, base)


def solve(
    network: NetworkModel,
    source_voltage: complex,
    electrolyzer_current: complex,
    breaker_states: dict[str, bool] | None = None,
) -> NetworkSolution:
    """Linear complex nodal solve for the given operating state.

    `electrolyzer_current` is the per-unit current *drawn* by the converter
    at the injection bus.  Returns per-unit voltages and branch currents plus
    the complex power entering the converter and leaving the source, with the
    KCL and power-balance residuals of the solution attached.
    """
    if abs(source_voltage) <= 0:
        raise ValueError("source voltage magnitude must be > 0")
    breaker_states = breaker_states or {}
    inv_rows, y_src, y_full, loads_on = network._factorized(breaker_states)

    n_unknown = len(inv_rows)
    rhs = [-ys * source_voltage for ys in y_src]
    if network.injection_bus != network.source_bus:
        rhs[network._uindex[network.injection_bus]] -= electrolyzer_current

    voltages = {network.source_bus: source_voltage}
    for bus, k in network._uindex.items():
        row = inv_rows[k]
        acc = 0.0 + 0.0j
        for c in range(n_unknown):
            acc += row[c] * rhs[c]
        voltages[bus] = acc

    v_all = [voltages[b] for b in network.buses]
    src_idx = network._index[network.source_bus]
    inj_idx = network._index[network.injection_bus]
    kcl = 0.0
    src_current = 0.0 + 0.0j
    for r, row in enumerate(y_full):
        acc = 0.0 + 0.0j
        for c, yv in enumerate(row):
            acc += yv * v_all[c]
        if r == inj_idx:
            acc += electrolyzer_current
        if r == src_idx:
            src_current = acc
        else:
            m = abs(acc)
            if m > kcl:
                kcl = m

    currents = {}
    for br in network.branches:
        vf = voltages[br.from_bus]
        vt = voltages[br.to_bus]
        currents[br.name] = (vf / br.tap - vt) / br.z

    s_base = network.base.s_base
    v_pcc = voltages[network.injection_bus]
    s_elz = v_pcc * electrolyzer_current.conjugate()
    s_src = source_voltage * src_current.conjugate()

    s_loads = 0.0 + 0.0j
    for bus_idx, y_load in loads_on:
        v = v_all[bus_idx]
        s_loads += (v.real * v.real + v.imag * v.imag) * y_load.conjugate()
    s_losses = 0.0 + 0.0j
    for br in network.branches:
        i = currents[br.name]
        s_losses += (i.real * i.real + i.imag * i.imag) * br.z
    power_residual = abs(s_src - (s_loads + s_losses + s_elz))

    return NetworkSolution(
        bus_voltages=voltages,
        branch_currents=currents,
        injection_at_pcc=PowerPair(s_elz.real * s_base, s_elz.imag * s_base),
        source_power=PowerPair(s_src.real * s_base, s_src.imag * s_base),
        kcl_residual=kcl,
        power_residual=float(power_residual),
    )


def measure_frequency_and_voltage(
    solution: NetworkSolution,
    der_frequency: float,
    monitored_buses: list[str],
    pcc_bus: str,
) -> tuple[float, float, float]:
    """Grid measurements: (f, |V| at the PCC, mean |V| over monitored buses).

    Under the single-frequency quasi-static assumption the system frequency
    is the DER frequency.
    """
    for b in monitored_buses:
        if b not in solution.bus_voltages:
            raise KeyError(f"monitored bus {b!r} not in solution")
    e_pcc = abs(solution.bus_voltages[pcc_bus])
    e_bar = sum(abs(solution.bus_voltages[b]) for b in monitored_buses) / len(
        monitored_buses
    )
    return der_frequency, e_pcc, e_bar
