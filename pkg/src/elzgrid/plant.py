"""Dynamic device models: grid-forming DER and the electrolyzer converter.

Both devices advance by explicit state-in/state-out steps against the latest
network solution.  The DER filters its power measurements through a
first-order lag and applies generator-side droop; the electrolyzer converter
runs opposite droop at the outer loop and PI current tracking at the inner
loop, with a constant-efficiency proxy for the stack on the DC side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .control import (
    DqPhasor,
    DroopParams,
    OppositeDroopParams,
    PiController,
    PowerPair,
    SecondaryState,
    dq_current_refs,
    dq_power,
    electrolyzer_droop_refs,
    opposite_droop_refs,
)


class FrequencyTrip(Exception):
    """DER frequency left its protective guard band."""


#: Hydrogen production proxy, kg per joule of DC energy (~55 kWh/kg).
H2_KG_PER_JOULE = 1.0 / 1.98e8

FREQ_GUARD_BAND = (55.0, 65.0)

ELECTROLYZER_MODES = ("constant_power", "voltage_control", "current_control")


@dataclass(frozen=True)
class DerState:
    """Grid-forming DER: filtered power measurements plus droop outputs."""

    params: DroopParams  # generator_side convention
    t_f: float
    p_filt: float
    q_filt: float
    frequency: float
    voltage_mag: float
    phase: float = 0.0

    def __post_init__(self):
        if self.t_f <= 0:
            raise ValueError("t_f must be > 0")
        lo, hi = FREQ_GUARD_BAND
        if not (lo <= self.frequency <= hi):
            raise FrequencyTrip(
                f"DER frequency {self.frequency:.3f} Hz outside [{lo}, {hi}] Hz"
            )


def make_der_state(params: DroopParams, t_f: float) -> DerState:
    """DER initialized at its droop equilibrium (measurements at setpoints)."""
    return DerState(
        params=params,
        t_f=t_f,
        p_filt=params.p_set,
        q_filt=params.q_set,
        frequency=params.f_nom,
        voltage_mag=params.e_nom,
    )


def der_step(
    state: DerState,
    measured: PowerPair,
    dt: float,
    secondary: SecondaryState | None = None,
) -> DerState:
    """Advance the DER one step: filter powers, apply droop, advance phase.

    The secondary correction terms, when present, are superposed on the droop
    output (the restoration layer acts on the grid-forming source).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    a = dt / state.t_f
    p_filt = state.p_filt + a * (measured.p - state.p_filt)
    q_filt = state.q_filt + a * (measured.q - state.q_filt)
    f_ref, e_ref = electrolyzer_droop_refs(
        PowerPair(p_filt, q_filt), state.params, secondary
    )
    lo, hi = FREQ_GUARD_BAND
    if not (lo <= f_ref <= hi):
        raise FrequencyTrip(f"DER frequency {f_ref:.3f} Hz outside [{lo}, {hi}] Hz")
    phase = math.remainder(state.phase + 2.0 * math.pi * f_ref * dt, 2.0 * math.pi)
    return DerState(
        params=state.params,
        t_f=state.t_f,
        p_filt=p_filt,
        q_filt=q_filt,
        frequency=f_ref,
        voltage_mag=e_ref,
        phase=phase,
    )


@dataclass(frozen=True)
class ElectrolyzerState:
    """Electrolyzer converter plus constant-efficiency stack proxy.

    Currents and voltages are per-unit on the system base; powers are SI.
    `l_filter` is the per-unit converter inductance seen by the inner current
    loop (sets the closed-loop tracking bandwidth together with the PI gains:
    time constant ~ l_filter / kp, well below the primary-droop filter).
    """

    mode: str
    od_params: OppositeDroopParams
    inner_d: PiController
    inner_q: PiController
    i_actual: DqPhasor
    s_base: float
    l_filter: float = 0.02
    efficiency: float = 0.95
    const_power: PowerPair = PowerPair(0.0, 0.0)
    p_ac: float = 0.0
    q_ac: float = 0.0
    p_dc: float = 0.0
    h2_energy: float = 0.0

    def __post_init__(self):
        if self.mode not in ELECTROLYZER_MODES:
            raise ValueError(f"unknown electrolyzer mode {self.mode!r}")
        if not (0.0 < self.efficiency <= 1.0):
            raise ValueError("efficiency must be in (0, 1]")
        if self.l_filter <= 0:
            raise ValueError("l_filter must be > 0")


def make_electrolyzer_state(
    mode: str,
    od_params: OppositeDroopParams,
    s_base: float,
    inner_kp: float = 10.0,
    inner_ki: float = 0.1,
    l_filter: float = 0.02,
    efficiency: float = 0.95,
    const_power: PowerPair | None = None,
    v_limit: float = 2.0,
) -> ElectrolyzerState:
    if const_power is None:
        const_power = PowerPair(od_params.p_set, od_params.q_set)
    return ElectrolyzerState(
        mode=mode,
        od_params=od_params,
        inner_d=PiController(inner_kp, inner_ki, -v_limit, v_limit),
        inner_q=PiController(inner_kp, inner_ki, -v_limit, v_limit),
        i_actual=DqPhasor(0.0, 0.0),
        s_base=s_base,
        l_filter=l_filter,
        efficiency=efficiency,
        const_power=const_power,
    )


def _clamped_current(i: DqPhasor, grid_v: DqPhasor, params, s_base) -> DqPhasor:
    """Scale the current back if it would take active power outside its limits."""
    p_ac = dq_power(grid_v, i).p * s_base
    if p_ac > params.p_max > 0:
        s = params.p_max / p_ac
        return DqPhasor(i.d * s, i.q * s)
    if p_ac < params.p_min:
        if p_ac >= 0 and params.p_min > 0:
            return i  # converging upward through the band; leave it
        return DqPhasor(0.0, 0.0) if p_ac < 0 else i
    return i


def electrolyzer_step(
    state: ElectrolyzerState,
    grid_v: DqPhasor,
    f_meas: float,
    e_meas: float,
    secondary: SecondaryState | None,
    dt: float,
) -> ElectrolyzerState:
    """Advance the electrolyzer converter one step against the measured grid.

    constant_power: draws the configured power pair exactly each step.
    current_control: opposite droop -> current references -> inner PI loops
    integrating the converter inductance.  voltage_control is a reference
    generator only (see electrolyzer_droop_refs) and cannot be time-stepped.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if state.mode == "voltage_control":
        raise ValueError(
            "voltage_control mode generates references only and cannot be "
            "time-stepped; use electrolyzer_droop_refs directly"
        )

    if state.mode == "constant_power":
        p_pu = state.const_power.p / state.s_base
        q_pu = state.const_power.q / state.s_base
        i_new = dq_current_refs(p_pu, q_pu, grid_v)
        inner_d, inner_q = state.inner_d, state.inner_q
    else:
        refs = opposite_droop_refs(f_meas, e_meas, state.od_params, secondary)
        i_ref = dq_current_refs(refs.p / state.s_base, refs.q / state.s_base, grid_v)
        inner_d = state.inner_d.copy()
        inner_q = state.inner_q.copy()
        u_d = inner_d.step(i_ref.d - state.i_actual.d, dt)
        u_q = inner_q.step(i_ref.q - state.i_actual.q, dt)
        i_new = DqPhasor(
            state.i_actual.d + u_d * dt / state.l_filter,
            state.i_actual.q + u_q * dt / state.l_filter,
        )
        i_new = _clamped_current(i_new, grid_v, state.od_params, state.s_base)

    s = dq_power(grid_v, i_new)
    p_ac = s.p * state.s_base
    q_ac = s.q * state.s_base
    p_dc = max(0.0, p_ac * state.efficiency)
    return ElectrolyzerState(
        mode=state.mode,
        od_params=state.od_params,
        inner_d=inner_d,
        inner_q=inner_q,
        i_actual=i_new,
        s_base=state.s_base,
        l_filter=state.l_filter,
        efficiency=state.efficiency,
        const_power=state.const_power,
        p_ac=p_ac,
        q_ac=q_ac,
        p_dc=p_dc,
        h2_energy=state.h2_energy + p_dc * dt,
    )


def hydrogen_summary(state: ElectrolyzerState) -> tuple[float, float]:
    """Accumulated DC-side energy (J) and the proportional hydrogen proxy (kg)."""
    return state.h2_energy, state.h2_energy * H2_KG_PER_JOULE
