"""Control laws for the grid-supporting electrolyzer and the droop-controlled DER.

Everything here is either a pure function or an explicit state-in/state-out
transition, so values can be shared freely between concurrently running
scenarios.

Sign conventions: active/reactive power is positive when *consumed* by the
electrolyzer; the dq frame maps to complex phasors as v = v_d + j*v_q, so
that dq_power(v, i) equals v * conj(i) split into (p, q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


class VoltageCollapse(Exception):
    """Grid voltage magnitude too low for current-reference computation."""


#: Below this per-unit voltage magnitude the phasor model is meaningless and
#: current references are refused rather than blown up.
VOLTAGE_FLOOR = 0.1


@dataclass(frozen=True)
class DqPhasor:
    """Voltage or current in the synchronous dq frame (unit set by context)."""

    d: float
    q: float

    def magnitude(self) -> float:
        return math.hypot(self.d, self.q)

    def to_complex(self) -> complex:
        return complex(self.d, self.q)

    @classmethod
    def from_complex(cls, z: complex) -> "DqPhasor":
        return cls(z.real, z.imag)


@dataclass(frozen=True)
class PowerPair:
    """Active power (W) and reactive power (var), consumption positive."""

    p: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ValueError(f"power pair must be finite, got ({self.p!r}, {self.q!r})")

    def __add__(self, other: "PowerPair") -> "PowerPair":
        return PowerPair(self.p + other.p, self.q + other.q)


@dataclass(frozen=True)
class DroopParams:
    """Gains and setpoints of the conventional (voltage-mode) droop law.

    k_p is in Hz per watt, k_q in per-unit volt per var.  `sign_convention`
    selects the load-side law (frequency rises with consumption) or the
    conventional generator-side law (frequency falls with output).
    """

    k_p: float
    k_q: float
    f_nom: float
    e_nom: float
    p_set: float
    q_set: float
    sign_convention: str = "load_side"

    def __post_init__(self):
        if self.k_p <= 0:
            raise ValueError("k_p must be > 0")
        if self.k_q <= 0:
            raise ValueError("k_q must be > 0")
        if self.f_nom <= 0:
            raise ValueError("f_nom must be > 0")
        if self.e_nom <= 0:
            raise ValueError("e_nom must be > 0")
        if self.sign_convention not in ("load_side", "generator_side"):
            raise ValueError(
                "sign_convention must be 'load_side' or 'generator_side'"
            )


@dataclass(frozen=True)
class OppositeDroopParams:
    """Gains, setpoints and consumption limits of the opposite-droop law.

    k_f is in watts per Hz, k_v in var per per-unit volt.  The limits bound
    what the converter may consume: outputs saturate, they never error.
    """

    k_f: float
    k_v: float
    f_nom: float
    e_nom: float
    p_set: float
    q_set: float
    p_min: float
    p_max: float
    q_min: float
    q_max: float

    def __post_init__(self):
        if self.k_f <= 0:
            raise ValueError("k_f must be > 0")
        if self.k_v <= 0:
            raise ValueError("k_v must be > 0")
        if not (self.p_min <= self.p_set <= self.p_max):
            raise ValueError("p_set must lie within [p_min, p_max]")
        if not (self.q_min <= self.q_set <= self.q_max):
            raise ValueError("q_set must lie within [q_min, q_max]")


@dataclass
class PiController:
    """Discrete PI controller with output saturation and anti-windup.

    Integration is forward Euler.  Anti-windup is conditional integration:
    the integral freezes whenever the output is saturated and the current
    error would push it further into saturation.
    """

    kp: float
    ki: float
    out_min: float = -math.inf
    out_max: float = math.inf
    integral_state: float = 0.0

    def step(self, error: float, dt: float) -> float:
        if dt <= 0:
            raise ValueError("dt must be > 0")
        candidate = self.integral_state + error * dt
        unsat = self.kp * error + self.ki * candidate
        if unsat > self.out_max and error * self.ki > 0:
            pass  # freeze integral, error pushes further into upper saturation
        elif unsat < self.out_min and error * self.ki < 0:
            pass
        else:
            self.integral_state = candidate
        out = self.kp * error + self.ki * self.integral_state
        return min(max(out, self.out_min), self.out_max)

    def copy(self) -> "PiController":
        return PiController(
            self.kp, self.ki, self.out_min, self.out_max, self.integral_state
        )


def pi_step(ctrl: PiController, error: float, dt: float) -> float:
    """Advance `ctrl` by one step of duration `dt` and return its output."""
    return ctrl.step(error, dt)


@dataclass
class SecondaryState:
    """State of the centralized secondary (restoration) controller.

    The correction terms delta_f / delta_e change only when `now` crosses an
    execution-period boundary; between boundaries the controller holds.  The
    measured frequency and average voltage are smoothed with a first-order
    filter (factor `meas_smoothing` per execution) before entering the PI
    regulators; without it the proportional path closes an algebraic loop
    with the droop sources and rings at the execution rate.
    """

    f_regulator: PiController
    v_regulator: PiController
    execution_period: float = 0.01
    delta_f: float = 0.0
    delta_e: float = 0.0
    meas_smoothing: float = 1.0
    f_filt: float | None = None
    e_filt: float | None = None
    next_time: float = 0.0

    def __post_init__(self):
        if self.execution_period <= 0:
            raise ValueError("execution_period must be > 0")
        if not (0.0 < self.meas_smoothing <= 1.0):
            raise ValueError("meas_smoothing must be in (0, 1]")


def secondary_step(
    state: SecondaryState,
    f_meas: float,
    e_bar: float,
    f_nom: float,
    e_nom: float,
    now: float,
) -> SecondaryState:
    """Multirate secondary update: acts only on execution-period boundaries.

    Returns the input state unchanged between boundaries.  On a boundary the
    frequency regulator acts on (f_nom - f) and the voltage regulator on
    (e_nom - e_bar), producing new delta_f / delta_e corrections.
    """
    if now + 1e-12 < state.next_time:
        return state

    alpha = state.meas_smoothing
    f_filt = f_meas if state.f_filt is None else state.f_filt + alpha * (f_meas - state.f_filt)
    e_filt = e_bar if state.e_filt is None else state.e_filt + alpha * (e_bar - state.e_filt)

    f_reg = state.f_regulator.copy()
    v_reg = state.v_regulator.copy()
    period = state.execution_period
    delta_f = f_reg.step(f_nom - f_filt, period)
    delta_e = v_reg.step(e_nom - e_filt, period)

    # schedule the next boundary strictly after `now`
    n = math.floor(now / period + 1e-9) + 1
    return replace(
        state,
        f_regulator=f_reg,
        v_regulator=v_reg,
        delta_f=delta_f,
        delta_e=delta_e,
        f_filt=f_filt,
        e_filt=e_filt,
        next_time=n * period,
    )


@dataclass(frozen=True)
class SetpointAllocation:
    """Power setpoint split across the primary/secondary/tertiary reserves."""

    primary: PowerPair
    secondary: PowerPair
    tertiary: PowerPair

    def total(self) -> PowerPair:
        return self.primary + self.secondary + self.tertiary

    def check_against(self, params: OppositeDroopParams) -> None:
        total = self.total()
        if not (params.p_min <= total.p <= params.p_max):
            raise ValueError(
                f"allocated active setpoint {total.p} outside "
                f"[{params.p_min}, {params.p_max}]"
            )
        if not (params.q_min <= total.q <= params.q_max):
            raise ValueError(
                f"allocated reactive setpoint {total.q} outside "
                f"[{params.q_min}, {params.q_max}]"
            )


def dq_power(v: DqPhasor, i: DqPhasor) -> PowerPair:
    """Active/reactive power absorbed from the grid for dq voltage and current."""
    return PowerPair(v.d * i.d + v.q * i.q, v.q * i.d - v.d * i.q)


def dq_current_refs(p_ref: float, q_ref: float, v_g: DqPhasor) -> DqPhasor:
    """Current references that draw exactly (p_ref, q_ref) at grid voltage v_g.

    The denominator is the squared voltage magnitude, which makes this the
    exact algebraic inverse of dq_power: dq_power(v, dq_current_refs(p, q, v))
    round-trips to (p, q).

    Raises VoltageCollapse when |v_g| is at or below VOLTAGE_FLOOR.
    """
    m2 = v_g.d * v_g.d + v_g.q * v_g.q
    if m2 <= VOLTAGE_FLOOR * VOLTAGE_FLOOR:
        raise VoltageCollapse(
            f"grid voltage magnitude {math.sqrt(m2):.4f} at or below floor "
            f"{VOLTAGE_FLOOR}"
        )
    return DqPhasor(
        (v_g.d * p_ref + v_g.q * q_ref) / m2,
        (v_g.q * p_ref - v_g.d * q_ref) / m2,
    )


def electrolyzer_droop_refs(
    measured: PowerPair,
    params: DroopParams,
    secondary: SecondaryState | None = None,
) -> tuple[float, float]:
    """Frequency/voltage references from the droop law (voltage-control mode).

    Returns (f_ref [Hz], e_ref [pu]).  With `secondary` given, its correction
    terms are superposed on the droop output.
    """
    sign = 1.0 if params.sign_convention == "load_side" else -1.0
    delta_f = secondary.delta_f if secondary is not None else 0.0
    delta_e = secondary.delta_e if secondary is not None else 0.0
    f_ref = params.f_nom + sign * params.k_p * (measured.p - params.p_set) + delta_f
    e_ref = params.e_nom + sign * params.k_q * (measured.q - params.q_set) + delta_e
    return f_ref, e_ref


def opposite_droop_refs(
    f_meas: float,
    e_meas: float,
    params: OppositeDroopParams,
    secondary: SecondaryState | None = None,
) -> PowerPair:
    """Power references from the opposite-droop law (current-control mode).

    Outputs saturate at the consumption limits; saturation is not an error.

    When the secondary layer is active it drives the measured deviation
    (f - f_nom) toward zero, which would silently cancel the power support.
    The correction terms therefore enter with the opposite sign here: they
    re-create the underlying deviation the restoration removed, so the
    converter keeps providing support while the grid-forming source is held
    at nominal.  (Adding them with the same sign as in the forming-source
    droop closes a positive feedback loop through the secondary regulator
    and runs the converter into a power rail.)
    """
    delta_f = secondary.delta_f if secondary is not None else 0.0
    delta_e = secondary.delta_e if secondary is not None else 0.0
    p = params.p_set + params.k_f * (f_meas - params.f_nom - delta_f)
    q = params.q_set + params.k_v * (e_meas - params.e_nom - delta_e)
    return PowerPair(
        min(max(p, params.p_min), params.p_max),
        min(max(q, params.q_min), params.q_max),
    )


def power_margins(params: OppositeDroopParams) -> tuple[float, float, float, float]:
    """Support headroom (down_p, up_p, down_q, up_q) around the setpoints."""
    return (
        params.p_set - params.p_min,
        params.p_max - params.p_set,
        params.q_set - params.q_min,
        params.q_max - params.q_set,
    )
