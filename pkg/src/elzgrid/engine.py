"""Deterministic fixed-step simulation loop and study runner.

Per-step order is fixed: (1) apply due breaker events, (2) network solve with
the current device states, (3) measurements, (4) secondary controller at its
own execution rate, (5) electrolyzer step, (6) DER step.  Two runs of the
same scenario produce bitwise-identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .control import (
    DqPhasor,
    PiController,
    PowerPair,
    SecondaryState,
    VoltageCollapse,
    secondary_step,
)
from .network import (
    NetworkModel,
    SingularNetwork,
    measure_frequency_and_voltage,
    solve,
)
from .plant import (
    DerState,
    ElectrolyzerState,
    FrequencyTrip,
    der_step,
    electrolyzer_step,
)

TRACE_COLUMNS = (
    "time",
    "P_G",
    "Q_G",
    "f",
    "V_pcc",
    "V_bar",
    "P_E",
    "Q_E",
    "delta_f",
    "delta_e",
    "p_dc",
)

SETTLE_BAND_HZ = 0.01


@dataclass(frozen=True)
class BreakerEvent:
    time: float
    breaker: str
    close: bool


@dataclass
class Scenario:
    """Everything needed for one deterministic run.

    `warmup` seconds are simulated before t=0 to let the controllers settle;
    the trace starts at t=0.  `monitored_buses` feed the average voltage seen
    by the secondary controller; `pcc_bus` is where the electrolyzer couples
    and `converter_bus` its terminal node behind the unit transformer.
    """

    network: NetworkModel
    der: DerState
    electrolyzer: ElectrolyzerState
    duration: float
    dt: float = 1e-4
    record_interval: float = 1e-3
    warmup: float = 0.0
    secondary_enabled: bool = False
    secondary: SecondaryState | None = None
    events: list[BreakerEvent] = field(default_factory=list)
    monitored_buses: list[str] = field(default_factory=list)
    pcc_bus: str = ""
    converter_bus: str = ""

    def __post_init__(self):
        if not (0.0 < self.dt <= 1e-3):
            raise ValueError("dt must be in (0, 1 ms]")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.record_interval < self.dt:
            raise ValueError("record_interval must be >= dt")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        times = [e.time for e in self.events]
        if times != sorted(times):
            raise ValueError("events must be sorted by time")
        for t in times:
            if not (0.0 <= t <= self.duration):
                raise ValueError(f"event time {t} outside [0, duration]")
        if self.secondary_enabled and self.secondary is None:
            raise ValueError("secondary_enabled requires a SecondaryState")
        if self.electrolyzer.mode == "voltage_control":
            raise ValueError("scenarios support constant_power or current_control")


@dataclass(frozen=True)
class SimulationTrace:
    """Multirate time-series record of the quantities plotted in the study."""

    data: dict[str, np.ndarray]

    def __post_init__(self):
        lengths = {len(v) for v in self.data.values()}
        if len(lengths) != 1:
            raise ValueError("all trace columns must have equal length")
        t = self.data["time"]
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("time column must be strictly increasing")
        for name, col in self.data.items():
            if not np.all(np.isfinite(col)):
                raise ValueError(f"trace column {name!r} contains non-finite values")

    def __getitem__(self, column: str) -> np.ndarray:
        return self.data[column]

    def __len__(self) -> int:
        return len(self.data["time"])


@dataclass(frozen=True)
class ScenarioMetrics:
    p_g_swing: float
    f_nadir_dev: float
    f_settle: float  # seconds after the last event; inf when unsettled
    f_settled: bool
    v_max_dev: float
    e_h2: float

    def as_dict(self) -> dict:
        return {
            "p_g_swing_w": self.p_g_swing,
            "f_nadir_dev_hz": self.f_nadir_dev,
            "f_settle_s": self.f_settle if self.f_settled else None,
            "f_settled": self.f_settled,
            "v_max_dev_pu": self.v_max_dev,
            "e_h2_j": self.e_h2,
        }


def _attach_time(exc: Exception, t: float) -> Exception:
    exc.sim_time = t
    exc.args = (f"t={t:.6f} s: {exc.args[0] if exc.args else ''}",)
    return exc


def run(scenario: Scenario) -> tuple[SimulationTrace, ScenarioMetrics]:
    """Execute one scenario and return its trace and metrics."""
    dt = scenario.dt
    n_warm = round(scenario.warmup / dt)
    n_steps = round(scenario.duration / dt)
    rec_every = max(1, round(scenario.record_interval / dt))
    n_rec = n_steps // rec_every + 1

    der = scenario.der
    elz = scenario.electrolyzer
    secondary = scenario.secondary if scenario.secondary_enabled else None
    if secondary is not None and n_warm > 0:
        # let the multirate controller run during warmup as well
        secondary = replace(secondary, next_time=-n_warm * dt)

    breakers = {b: False for b in scenario.network.breakers}
    events = list(scenario.events)
    next_event = 0

    cols = {name: np.empty(n_rec) for name in TRACE_COLUMNS}
    rec = 0

    for k in range(-n_warm, n_steps + 1):
        t = k * dt

        while next_event < len(events) and t >= events[next_event].time - 1e-12:
            ev = events[next_event]
            breakers[ev.breaker] = ev.close
            next_event += 1

        try:
            sol = solve(
                scenario.network,
                complex(der.voltage_mag, 0.0),  # DER sets the angle reference
                elz.i_actual.to_complex(),
                breakers,
            )
        except SingularNetwork as exc:
            raise _attach_time(exc, t)

        f_meas, e_pcc, e_bar = measure_frequency_and_voltage(
            sol, der.frequency, scenario.monitored_buses, scenario.pcc_bus
        )

        if secondary is not None:
            secondary = secondary_advance(secondary, f_meas, e_bar, der, t)

        v_conv = sol.bus_voltages[scenario.converter_bus]
        try:
            elz = electrolyzer_step(
                elz, DqPhasor.from_complex(v_conv), f_meas, e_pcc, secondary, dt
            )
        except VoltageCollapse as exc:
            raise _attach_time(exc, t)

        try:
            der = der_step(der, sol.source_power, dt, secondary)
        except FrequencyTrip as exc:
            raise _attach_time(exc, t)

        if k >= 0 and k % rec_every == 0:
            cols["time"][rec] = t
            cols["P_G"][rec] = der.p_filt
            cols["Q_G"][rec] = der.q_filt
            cols["f"][rec] = der.frequency
            cols["V_pcc"][rec] = e_pcc
            cols["V_bar"][rec] = e_bar
            cols["P_E"][rec] = elz.p_ac
            cols["Q_E"][rec] = elz.q_ac
            cols["delta_f"][rec] = secondary.delta_f if secondary else 0.0
            cols["delta_e"][rec] = secondary.delta_e if secondary else 0.0
            cols["p_dc"][rec] = elz.p_dc
            rec += 1

    trace = SimulationTrace({name: col[:rec] for name, col in cols.items()})
    if scenario.events:
        window = (scenario.events[0].time, scenario.duration)
    else:
        window = (0.0, scenario.duration)
    metrics = compute_metrics(trace, window, der.params.f_nom)
    return trace, metrics


def secondary_advance(secondary, f_meas, e_bar, der, now):
    """One multirate secondary update against the DER's nominal targets."""
    return secondary_step(
        secondary, f_meas, e_bar, der.params.f_nom, der.params.e_nom, now
    )


def compute_metrics(
    trace: SimulationTrace, event_window: tuple[float, float], f_nom: float
) -> ScenarioMetrics:
    """Scenario comparison metrics over the given (t0, t1) event window.

    The settling time is measured from t0 of the *last* excursion reference,
    i.e. from the window start if no other information is available; callers
    running eventful scenarios pass a window starting at the first event.
    """
    t = trace["time"]
    t0, t1 = event_window
    if t0 < t[0] - 1e-12 or t1 > t[-1] + 1e-12:
        raise ValueError("event window outside trace range")
    mask = (t >= t0) & (t <= t1)
    if not np.any(mask):
        raise ValueError("event window contains no samples")

    p_g = trace["P_G"][mask]
    f = trace["f"][mask]
    v = trace["V_pcc"]

    pre_idx = np.searchsorted(t, t0) - 1
    v_pre = v[max(pre_idx, 0)]
    v_dev = float(np.max(np.abs(v[mask] - v_pre)))

    f_dev = np.abs(f - f_nom)
    tw = t[mask]
    outside = f_dev > SETTLE_BAND_HZ
    if not np.any(outside):
        settle, settled = 0.0, True
    else:
        last_out = np.max(np.nonzero(outside)[0])
        if last_out == len(tw) - 1:
            settle, settled = math.inf, False
        else:
            settle, settled = float(tw[last_out + 1] - t0), True

    dt_rec = np.diff(t)
    e_h2 = float(np.sum(0.5 * (trace["p_dc"][1:] + trace["p_dc"][:-1]) * dt_rec))

    return ScenarioMetrics(
        p_g_swing=float(np.max(p_g) - np.min(p_g)),
        f_nadir_dev=float(np.max(f_dev)),
        f_settle=settle,
        f_settled=settled,
        v_max_dev=v_dev,
        e_h2=e_h2,
    )


CASE_NAMES = (
    "constant_nosec",
    "supporting_nosec",
    "constant_sec",
    "supporting_sec",
)


@dataclass(frozen=True)
class StudyResult:
    """Four-way comparison: paired traces and metrics on an identical network."""

    traces: dict[str, SimulationTrace]
    metrics: dict[str, ScenarioMetrics]
    errors: dict[str, str]

    def comparison(self) -> dict:
        out = {name: m.as_dict() for name, m in self.metrics.items()}
        if "constant_nosec" in self.metrics and "supporting_nosec" in self.metrics:
            c = self.metrics["constant_nosec"]
            s = self.metrics["supporting_nosec"]
            out["swing_ratio_nosec"] = (
                s.p_g_swing / c.p_g_swing if c.p_g_swing else None
            )
        for name, msg in self.errors.items():
            out[name] = {"error": msg}
        return out


def run_study(base_scenario: Scenario) -> StudyResult:
    """Run the four study cases, varying only mode and secondary flag."""
    traces, metrics, errors = {}, {}, {}
    for name in CASE_NAMES:
        mode = "constant_power" if name.startswith("constant") else "current_control"
        sec_on = name.endswith("_sec")
        scenario = replace(
            base_scenario,
            electrolyzer=replace(base_scenario.electrolyzer, mode=mode),
            secondary_enabled=sec_on,
            secondary=_fresh_secondary(base_scenario.secondary) if sec_on else None,
        )
        try:
            traces[name], metrics[name] = run(scenario)
        except (SingularNetwork, FrequencyTrip, VoltageCollapse) as exc:
            errors[name] = f"{type(exc).__name__}: {exc}"
    return StudyResult(traces=traces, metrics=metrics, errors=errors)


def _fresh_secondary(template: SecondaryState | None) -> SecondaryState:
    if template is None:
        raise ValueError("study requires a secondary controller template")
    return replace(
        template,
        f_regulator=template.f_regulator.copy(),
        v_regulator=template.v_regulator.copy(),
        delta_f=0.0,
        delta_e=0.0,
        f_filt=None,
        e_filt=None,
        next_time=0.0,
    )
