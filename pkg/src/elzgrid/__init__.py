"""Phasor-domain simulation of a microgrid supported by a hydrogen electrolyzer.

A three-bus microgrid formed by a droop-controlled DER, with a grid-connected
electrolyzer converter providing frequency and voltage support through a
hierarchical control stack: inner dq current control, opposite-droop primary
control, and a centralized secondary restoration layer.
"""

from importlib import resources

from .control import (
    DqPhasor,
    DroopParams,
    OppositeDroopParams,
    PiController,
    PowerPair,
    SecondaryState,
    SetpointAllocation,
    VoltageCollapse,
    dq_current_refs,
    dq_power,
    electrolyzer_droop_refs,
    opposite_droop_refs,
    pi_step,
    power_margins,
    secondary_step,
)
from .network import (
    Branch,
    ImpedanceLoad,
    NetworkModel,
    NetworkSolution,
    PerUnitBase,
    SingularNetwork,
    TopologyError,
    UnitError,
    build_network,
    measure_frequency_and_voltage,
    solve,
)
from .plant import (
    DerState,
    ElectrolyzerState,
    FrequencyTrip,
    der_step,
    electrolyzer_step,
    hydrogen_summary,
    make_der_state,
    make_electrolyzer_state,
)
from .engine import (
    BreakerEvent,
    Scenario,
    ScenarioMetrics,
    SimulationTrace,
    StudyResult,
    compute_metrics,
    run,
    run_study,
)
from .config import ParseError, ValidationError, parse_config, parse_config_file

__version__ = "0.1.0"


def paper_study_path():
    """Path to the shipped four-case study configuration."""
    return resources.files(__name__) / "data" / "paper_study.toml"
