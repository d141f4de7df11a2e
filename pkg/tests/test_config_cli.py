"""Tests for configuration parsing, CSV/JSON emission, and the command line."""

import filecmp
import json

import numpy as np
import pytest

import elzgrid
from elzgrid import ParseError, ValidationError, parse_config, parse_config_file, run
from elzgrid.cli import main, read_trace_csv, write_trace_csv


MINIMAL_NETWORK = """
[network]
s_base = 5e6
source = "a"
injection = "b"
pcc = "b"
monitored = ["a", "b"]

[network.v_bases]
mv = 13200.0

[[network.buses]]
name = "a"
zone = "mv"

[[network.buses]]
name = "b"
zone = "mv"

[[network.branches]]
name = "ab"
from = "a"
to = "b"
r = 0.01
x = 0.05

[[network.loads]]
name = "ld"
bus = "b"
r = 1.2
x = 0.4

[[network.loads]]
name = "sw"
bus = "b"
r = 20.0
x = 6.0
breaker = "S"
"""

MINIMAL_DEVICES = """
[der]
s_rated = 5e6

[electrolyzer]
p_rated = 0.75e6
q_rated = 0.5e6
p_set = 0.4e6
q_set = 0.0
k_f = 6.6e5
k_v = 4.8e6
"""


def minimal_scenario_text(extra=""):
    return "[simulation]\nduration = 0.2\ndt = 1e-3\nwarmup = 0.2\n" + \
        MINIMAL_NETWORK + MINIMAL_DEVICES + extra


# --------------------------------------------------------------------- parsing


def test_shipped_study_config_parses():
    parsed = parse_config_file(str(elzgrid.paper_study_path()))
    assert parsed.kind == "study"
    scn = parsed.scenario
    assert scn.duration == 5.0
    assert [(e.time, e.close) for e in scn.events] == [(2.2, True), (3.2, False)]
    assert scn.monitored_buses == ["bus1", "bus3"]
    assert scn.network.breakers == ["S"]


def test_defaults_applied_and_echoed():
    parsed = parse_config(MINIMAL_NETWORK + MINIMAL_DEVICES)
    assert parsed.kind == "scenario"
    assert parsed.scenario.dt == 1e-4
    assert parsed.resolved["simulation"]["dt"] == 1e-4
    assert parsed.resolved["simulation"]["duration"] == 5.0
    assert parsed.resolved["der"]["droop_f_pu"] == 0.1


def test_negative_gain_names_the_invariant():
    bad = minimal_scenario_text().replace("k_f = 6.6e5", "k_f = -1.0")
    with pytest.raises(ValidationError, match="k_f"):
        parse_config(bad)


def test_unknown_key_rejected():
    with pytest.raises(ValidationError, match="typo_key"):
        parse_config(minimal_scenario_text() + "\n[secondary]\ntypo_key = 1\n")


def test_malformed_toml_is_parse_error():
    with pytest.raises(ParseError):
        parse_config("this is [not toml")


def test_unknown_kind_rejected():
    with pytest.raises(ValidationError):
        parse_config('kind = "fantasy"\n' + MINIMAL_NETWORK + MINIMAL_DEVICES)


def test_missing_network_section_rejected():
    with pytest.raises(ValidationError):
        parse_config(MINIMAL_DEVICES)


def test_bad_event_action_rejected():
    extra = '[[events]]\ntime = 0.1\nbreaker = "S"\naction = "explode"\n'
    with pytest.raises(ValidationError):
        parse_config(minimal_scenario_text(extra))


# ------------------------------------------------------------------ CSV output


def test_csv_round_trip_is_stable(tmp_path):
    parsed = parse_config(minimal_scenario_text())
    trace, _ = run(parsed.scenario)
    first = tmp_path / "trace.csv"
    second = tmp_path / "again.csv"
    write_trace_csv(trace, first)
    back = read_trace_csv(first)
    write_trace_csv(back, second)
    assert filecmp.cmp(first, second, shallow=False)
    assert first.read_text().splitlines()[0] == (
        "time,P_G,Q_G,f,V_pcc,V_bar,P_E,Q_E,delta_f,delta_e,p_dc"
    )


def test_csv_reader_rejects_other_headers(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,alpha\n0.0,1.0\n")
    with pytest.raises(ValueError):
        read_trace_csv(p)


# ------------------------------------------------------------------------- CLI


def write_scenario_file(tmp_path, text=None):
    p = tmp_path / "scenario.toml"
    p.write_text(text if text is not None else minimal_scenario_text())
    return p


def test_cli_validate_ok(tmp_path, capsys):
    p = write_scenario_file(tmp_path)
    assert main(["validate", "--scenario", str(p)]) == 0
    assert "valid scenario configuration" in capsys.readouterr().out


def test_cli_validate_bad_config_exits_2(tmp_path, capsys):
    p = write_scenario_file(tmp_path, "nonsense = true\n")
    assert main(["validate", "--scenario", str(p)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_missing_file_exits_2(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "nope.toml"),
                 "--out", str(tmp_path / "out")]) == 2


def test_cli_run_writes_trace_and_metrics(tmp_path):
    p = write_scenario_file(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--scenario", str(p), "--out", str(out)]) == 0
    trace = read_trace_csv(out / "scenario.csv")
    assert len(trace) > 1
    summary = json.loads((out / "scenario_metrics.json").read_text())
    assert "metrics" in summary
    assert summary["config"]["simulation"]["dt"] == 1e-3
    assert summary["metrics"]["p_g_swing_w"] >= 0.0


def test_cli_run_overrides_dt_and_duration(tmp_path):
    p = write_scenario_file(tmp_path)
    out = tmp_path / "out"
    code = main(["run", "--scenario", str(p), "--out", str(out),
                 "--dt", "5e-4", "--duration", "0.1"])
    assert code == 0
    trace = read_trace_csv(out / "scenario.csv")
    assert trace["time"][-1] == pytest.approx(0.1)


def test_cli_study_emits_four_cases_and_plots(tmp_path):
    text = 'kind = "study"\n' + minimal_scenario_text(
        '[[events]]\ntime = 0.05\nbreaker = "S"\naction = "close"\n'
        '[[events]]\ntime = 0.15\nbreaker = "S"\naction = "open"\n'
    )
    p = write_scenario_file(tmp_path, text)
    out = tmp_path / "study_out"
    assert main(["study", "--config", str(p), "--out", str(out)]) == 0
    cases = ["constant_nosec", "supporting_nosec", "constant_sec", "supporting_sec"]
    for case in cases:
        assert (out / f"{case}.csv").exists()
    summary = json.loads((out / "study_metrics.json").read_text())
    assert set(cases) <= set(summary["comparison"])
    scripts = sorted(q.name for q in out.glob("*.gp"))
    assert len(scripts) == 6


def test_cli_unwritable_output_dir_exits_2(tmp_path, capsys):
    p = write_scenario_file(tmp_path)
    blocker = tmp_path / "blocker"
    blocker.write_text("")  # a file where the out dir should go
    code = main(["run", "--scenario", str(p), "--out", str(blocker / "out")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_cli_simulation_failure_exits_3(tmp_path, capsys):
    # a crushing fixed load drives the droop frequency out of the guard band
    text = minimal_scenario_text().replace("r = 1.2\nx = 0.4", "r = 0.05\nx = 0.016")
    p = write_scenario_file(tmp_path, text)
    code = main(["run", "--scenario", str(p), "--out", str(tmp_path / "out")])
    assert code == 3
    assert "simulation error" in capsys.readouterr().err
