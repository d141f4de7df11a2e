"""One quasi-static solve of the shipped microgrid network.

Builds the network from the packaged study configuration, solves it with and
without the switched load, and prints bus voltages, converter power, and the
solution residuals.
"""

import elzgrid
from elzgrid import measure_frequency_and_voltage, parse_config_file, solve


def main():
    parsed = parse_config_file(str(elzgrid.paper_study_path()))
    network = parsed.scenario.network
    i_converter = 0.08 - 0.01j  # per-unit current drawn by the electrolyzer

    for closed in (False, True):
        sol = solve(network, 1.0 + 0j, i_converter, {"S": closed})
        state = "closed" if closed else "open"
        print(f"Breaker S {state}:")
        for bus, v in sol.bus_voltages.items():
            print(f"  |V_{bus}| = {abs(v):.5f} pu")
        f, e_pcc, e_bar = measure_frequency_and_voltage(
            sol, 60.0, ["bus1", "bus3"], "bus3"
        )
        print(f"  converter draws {sol.injection_at_pcc.p / 1e3:.1f} kW, "
              f"{sol.injection_at_pcc.q / 1e3:.1f} kvar")
        print(f"  source supplies {sol.source_power.p / 1e6:.3f} MW")
        print(f"  V_pcc = {e_pcc:.5f} pu, V_bar = {e_bar:.5f} pu")
        print(f"  residuals: KCL {sol.kcl_residual:.2e}, "
              f"power balance {sol.power_residual:.2e}\n")


if __name__ == "__main__":
    main()
