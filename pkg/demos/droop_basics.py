"""Tour of the control building blocks.

Shows how the opposite-droop law turns frequency/voltage deviations into
power references, how the dq power/current math round-trips, and how the
discrete PI controller tracks with anti-windup.
"""

from elzgrid import (
    DqPhasor,
    OppositeDroopParams,
    PiController,
    dq_current_refs,
    dq_power,
    opposite_droop_refs,
    power_margins,
)


def main():
    params = OppositeDroopParams(
        k_f=6.6e5,       # W per Hz of grid-frequency deviation
        k_v=4.8e6,       # var per per-unit volt of deviation
        f_nom=60.0,
        e_nom=1.0,
        p_set=400e3,
        q_set=0.0,
        p_min=0.0,
        p_max=750e3,
        q_min=-500e3,
        q_max=500e3,
    )

    print("Opposite droop: consumption backs off when the grid sags")
    for f in (60.05, 60.0, 59.9, 59.5, 58.0):
        refs = opposite_droop_refs(f, 1.0, params)
        print(f"  f = {f:6.2f} Hz -> P* = {refs.p / 1e3:8.1f} kW")

    down_p, up_p, down_q, up_q = power_margins(params)
    print(f"\nSupport headroom: -{down_p / 1e3:.0f}/+{up_p / 1e3:.0f} kW, "
          f"-{down_q / 1e3:.0f}/+{up_q / 1e3:.0f} kvar")

    print("\ndq power <-> current references round-trip")
    v = DqPhasor(0.97, 0.08)
    i = dq_current_refs(0.08, -0.02, v)
    back = dq_power(v, i)
    print(f"  requested (0.0800, -0.0200) pu -> drawn ({back.p:.4f}, {back.q:.4f}) pu")

    print("\nDiscrete PI step response (kp=10, ki=0.1, dt=10 ms)")
    for n in (1, 10, 100):
        out = 0.0
        fresh = PiController(10.0, 0.1)
        for _ in range(n):
            out = fresh.step(1.0, 0.01)
        print(f"  after {n:3d} steps of unit error: output = {out:.4f}")


if __name__ == "__main__":
    main()
