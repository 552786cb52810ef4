"""Channelized 5.8 GHz access with protocol interference and SDMA.

Each receiver can listen on as many channels as it has radios and serve up to
A edge nodes per channel. A transmitter may share a channel with another link
only if the power it puts at that link's receiver stays below P_I.
"""

from pathlib import Path

from backhaul_planner import ScenarioConfig, parse_topology, run_scenario
from backhaul_planner.topology import Band, watts_to_dbm

here = Path(__file__).parent
t = parse_topology(here / "scenarios" / "campus_sub6.json")
band = t.bands[Band.SUB6]
print(f"{band.num_channels} channels of {band.channel_width_hz / 1e6:.0f} MHz, SDMA order A = {t.sdma_order}, "
      f"P_I = {watts_to_dbm(t.interference_threshold_w):.0f} dBm")

result = run_scenario(t, ScenarioConfig(mode="sub6", grid_kp=4, grid_kw=4), here / "out" / "sub6")
plan = result.plan
print(f"deployment cost {plan.objective:g}, ANs {list(plan.selected_ans)}")

print("\nschedule:")
active = []
for (i, j), a in sorted(plan.en_link_alloc.items()):
    for ch, p in sorted(a.channel_powers.items()):
        active.append((i, j, ch, p))
        print(f"  EN {i} -> {j} on channel {ch} at {watts_to_dbm(p):6.2f} dBm")

print("\ncross-link interference on shared channels (must stay <= P_I):")
for k, h, ch, p in active:
    for i, j, ch2, _ in active:
        if ch != ch2 or k == i or h == j:
            continue
        g = t.gain(Band.SUB6, k, j, ch)
        if g is not None:
            print(f"  EN {k} at receiver {j}, channel {ch}: {watts_to_dbm(p * g):7.2f} dBm")
