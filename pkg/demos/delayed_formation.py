"""
Formation keeping over delayed links
====================================

Six robots hold a hexagon. Every directed link carries its own constant
delay drawn between 0 and 0.333 s. Without the filter the delayed consensus
loop injects energy and the formation rings; with the filter the edges settle.
"""

import numpy as np

from cbf_formation.config import load_scenario
from cbf_formation.simulator import metrics, run

# Both presets draw the same delays and starting poses from the same seed.
plain, _ = load_scenario("fig2-nofilter")
guarded, _ = load_scenario("fig3-filter")
print("directed delays [s]:", np.round(sorted(plain.topology.delays.values()), 3))

traces = {name: run(sc) for name, sc in (("no filter", plain), ("filter", guarded))}

# Edge errors over the last 20% of the run.
for name, trace in traces.items():
    m = metrics(trace, plain.topology)
    print(f"{name:10s} rms edge error {m['rms_overall']:.5f}"
          f"  worst final relative error {100 * m['final_relative_error']:.2f}%")

# A coarse look at one edge over time.
d = plain.topology.distance(0, 1)
for t in (0, 10, 20, 30, 40, 50, 60):
    k = int(round(t / plain.control_period))
    row = "  ".join(f"{tr.edge_distance[k, 0] - d:+.4f}" for tr in traces.values())
    print(f"t = {t:2d} s  edge 0-1 error (no filter, filter): {row}")
