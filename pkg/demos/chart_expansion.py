"""
Near a geodesic
===============

Paths close to the straight line t*xi are split into a tangent part eta and a
three-dimensional correction v that pins the endpoint.  Halving eta shrinks v
by four.
"""

import numpy as np

from pathgroup.lie_core import su2_geodesic
from pathgroup.local_chart import Chart, expansion_F_check, solve_v, threshold_scaled_eta
from pathgroup.rough_path import GridPath

xi = su2_geodesic(0.15, 0)
chart = Chart.of(GridPath.from_function(lambda t: t * xi, 10))
print("eta threshold:", chart.eta_threshold())

eta = threshold_scaled_eta(chart, seed=0, fraction=0.8)
for s in (1.0, 0.5, 0.25):
    st = solve_v(chart.a, eta * s, chart)
    print(f"scale {s:<5} |v| = {np.linalg.norm(st.v):.3e}  contraction ratio {st.contraction_ratio:.3f}")

slope, _ = expansion_F_check(eta, chart)
print("remainder slope of F:", round(slope, 2))
