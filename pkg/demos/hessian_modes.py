"""
Hessian of the energy at a geodesic
===================================

A sine Galerkin truncation of the Hessian against its closed form.
"""

import numpy as np

from pathgroup.hessian_spectrum import closed_form_values, galerkin_eigen, morse_index
from pathgroup.lie_core import su2_geodesic

xi = su2_geodesic(0.15, 0)
vals, _ = galerkin_eigen(xi, 200)
vals = np.sort(vals)
exact = np.sort(closed_form_values(xi, 200))

print("lowest :", np.round(vals[:6], 8))
print("highest:", np.round(vals[-6:], 8))
print("max gap at the ends:", np.max(np.abs(vals[:10] - exact[:10])))

# Longer geodesics pick up negative directions two at a time.
print({k: morse_index(su2_geodesic(0.15, k)) for k in range(-3, 4)})
