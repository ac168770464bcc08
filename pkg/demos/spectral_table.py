"""
Exact spectral bookkeeping on SU(2)
===================================

Eigenvalue candidates are kept as p + q*theta with rational p, q, so two
levels that coincide at one theta are still told apart.
"""

from fractions import Fraction

from pathgroup.spectral_sets import counting_function, e_zero, lambda_set, sigma_set

theta = Fraction(3, 20)

# The ground energy of each geodesic family, symbolically and at theta = 3/20.
for k in range(-3, 4):
    e = e_zero(k)
    print(f"k={k:+d}  E0 = {e}  = {float(e.numeric(theta)):.4f}")

# Bottom of the Lambda set for the minimal geodesic.
for item in lambda_set(0, 0.9, 16, theta).items:
    print(item.value, "x", item.multiplicity)

# The merged table over k in {0, -1, 1}; the cap warning flags a level sitting
# within r of R.
res = sigma_set([0, -1, 1], 0.9, 0.05, theta)
print(res.to_json()["warnings"])

# Shrinking the gap r admits more and more levels below R.
print([counting_function([0, -1, 1], 1.5, r, theta) for r in (0.1, 0.05, 0.02, 0.01)])
