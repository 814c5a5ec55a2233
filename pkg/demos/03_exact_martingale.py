"""
Exact martingale decomposition
==============================

In B_1 of the plane there are 12 edges.  With two-point weights that is
4096 configurations, few enough to compute every conditional expectation
exactly with rational arithmetic.
"""

# %%
from fpplab import LatticeBox, TwoPoint
from fpplab.oracle import DiscreteProductSpace, exact_martingale

space = DiscreteProductSpace(LatticeBox(2, 1), TwoPoint(1.0, 4.0, 0.5))
rep = exact_martingale(space, (0, 0), (1, 0))
print("E U =", rep.mean, " Var U =", rep.variance, " exact:", rep.exact)

# %%
# Revealing edges one at a time gives increments X_l.  They telescope to
# U - E U, are orthogonal, and their second moments add up to the variance.
print("telescoping residual", rep.telescoping_residual)
print("largest |E X_i X_j|", rep.max_cross_moment)
print("variance identity residual", rep.variance_identity_residual)

# %%
# Each increment is controlled by how often its edge lies on the geodesic.
for e, x2, p in zip(rep.edges, rep.second_moments, rep.membership):
    print(f"edge {e.lower}/{e.axis}: E X^2 = {x2:.5f}  P(on geodesic) = {p:.5f}  "
          f"bound {rep.C1 * p:.4f}")
