"""
Geodesics in a box
==================

Shortest passage times between two lattice points, the path that attains
them, and what happens when several paths tie.
"""

# %%
# With every edge weight equal to one, the geodesic from the origin to
# (n, 0) is the straight segment and the passage time is n.
from fpplab import LatticeBox, PointMass, WeightModel, passage_time

flat = WeightModel.iid(PointMass(1.0), dim=2).realization(0)
res = passage_time(flat, LatticeBox(2, 8), (0, 0), (5, 0))
print(res.value, res.path)

# %%
# Going to (1, 1) there are two optimal two-step paths.  The tie is broken
# edge by edge from the source: the first edge whose centre has the smaller
# second coordinate wins, so we go along the x axis first.
res = passage_time(flat, LatticeBox(2, 2), (0, 0), (1, 1))
print(res.value, res.path, "tie broken:", res.tie_broken)

# %%
# Explicit weights make small cases easy to reason about.  Raising the first
# axis edge to 4 makes the two 3-edge detours optimal; the lower one wins.
import numpy as np

from fpplab import FixedWeights, axis_edge

box = LatticeBox(2, 1)
w = np.ones(box.n_edges)
w[box.encode_edge(axis_edge(1, 2))] = 4.0
print(passage_time(FixedWeights(box, w), box, (0, 0), (1, 0)).path)

# %%
# The search is checked against exhaustive enumeration of every
# self-avoiding path in the box.  In B_2 there are 4459 of them from the
# origin to (2, 0).
from fpplab import TwoPoint
from fpplab.oracle import brute_force_passage, enumerate_paths

print(len(enumerate_paths(LatticeBox(2, 2), (0, 0), (2, 0)).paths), "paths")
model = WeightModel.iid(TwoPoint(1.0, 4.0, 0.5), dim=2, seed=1)
agree = 0
for r in range(50):
    real = model.realization(r)
    fast = passage_time(real, LatticeBox(2, 2), (0, 0), (2, 0))
    agree += (fast.value, fast.path) == brute_force_passage(LatticeBox(2, 2), (0, 0), (2, 0), real)
print(f"{agree}/50 realizations agree on value and path")

# %%
# For continuous weights ties have probability zero.  Any box is only a
# proxy for the whole lattice; when the essential infimum of the weights is
# positive, a path leaving the box can be ruled out and the result is
# certified.
from fpplab import Exponential, Uniform

for spec in (Uniform(0.5, 1.5), Exponential(1.0)):
    real = WeightModel.iid(spec, 2, seed=3).realization(0)
    res = passage_time(real, LatticeBox(2, 40), (0, 0), (10, 0))
    print(spec.to_string(), round(res.value, 4), "edges:", res.length,
          "certified:", res.certified_unbounded)
