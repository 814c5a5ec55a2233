"""
Truncated weights
=================

Capping every edge weight at ``k ** alpha`` gives a passage time that is
monotone in ``k`` and agrees with the uncapped one whenever the cap never
bites on the capped geodesic.
"""

# %%
from fpplab import LatticeBox, Pareto, Truncation, WeightModel, passage_time
from fpplab.theory import default_alpha

alpha = default_alpha(2)
print("alpha for d=2:", alpha)
model = WeightModel.iid(Pareto(2.5, 0.5), dim=2, seed=7)
box = LatticeBox(2, 48)

# %%
# The truncated value climbs towards the full value as the level grows.
real = model.realization(0)
full = passage_time(real, box, (0, 0), (12, 0))
for k in (1, 2, 6, 12, 24, 144):
    t = passage_time(real, box, (0, 0), (12, 0), Truncation(k, alpha))
    print(f"k={k:4d} cap={t.truncation.cap:6.3f} value={t.value:8.4f}")
print(f"untruncated      value={full.value:8.4f}")

# %%
# Hunting for realizations where a heavy edge (weight at least n^alpha)
# sits on the truncated geodesic.  Every one of its 2d detours must then
# cost at least half the cap, or the geodesic would have avoided it.
from fpplab import detour_paths
from fpplab.geodesic import path_passage_time

n = 8
cap = Truncation(n, alpha).cap
found = 0
for r in range(1500):
    real = model.realization(r)
    t = passage_time(real, box, (0, 0), (n, 0), Truncation(n, alpha))
    heavy = [e for e, w in zip(t.path.edges, t.raw_weights) if w >= cap]
    for e in heavy:
        costs = [round(path_passage_time(real, p), 3) for p in detour_paths(e, box)]
        print(f"replication {r}: heavy edge {e.lower}/{e.axis}, detour costs {costs}, cap {cap:.3f}")
        found += 1
print(found, "heavy geodesic edges seen")

# %%
# The four detours around an edge in the plane: the edge, two 3-edge
# bypasses and a 9-edge loop, all pairwise edge-disjoint.
from fpplab import EdgeRef

for p in detour_paths(EdgeRef((0, 0), 0)):
    print(len(p), p.vertices)
