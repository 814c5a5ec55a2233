"""
Non-identical weights
=====================

Edges need not share a distribution.  Here even and odd edges (by the
coordinate sum of their lower endpoint) draw from different families, and
the constants are taken in the worst case over families.
"""

# %%
from fpplab import Exponential, Uniform, WeightModel
from fpplab.theory import model_constants, validate_conditions

model = WeightModel.parity(Uniform(0.5, 1.5), Exponential(1.0), dim=2, seed=5)
for line in validate_conditions(model).lines():
    print(line)
for k, v in model_constants(model).as_items():
    print(f"{k:18s} {v!r}")

# %%
# Axis-dependent weights: horizontal edges are slow, vertical ones fast.
# The geodesic to (n, 0) takes a detour through fast vertical edges only
# when it pays off.
from fpplab import LatticeBox, passage_time

axis = WeightModel.axis_dependent([Uniform(1.0, 3.0), Uniform(0.2, 0.4)], seed=2)
res = passage_time(axis.realization(0), LatticeBox(2, 40), (0, 0), (10, 0))
print(res.value, res.length, "edges, vertical:", sum(e.axis == 1 for e in res.path.edges))

# %%
# Subsequence diagnostics along squares for the parity model.
from fpplab.experiments import ExperimentPlan, run_plan, subsequence_diagnostics

plan = ExperimentPlan(model, n_list=(9, 16), replications=200, squares=(4, 9, 16))
for q in subsequence_diagnostics(run_plan(plan)):
    print(f"n^2={q.n:3d}  mean I = {q.mean_I:.5f}  P(I>0) = {q.freq_I_positive:.3f}  "
          f"mean |S|/n^2 = {q.mean_abs_S_ratio:.4f}  Lipschitz violations {q.lipschitz_violations}")
