"""
Means, variances and the time constant
======================================

A small Monte Carlo plan for i.i.d. exponential weights.  Replication r
always sees the same weights, whatever the worker count.
"""

# %%
from fpplab import Exponential, WeightModel
from fpplab.experiments import ExperimentPlan, run_plan

plan = ExperimentPlan(WeightModel.iid(Exponential(1.0), dim=2, seed=1), n_list=(4, 8, 16, 32),
                      replications=300)
rep = run_plan(plan)
print(rep.to_csv())

# %%
# E T_n / n should not increase along doublings, and var(T_n) / n should
# stay bounded.
for s in rep.stats:
    print(f"n={s.n:3d}  E T/n = {s.mean_ratio:.4f} +- {s.se_ratio:.4f}   "
          f"var/n = {s.var_over_n:.4f}   mean length/n = {s.len_ratio:.3f}")

# %%
# The estimate of the time constant sits between the Chernoff lower bound
# beta1/4 (tiny for exponential weights) and the mean weight.
m = rep.mu_F
print(f"estimate {m.estimate:.4f}, 3-SE interval ({m.ci[0]:.4f}, {m.ci[1]:.4f})")
print(f"bracket [{m.lower:.3g}, {m.upper}] ok: {m.bracket_ok}, monotone means: {m.monotone}")
