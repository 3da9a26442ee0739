# %% [markdown]
# # The single-user dual problem by relative value iteration
#
# Pricing each transmission at `W` turns scheduling into a one-user
# average-cost MDP.  Its optimal policy is a threshold that grows with `W`,
# and the price at which the threshold steps from `n` to `n+1` is the
# Whittle index.  Nothing below uses the closed forms except the final
# comparison.

# %%
import numpy as np

from aoii_sched import SourceParams
from aoii_sched import closed_forms as cf
from aoii_sched.mdp import extract_threshold, solve_dual, threshold_boundary

params = SourceParams(p=0.8, d=5.0, rho=0.5)

# %%
for W in (0.5, 8.001, 30.0, 100.0, 1000.0):
    res = solve_dual(params, W)
    n = extract_threshold(res)
    print(f"W={W:8.3f}  threshold={n:2d}  gain={res.theta:9.4f}  iterations={res.iterations}")

# %% [markdown]
# At the optimum the gain is the average cost of the threshold policy plus
# `W` times its active fraction.

# %%
res = solve_dual(params, 30.0)
n = extract_threshold(res)
print(res.theta, cf.avg_aoii(n, params) + 30.0 * cf.avg_active(n, params.rho))

# %% [markdown]
# ## Switch points against the index

# %%
for n in (0, 1, 2, 5):
    W = threshold_boundary(params, n)
    print(f"n={n}: bisection {W:.6f}   closed form {cf.whittle_aoii(n, params):.6f}")
