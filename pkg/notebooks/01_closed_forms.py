# %% [markdown]
# # Threshold policies in closed form
#
# A single user is described by its jump probability `p`, state spacing `d`
# and channel success probability `rho`.  Under a threshold policy `n` the
# predicted ladder state has a known stationary law, and the average
# penalty, the average active time and the Whittle indices all have
# closed forms.  This script compares each one with a numerical oracle
# computed along a different route.

# %%
import numpy as np

from aoii_sched import SourceParams
from aoii_sched import closed_forms as cf
from aoii_sched import verification as ver

params = SourceParams(p=0.8, d=5.0, rho=0.5)

# %% [markdown]
# ## Stationary law
# The closed-form pmf against a direct linear solve of the truncated chain.

# %%
for n in (0, 2, 5):
    J = cf.truncation_index(n, params.rho)
    closed = cf.stationary_pmf(n, params.rho, J)
    direct = ver.solve_balance(n, params.rho, J)
    print(f"n={n}: J={J}, max |closed - direct| = {np.max(np.abs(closed - direct)):.2e}")

# %% [markdown]
# ## Averages and indices
# The index at `n` is the price at which thresholds `n` and `n+1` cost the
# same, which is the ratio of finite differences checked below.

# %%
print(" n   avg AoII   series     active   W_aoii    intersection")
for n in range(6):
    print(f"{n:2d} {cf.avg_aoii(n, params):9.4f} {ver.series_average(n, params):9.4f} "
          f"{cf.avg_active(n, params.rho):8.4f} {cf.whittle_aoii(n, params):9.3f} "
          f"{cf.whittle_intersection(n, params, cf.Metric.AOII):12.3f}")

# %% [markdown]
# ## Indexability
# The index must increase strictly with the state.

# %%
print(cf.check_indexability(params, n_max=200))
for check in ver.run_suite("indexability"):
    print(check.line())
