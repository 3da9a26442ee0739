# %% [markdown]
# # Many users, few channels
#
# `N` users share `M` unreliable channels.  Each slot the scheduler ranks
# users by an index of their predicted state and polls the top `M`.  The
# figure of merit is the long-run empirical AoII averaged over users.
# All policies see the same channel and source randomness, so their
# differences are not sampling noise.

# %%
import numpy as np

from aoii_sched import SourceParams
from aoii_sched import closed_forms as cf
from aoii_sched.experiment import BUILTIN, run_scenario, to_csv
from aoii_sched.policies import PolicyKind
from aoii_sched.simulator import SimConfig, estimate_cost, occupancy_measure

# %% [markdown]
# ## One user under a fixed threshold
# The simulated occupancy of the predicted ladder matches its stationary law.

# %%
user = SourceParams(p=0.5, d=1.0, rho=0.5)
pmf = occupancy_measure(user, 2, 10**6, seed=1)
ref = cf.stationary_pmf(2, user.rho, len(pmf) - 1)
print("total variation:", 0.5 * np.abs(pmf - ref).sum())

# %% [markdown]
# ## Comparing policies
# The first class changes state rarely, the second often.  The
# information-aware index favours the volatile users, while the plain age
# index treats both classes alike.

# %%
classes = BUILTIN["paper-scenario-1"].classes
cfg = SimConfig(classes, N=20, alpha=0.5, horizon=20_000, seed=3)
for kind in PolicyKind:
    res = estimate_cost(cfg, kind, 10)
    print(f"{kind.value:12s} {res.avg_cost:8.3f} +- {res.stderr:.3f}   per class {res.class_costs.mean(axis=0).round(3)}")

# %% [markdown]
# ## A short sweep through the experiment runner
# The CSV has one row per replication and a mean and a standard-error row
# per `(N, policy)`.

# %%
from dataclasses import replace

sc = replace(BUILTIN["paper-scenario-2"], sweep=(4, 8), replications=3, horizon=10_000)
print(to_csv(run_scenario(sc)))
