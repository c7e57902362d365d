# coding: utf-8

# # Inequality and second-order cone constraints
#
# The same solver handles Au <= b (the nonnegative orthant) and a norm-ball
# constraint written as a second-order cone.  Both instances ship with an
# independent reference solution, so we can see how close each method gets.

# %%

import numpy as np

from spdcl.core import quadratic_core
from spdcl.lagrangian import saddle_residual
from spdcl.model import feasibility_residual
from spdcl.problems import gen_inequality_qp, gen_soc_ls
from spdcl.solver import SolverConfig, run, run_many

core = quadratic_core()

# %% [markdown]
# ## Au <= b
#
# The reference comes from enumerating active sets, which is exact for a
# handful of constraints.  VAPP updates every block each iteration and,
# on this strongly convex instance, reaches the reference to machine
# precision.

# %%

prob, ref = gen_inequality_qp(n=6, m=3, N=3, seed=2)
print("active multipliers", ref.p_star)

vapp = run(prob, core, SolverConfig(variant="VAPP", max_iter=200_000, trace_stride=50_000))
print("VAPP distance to reference", np.abs(vapp.state.u - ref.u_star).max())

# %% [markdown]
# SPDCL uses one block per iteration.  Its averaged iterate is feasible to
# about 1e-4 after 1e5 iterations across 30 seeds.

# %%

spdcl = run_many(prob, core, SolverConfig(mu=10.0, max_iter=100_000, trace_stride=100_000), range(30))
print("mean feasibility of u_bar", np.mean([feasibility_residual(prob, r.u_bar) for r in spdcl]))

# %% [markdown]
# The saddle-point residual checks the optimality conditions directly: the
# variational inequality over random probes, feasibility, complementarity
# and membership of p in the dual cone.

# %%

probes = ref.u_star + np.random.default_rng(0).uniform(-2, 2, (200, prob.n))
print(saddle_residual(prob, vapp.state.u, vapp.state.p, 1.0, probes))

# %% [markdown]
# ## ||u|| <= 1 as a second-order cone
#
# Theta(u) = (-1, u) lies in -SOC exactly when the norm of u is at most 1.
# The reference here is projected gradient on the ball.

# %%

prob, ref = gen_soc_ls(n=5, seed=3)
res = run(prob, core, SolverConfig(mu=50.0, max_iter=200_000, trace_stride=50_000))
print("||u*||", np.linalg.norm(ref.u_star))
print("last iterate error", np.abs(res.state.u - ref.u_star).max())
print("objective gap of u_bar", prob.G.value(res.u_bar) - ref.F_star)
