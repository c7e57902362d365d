# coding: utf-8

# # Building a problem by hand
#
# The generators are convenient, but a ProblemSpec is just a bundle of
# oracles.  Here we set up a small sparse regression with a budget
# constraint, estimate the constants, run SPDCL, and save the instance so
# the command-line tool can pick it up.

# %%

import json
import os
import tempfile

import numpy as np

from spdcl import cones
from spdcl.core import quadratic_core
from spdcl.model import BlockStructure, ProblemSpec, estimate_constants, save_problem
from spdcl.oracles import LeastSquares, LinearMap, SeparableL1Box
from spdcl.solver import SolverConfig, run

rng = np.random.default_rng(5)
n, N = 12, 4
M = rng.standard_normal((30, n)) / np.sqrt(30)
truth = np.where(rng.random(n) < 0.4, 1.0 + rng.random(n), 0.0)
d = M @ truth + 0.05 * rng.standard_normal(30)

# %% [markdown]
# Each block gets its own l1 weight and box; the box is folded into the
# block's prox, so it never appears as a separate projection.  The single
# constraint sum(u) <= 1 is Au - b in -R_+.

# %%

blocks = BlockStructure.even(n, N)
J = [SeparableL1Box(3, lam=0.02, lower=-2.0, upper=2.0) for _ in range(N)]
prob = ProblemSpec(blocks=blocks, G=LeastSquares(M, d), J=J,
                   Phi=LinearMap(np.ones((1, n)), [1.0]), cone=cones.NonNegOrthant(1))

# %% [markdown]
# B_G and tau are missing.  For a quadratic G the estimate uses the exact
# Hessian; for a linear constraint map tau is the spectral norm of A.

# %%

prob = prob.with_constants(**vars(estimate_constants(prob, sample_count=50, rng_seed=0)))
print(prob.constants)

# %% [markdown]
# The planted coefficients sum to well above 1, so the budget binds and the
# multiplier settles at a positive value.

# %%

res = run(prob, quadratic_core(), SolverConfig(mu=20.0, max_iter=50_000, trace_stride=10_000))
for rec in res.trace:
    print(rec.k, f"F(u_bar)={rec.avg_objective:.6f}", f"feas={rec.avg_feasibility:.2e}")
print("sum(truth) =", truth.sum(), " sum(u_bar) =", res.u_bar.sum())
print("multiplier of the budget", res.state.p)

# %% [markdown]
# Saved instances are plain JSON and can be referenced from a config file
# with {"problem": {"path": ...}}.

# %%

path = os.path.join(tempfile.mkdtemp(), "budget_lasso.json")
save_problem(path, prob)
print(path, sorted(json.load(open(path))))
