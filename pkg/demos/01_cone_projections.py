# coding: utf-8

# # Cone projections and the smoothed penalty
#
# Everything in spdcl is driven by one operation: projecting onto the dual
# cone C*.  This script walks through the shipped cone families and checks
# the two facts the solver relies on, the Moreau split and the closed form
# of the smoothed penalty phi.

# %%

import numpy as np

from spdcl import cones
from spdcl.lagrangian import eval_phi, grad_phi_p

rng = np.random.default_rng(0)

# %% [markdown]
# A cone is a small immutable description.  Products nest, and the dual of
# a product is the product of the duals.

# %%

C = cones.Product([cones.Zero(1), cones.NonNegOrthant(2), cones.SecondOrder(3)])
print(C.dim, cones.dual_cone(C))

# %% [markdown]
# The second-order cone has a three-case closed form.  The point
# (0.5, 1, 0) sits outside both the cone and its polar, so it lands on the
# boundary at (0.75, 0.75, 0).

# %%

print(cones.project(cones.SecondOrder(3), [0.5, 1.0, 0.0]))

# %% [markdown]
# Moreau: any y splits into a piece in C* and a piece in -C, and the two
# pieces are orthogonal.

# %%

y = rng.standard_normal(C.dim) * 3
y_dual, y_neg = cones.moreau_split(C, y)
print("reconstruction error", np.linalg.norm(y - y_dual - y_neg))
print("inner product", y_dual @ y_neg)

# %% [markdown]
# The augmented Lagrangian uses
#
#     phi(theta, p) = (||Pi(p + gamma theta)||^2 - ||p||^2) / (2 gamma)
#
# which equals a minimization over a slack xi in -C.  For the orthant in
# one dimension the slack problem is easy to scan by brute force.

# %%

theta, p, gamma = np.array([-3.0]), np.array([1.0]), 1.0
xi = np.linspace(-10, 0, 100001)
slack = p[0] * (theta[0] - xi) + 0.5 * gamma * (theta[0] - xi) ** 2
print("closed form", eval_phi(cones.NonNegOrthant(1), theta, p, gamma), "scan", slack.min())

# %% [markdown]
# phi is smooth in p even though the projection has kinks; its gradient is
# (Pi(p + gamma theta) - p) / gamma.

# %%

h = 1e-6
fd = (eval_phi(cones.NonNegOrthant(1), theta, p + h, gamma)
      - eval_phi(cones.NonNegOrthant(1), theta, p - h, gamma)) / (2 * h)
print("analytic", grad_phi_p(cones.NonNegOrthant(1), theta, p, gamma), "finite difference", fd)
