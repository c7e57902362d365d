"""Exact solution of the per-block primal subproblem.

For block i the subproblem is

    min_{x in U_i}  <g_i, x> + J_i(x) + D_i(x, anchor) / eps

where g_i collects the gradient of G, the adjoint of grad Omega applied to
the current multiplier estimate q and, for linear Phi, A_i^T q.  With the
quadratic core this is one prox step of the fused J_i + indicator(U_i).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import UnsupportedProblemError

__all__ = ["BlockWorkItem", "assemble_work_item", "solve_block", "update_block"]


@dataclass(frozen=True)
class BlockWorkItem:
    i: int
    g: np.ndarray
    epsilon: float
    anchor: np.ndarray
    # multiplier estimate, kept for custom hooks on nonlinear Phi
    q: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"step epsilon must be positive, got {self.epsilon}")
        if np.shape(self.g) != np.shape(self.anchor):
            raise ValueError("g and anchor must have the same length")


def assemble_work_item(prob, u_k, q_k, i, epsilon_k) -> BlockWorkItem:
    """Collect the linear tilt of block ``i``'s subproblem at ``(u_k, q_k)``."""
    u_k = np.asarray(u_k, dtype=float)
    q_k = np.asarray(q_k, dtype=float)
    if q_k.shape != (prob.m,):
        raise ValueError(f"q has shape {q_k.shape}, expected ({prob.m},)")
    if u_k.shape != (prob.n,):
        raise ValueError(f"u has shape {u_k.shape}, expected ({prob.n},)")
    g = prob.block_gradient(u_k, i)
    if not prob.omega_is_zero:
        g = g + prob.block_adjoint(u_k, i, q_k)
    if prob.linear_phi:
        g = g + prob.block_A(i).T @ q_k
    return BlockWorkItem(i, np.asarray(g, dtype=float), float(epsilon_k),
                         u_k[prob.blocks.slice(i)].copy(), q_k)


def solve_block(prob, core, item: BlockWorkItem) -> np.ndarray:
    """Return the unique minimizer of block ``item.i``'s subproblem.

    Raises
    ------
    UnsupportedProblemError
        If Phi is not linear and no ``block_solver`` hook is registered on
        the problem.  A hook is called as
        ``hook(prob, core, item)`` and must return the exact minimizer of
        ``<item.g, x> + <item.q, Phi_i(x)> + J_i(x) + D_i(x, anchor)/eps``.
    """
    if not prob.linear_phi:
        if prob.block_solver is None:
            raise UnsupportedProblemError(
                "nonlinear Phi needs a block_solver hook for the block subproblem")
        return np.asarray(prob.block_solver(prob, core, item), dtype=float)
    w = core.w(prob.n, prob.blocks.slice(item.i))
    step = item.epsilon / w
    return prob.J[item.i].prox(item.anchor - step * item.g, step)


def update_block(prob, core, u_k, q_k, i, epsilon_k) -> np.ndarray:
    """Full-vector update: block ``i`` re-solved, every other entry copied."""
    u_new = np.array(u_k, dtype=float)
    item = assemble_work_item(prob, u_k, q_k, i, epsilon_k)
    u_new[prob.blocks.slice(i)] = solve_block(prob, core, item)
    return u_new
