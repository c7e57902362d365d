"""Lagrangian, augmented Lagrangian and saddle-point residuals.

Throughout, ``Pi`` is the projection onto the dual cone C* and

    phi(theta, p) = (||Pi(p + gamma*theta)||^2 - ||p||^2) / (2*gamma)

is the smoothed penalty of the augmented Lagrangian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cones
from .model import eval_objective, eval_theta, eval_J, feasibility_residual

__all__ = [
    "SaddleResidual",
    "eval_L",
    "eval_phi",
    "grad_phi_p",
    "grad_phi_theta",
    "eval_L_gamma",
    "saddle_residual",
]


def _check_p(prob, p):
    p = np.asarray(p, dtype=float)
    if p.shape != (prob.m,):
        raise ValueError(f"p has shape {p.shape}, expected ({prob.m},)")
    return p


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")


def eval_L(prob, u, p) -> float:
    """L(u, p) = F(u) + <p, Theta(u)>."""
    p = _check_p(prob, p)
    return eval_objective(prob, u) + float(p @ eval_theta(prob, u))


def eval_phi(cone, theta, p, gamma) -> float:
    _check_gamma(gamma)
    theta = np.asarray(theta, dtype=float)
    p = np.asarray(p, dtype=float)
    q = cones.project_dual(cone, p + gamma * theta)
    return float((q @ q - p @ p) / (2.0 * gamma))


def grad_phi_p(cone, theta, p, gamma) -> np.ndarray:
    _check_gamma(gamma)
    p = np.asarray(p, dtype=float)
    return (cones.project_dual(cone, p + gamma * np.asarray(theta, dtype=float)) - p) / gamma


def grad_phi_theta(cone, theta, p, gamma) -> np.ndarray:
    _check_gamma(gamma)
    return cones.project_dual(cone, np.asarray(p, dtype=float) + gamma * np.asarray(theta, dtype=float))


def eval_L_gamma(prob, u, p, gamma) -> float:
    """Augmented Lagrangian F(u) + phi(Theta(u), p)."""
    p = _check_p(prob, p)
    return eval_objective(prob, u) + eval_phi(prob.cone, eval_theta(prob, u), p, gamma)


@dataclass(frozen=True)
class SaddleResidual:
    stationarity: float
    primal_feasibility: float
    complementarity: float
    dual_cone_violation: float

    def max(self):
        return max(self.stationarity, self.primal_feasibility,
                   self.complementarity, self.dual_cone_violation)


def saddle_residual(prob, u, p, gamma, probe_points) -> SaddleResidual:
    """Residuals of the saddle-point conditions at ``(u, p)``.

    Stationarity is checked through the variational inequality

        <grad G(u), v - u> + J(v) - J(u) + <p, Theta(v) - Theta(u)> >= 0

    over the finite set ``probe_points``; a positive residual is a genuine
    violation, a zero residual is only as strong as the probe set.
    ``gamma`` is accepted for interface symmetry and unused.
    """
    probes = [np.asarray(v, dtype=float) for v in probe_points]
    if not probes:
        raise ValueError("probe set must be nonempty")
    u = np.asarray(u, dtype=float)
    p = _check_p(prob, p)
    grad = prob.G.gradient(u)
    J_u = eval_J(prob, u)
    theta_u = eval_theta(prob, u)
    worst = 0.0
    for v in probes:
        J_v = eval_J(prob, v)
        if not np.isfinite(J_v):
            continue
        lhs = grad @ (v - u) + J_v - J_u + p @ (eval_theta(prob, v) - theta_u)
        worst = max(worst, -float(lhs))
    return SaddleResidual(
        stationarity=worst,
        primal_feasibility=feasibility_residual(prob, u),
        complementarity=abs(float(p @ theta_u)),
        dual_cone_violation=float(np.linalg.norm(p - cones.project_dual(prob.cone, p))),
    )
