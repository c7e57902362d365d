"""Core (Bregman generator) functions.

Only separable quadratics K(u) = 1/2 sum_j w_j u_j^2 are shipped; they keep
the block subproblem a plain prox step.
"""
from __future__ import annotations

import numpy as np

__all__ = ["CoreFunction", "quadratic_core", "weighted_quadratic_core",
           "bregman_D", "core_from_config", "core_to_config"]


class CoreFunction:
    """K(u) = 1/2 sum_j w_j u_j^2 with positive weights.

    ``beta`` (strong convexity) is the smallest weight and ``B`` (gradient
    Lipschitz constant) the largest.  When ``weights`` is None the unweighted
    generator is used for any dimension.
    """

    additive = True

    def __init__(self, weights=None):
        if weights is not None:
            weights = np.asarray(weights, dtype=float).reshape(-1)
            if weights.size == 0 or np.any(weights <= 0):
                raise ValueError("core weights must be positive")
        self.weights = weights

    @property
    def beta(self):
        return 1.0 if self.weights is None else float(self.weights.min())

    @property
    def B(self):
        return 1.0 if self.weights is None else float(self.weights.max())

    def w(self, n, sl=slice(None)):
        """Weights for coordinates ``sl`` of an n-vector."""
        if self.weights is None:
            return np.ones(n)[sl]
        if self.weights.size != n:
            raise ValueError(f"core has {self.weights.size} weights, problem has {n} coordinates")
        return self.weights[sl]

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * float(np.sum(self.w(u.size) * u * u))

    def gradient(self, u):
        u = np.asarray(u, dtype=float)
        return self.w(u.size) * u


def quadratic_core():
    return CoreFunction()


def weighted_quadratic_core(weights):
    return CoreFunction(weights)


def bregman_D(core: CoreFunction, u, v) -> float:
    """D(u, v) = K(u) - K(v) - <grad K(v), u - v>."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    d = u - v
    # closed form of the quadratic generator; exact zero at u == v
    return 0.5 * float(np.sum(core.w(d.size) * d * d))


def core_from_config(obj):
    """Parse ``"quadratic"`` or ``{"weighted_quadratic": [...]}``."""
    if obj in ("quadratic", {"quadratic": None}, None):
        return CoreFunction()
    if isinstance(obj, dict) and set(obj) == {"quadratic"}:
        return CoreFunction()
    if isinstance(obj, dict) and set(obj) == {"weighted_quadratic"}:
        return CoreFunction(obj["weighted_quadratic"])
    raise ValueError(f"unknown core specification {obj!r}")


def core_to_config(core):
    if core.weights is None:
        return "quadratic"
    return {"weighted_quadratic": core.weights.tolist()}
