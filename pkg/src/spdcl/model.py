"""Problem instances: min G(u) + sum_i J_i(u_i) s.t. Omega(u) + Phi(u) in -C.

The block structure splits u into N consecutive blocks.  Constants follow
the usual assumptions for primal-dual methods on this class: ``B_G`` is the
gradient Lipschitz constant of G, ``tau`` the Lipschitz constant of the
constraint map, ``T_bar`` a scalar curvature bound for Omega and ``c1, c2``
the linear growth of the subgradients of J.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import cones
from .oracles import (LinearMap, ZeroMap, map_from_dict, regularizer_from_dict,
                      smooth_from_dict)

__all__ = [
    "BlockStructure",
    "Constants",
    "ProblemSpec",
    "UnsupportedProblemError",
    "eval_objective",
    "eval_theta",
    "feasibility_residual",
    "estimate_constants",
    "spectral_norm",
    "problem_to_dict",
    "problem_from_dict",
    "save_problem",
    "load_problem",
]


class UnsupportedProblemError(ValueError):
    """The instance needs a capability the shipped solvers do not provide."""


@dataclass(frozen=True)
class BlockStructure:
    block_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes:
            raise ValueError("need at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)

    @classmethod
    def even(cls, n, N):
        """Split n coordinates into N blocks of equal size."""
        if N < 1 or n % N:
            raise ValueError(f"cannot split {n} coordinates into {N} equal blocks")
        return cls((n // N,) * N)

    @property
    def N(self):
        return len(self.block_sizes)

    @property
    def n(self):
        return sum(self.block_sizes)

    @property
    def offsets(self):
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.block_sizes)]))

    def slice(self, i):
        off = self.offsets
        return slice(off[i], off[i + 1])


@dataclass(frozen=True)
class Constants:
    """Analytic constants; ``None`` marks a value still to be estimated."""

    B_G: Optional[float] = None
    tau: Optional[float] = None
    T_bar: Optional[float] = None
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        for name in ("B_G", "tau", "T_bar", "c1", "c2"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ValueError(f"constant {name} must be nonnegative, got {v}")

    @property
    def complete(self):
        return None not in (self.B_G, self.tau, self.T_bar)


@dataclass(frozen=True)
class ProblemSpec:
    """A composite optimization problem with a composite cone constraint.

    ``J`` holds one regularizer per block; its ``prox`` must already include
    the indicator of the block's feasible set U_i.  ``Phi`` is normally a
    :class:`~spdcl.oracles.LinearMap`; any other object with ``value(u)``
    and ``block_value(i, u_i)`` is accepted but then ``block_solver`` must be
    supplied (see :func:`spdcl.subproblem.solve_block`).
    """

    blocks: BlockStructure
    G: object
    J: tuple
    Phi: object
    cone: cones.ConeSpec
    Omega: object = None
    constants: Constants = field(default_factory=Constants)
    block_solver: Optional[Callable] = None

    def __post_init__(self):
        n, m = self.blocks.n, self.cone.dim
        object.__setattr__(self, "J", tuple(self.J))
        if len(self.J) != self.blocks.N:
            raise ValueError(f"need one J_i per block ({self.blocks.N}), got {len(self.J)}")
        if self.Omega is None:
            object.__setattr__(self, "Omega", ZeroMap(n, m))
        if isinstance(self.Phi, LinearMap) and self.Phi.A.shape != (m, n):
            raise ValueError(f"A has shape {self.Phi.A.shape}, expected {(m, n)}")

    @property
    def n(self):
        return self.blocks.n

    @property
    def m(self):
        return self.cone.dim

    @property
    def N(self):
        return self.blocks.N

    @property
    def linear_phi(self):
        return getattr(self.Phi, "linear", False)

    @property
    def omega_is_zero(self):
        return getattr(self.Omega, "is_zero", False)

    def block_A(self, i):
        return self.Phi.A[:, self.blocks.slice(i)]

    def block_gradient(self, u, i):
        if hasattr(self.G, "block_gradient"):
            return self.G.block_gradient(u, i)
        return self.G.gradient(u)[self.blocks.slice(i)]

    def block_adjoint(self, u, i, q):
        """(grad_i Omega(u))^T q."""
        if hasattr(self.Omega, "block_adjoint"):
            return self.Omega.block_adjoint(u, i, q)
        return self.Omega.adjoint(u, q)[self.blocks.slice(i)]

    def with_constants(self, **kw):
        return replace(self, constants=replace(self.constants, **kw))


def _check_u(prob, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (prob.n,):
        raise ValueError(f"u has shape {u.shape}, expected ({prob.n},)")
    return u


def eval_J(prob, u):
    return sum(Ji.value(u[prob.blocks.slice(i)]) for i, Ji in enumerate(prob.J))


def eval_objective(prob: ProblemSpec, u) -> float:
    """F(u) = G(u) + sum J_i(u_i); ``inf`` when u leaves the domain of J."""
    u = _check_u(prob, u)
    j = eval_J(prob, u)
    if not np.isfinite(j):
        return np.inf
    return float(prob.G.value(u) + j)


def eval_phi_map(prob, u):
    if prob.linear_phi:
        return prob.Phi.value(u)
    return sum(prob.Phi.block_value(i, u[prob.blocks.slice(i)]) for i in range(prob.N))


def eval_theta(prob: ProblemSpec, u) -> np.ndarray:
    """Theta(u) = Omega(u) + Phi(u)."""
    u = _check_u(prob, u)
    return np.asarray(prob.Omega.value(u), dtype=float) + eval_phi_map(prob, u)


def feasibility_residual(prob: ProblemSpec, u) -> float:
    """||Pi_{C*}(Theta(u))||, zero exactly when Theta(u) lies in -C."""
    return float(np.linalg.norm(cones.project_dual(prob.cone, eval_theta(prob, u))))


def spectral_norm(M, tol=1e-8, max_iter=100000, seed=0) -> float:
    """Largest singular value of ``M`` by power iteration on M^T M.

    Iterates until the eigen-residual ||M^T M x - lam x|| drops below
    ``tol * lam``; the Rayleigh quotient is then accurate to well below ``tol``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.any(M):
        return 0.0
    x = np.random.default_rng(seed).standard_normal(M.shape[1])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = M.T @ (M @ x)
        lam = float(x @ y)
        if lam == 0.0:
            return 0.0
        if np.linalg.norm(y - lam * x) <= tol * lam:
            break
        x = y / np.linalg.norm(y)
    return float(np.sqrt(lam))


def _omega_jacobian(prob, u):
    if hasattr(prob.Omega, "jacobian"):
        return np.asarray(prob.Omega.jacobian(u))
    eye = np.eye(prob.m)
    return np.stack([prob.Omega.adjoint(u, e) for e in eye])


def estimate_constants(prob: ProblemSpec, sample_count: int, rng_seed: int,
                       box=(-1.0, 1.0)) -> Constants:
    """Fill missing constants with empirical lower estimates.

    Points are drawn uniformly from ``box`` (a pair of scalars or arrays).
    Values already set on ``prob.constants`` are returned unchanged.

    For a linear Phi with zero Omega, ``tau`` is the exact spectral norm of
    A; for zero Omega, ``T_bar`` is 0.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    rng = np.random.default_rng(rng_seed)
    lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (prob.n,)) for b in box)
    pts = rng.uniform(lo, hi, size=(sample_count, prob.n))
    pairs = list(zip(pts[:-1], pts[1:]))
    ratio = lambda f: max(np.linalg.norm(f(u) - f(v)) / np.linalg.norm(u - v) for u, v in pairs)

    user = prob.constants
    B_G = user.B_G
    if B_G is None:
        if hasattr(prob.G, "hessian"):
            B_G = spectral_norm(prob.G.hessian())
        else:
            B_G = float(ratio(prob.G.gradient))
    tau = user.tau
    if tau is None:
        if prob.omega_is_zero and prob.linear_phi:
            tau = spectral_norm(prob.Phi.A)
        else:
            tau = float(ratio(lambda x: eval_theta(prob, x)))
    T_bar = user.T_bar
    if T_bar is None:
        if prob.omega_is_zero:
            T_bar = 0.0
        elif hasattr(prob.Omega, "curvature_bound"):
            T_bar = float(np.linalg.norm(cones.project(prob.cone, prob.Omega.curvature_bound())))
        else:
            best = 0.0
            for u, v in pairs:
                d = u - v
                curv = (_omega_jacobian(prob, u) - _omega_jacobian(prob, v)) @ d / (d @ d)
                best = max(best, float(np.linalg.norm(cones.project(prob.cone, curv))))
            T_bar = best
    return Constants(B_G=float(B_G), tau=float(tau), T_bar=float(T_bar), c1=user.c1, c2=user.c2)


# -- serialization ---------------------------------------------------------

def problem_to_dict(prob: ProblemSpec, reference=None) -> dict:
    if not prob.linear_phi:
        raise UnsupportedProblemError("only linear Phi instances can be serialized")
    for obj in (prob.G, prob.Omega, *prob.J):
        if not hasattr(obj, "to_dict"):
            raise UnsupportedProblemError(f"{type(obj).__name__} is not serializable")
    c = prob.constants
    out = {
        "block_sizes": list(prob.blocks.block_sizes),
        "cone": cones.cone_to_dict(prob.cone),
        "G": prob.G.to_dict(),
        "J": [Ji.to_dict() for Ji in prob.J],
        "Omega": prob.Omega.to_dict(),
        "Phi": prob.Phi.to_dict(),
        "constants": {"B_G": c.B_G, "tau": c.tau, "T_bar": c.T_bar, "c1": c.c1, "c2": c.c2},
    }
    if reference is not None:
        out["reference"] = reference.to_dict()
    return out


def problem_from_dict(obj: dict):
    """Inverse of :func:`problem_to_dict`; returns ``(prob, reference_or_None)``."""
    from .problems import ReferenceSolution

    if obj["Phi"]["type"] != "linear":
        raise UnsupportedProblemError("only linear Phi instances can be loaded")
    prob = ProblemSpec(
        blocks=BlockStructure(tuple(obj["block_sizes"])),
        G=smooth_from_dict(obj["G"]),
        J=[regularizer_from_dict(j) for j in obj["J"]],
        Phi=LinearMap(obj["Phi"]["A"], obj["Phi"]["b"]),
        cone=cones.cone_from_dict(obj["cone"]),
        Omega=map_from_dict(obj["Omega"]),
        constants=Constants(**obj["constants"]),
    )
    ref = obj.get("reference")
    return prob, (ReferenceSolution.from_dict(ref) if ref else None)


def save_problem(path, prob: ProblemSpec, reference=None):
    with open(path, "w") as fh:
        json.dump(problem_to_dict(prob, reference), fh, indent=1)
        fh.write("\n")


def load_problem(path):
    with open(path) as fh:
        return problem_from_dict(json.load(fh))
