"""Reproducible synthetic instances with independently computed references.

Each generator returns ``(ProblemSpec, ReferenceSolution or None)``.  The
reference never comes from the solvers in this package: equality QPs use a
dense KKT solve, inequality QPs enumerate active sets, and the norm-ball
least-squares instance uses projected gradient.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from . import cones
from .model import BlockStructure, Constants, ProblemSpec, spectral_norm
from .oracles import LeastSquares, LinearMap, Quadratic, SeparableL1Box

__all__ = ["ReferenceSolution", "GenerationError", "gen_equality_qp", "gen_inequality_qp",
           "gen_soc_ls", "equality_toy", "inequality_toy", "GENERATORS"]

MAX_ENUM_CONSTRAINTS = 12
MAX_DIM = 200
MAX_ROWS = 50


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReferenceSolution:
    u_star: np.ndarray
    p_star: np.ndarray
    F_star: float
    provenance: str

    def to_dict(self):
        return {"u_star": self.u_star.tolist(), "p_star": self.p_star.tolist(),
                "F_star": self.F_star, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, obj):
        return cls(np.asarray(obj["u_star"], dtype=float), np.asarray(obj["p_star"], dtype=float),
                   float(obj["F_star"]), obj["provenance"])


def _check_sizes(n, m, N):
    if not (1 <= n <= MAX_DIM and 1 <= m <= MAX_ROWS):
        raise ValueError(f"desk-scale instances need 1 <= n <= {MAX_DIM}, 1 <= m <= {MAX_ROWS}")
    if N < 1 or n % N:
        raise ValueError(f"n={n} is not divisible into N={N} blocks")


def _random_spd(rng, n, cond=4.0):
    """Symmetric positive definite matrix with eigenvalues in [1/cond, 1]."""
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(1.0 / cond, 1.0, size=n)
    eig[0], eig[-1] = 1.0 / cond, 1.0
    Q = (basis * eig) @ basis.T
    return 0.5 * (Q + Q.T)


def _kkt_solve(Q, c, A, b):
    n, m = Q.shape[0], A.shape[0]
    K = np.block([[Q, A.T], [A, np.zeros((m, m))]])
    rhs = np.concatenate([-c, b])
    sol = np.linalg.solve(K, rhs)
    resid = np.linalg.norm(K @ sol - rhs) / max(1.0, np.linalg.norm(rhs))
    return sol[:n], sol[n:], resid


def _constants(Q, A):
    return Constants(B_G=spectral_norm(Q), tau=spectral_norm(A), T_bar=0.0)


def _blocks_J(n, N, lam=0.0, lower=-np.inf, upper=np.inf):
    blocks = BlockStructure.even(n, N)
    return blocks, [SeparableL1Box(s, lam, lower, upper) for s in blocks.block_sizes]


def gen_equality_qp(n, m, N, seed, Q=None, c=None, A=None, b=None):
    """min 1/2 u'Qu + c'u  s.t.  Au = b  (cone C = {0}).

    Matrices not passed explicitly are drawn from ``seed``: Q has
    eigenvalues in [1/4, 1], A is Gaussian scaled by 1/sqrt(n).  A rank
    deficient A triggers a redraw with ``seed + 1`` (up to 10 attempts).
    """
    _check_sizes(n, m, N)
    if m >= n:
        raise ValueError("equality instances need m < n")
    for attempt in range(10):
        rng = np.random.default_rng(seed + attempt)
        Q_ = _random_spd(rng, n) if Q is None else np.asarray(Q, dtype=float)
        c_ = rng.standard_normal(n) if c is None else np.asarray(c, dtype=float)
        A_ = rng.standard_normal((m, n)) / np.sqrt(n) if A is None else np.asarray(A, dtype=float)
        b_ = rng.standard_normal(m) if b is None else np.asarray(b, dtype=float)
        if np.linalg.matrix_rank(A_) == m:
            break
        if A is not None:
            raise GenerationError("supplied A is rank deficient")
    else:
        raise GenerationError(f"no full-row-rank A after 10 attempts from seed {seed}")
    u_s, p_s, resid = _kkt_solve(Q_, c_, A_, b_)
    if resid > 1e-10:
        raise GenerationError(f"KKT solve residual {resid:.3e} exceeds 1e-10")
    blocks, J = _blocks_J(n, N)
    G = Quadratic(Q_, c_)
    prob = ProblemSpec(blocks=blocks, G=G, J=J, Phi=LinearMap(A_, b_), cone=cones.Zero(m),
                       constants=_constants(Q_, A_))
    return prob, ReferenceSolution(u_s, p_s, G.value(u_s), "analytic" if n <= 2 else "reference_solver")


def equality_toy():
    """min 1/2 ||u||^2 s.t. u1 + u2 = 1, two scalar blocks; u* = (1/2, 1/2)."""
    return gen_equality_qp(2, 1, 2, 0, Q=np.eye(2), c=np.zeros(2), A=[[1.0, 1.0]], b=[1.0])


def _active_set_reference(Q, c, A, b, lam, tol=1e-9):
    """Exact solution of min 1/2u'Qu + c'u + lam||u||_1 s.t. Au <= b by enumeration.

    Every combination of active constraints (and, for lam > 0, of signs of
    the coordinates) is tried; the first candidate satisfying all
    optimality conditions is the unique solution.
    """
    n, m = Q.shape[0], A.shape[0]
    states = (-1, 0, 1) if lam > 0 else (None,)
    subsets = [s for r in range(m + 1) for s in itertools.combinations(range(m), r)]
    scale = 1.0 + np.abs(b).max() + np.abs(c).max()
    for signs in itertools.product(states, repeat=n if lam > 0 else 1):
        if lam > 0:
            free = np.array([s != 0 for s in signs])
            sgn = np.array([0.0 if s is None else float(s) for s in signs])
        else:
            free = np.ones(n, dtype=bool)
            sgn = np.zeros(n)
        F = np.flatnonzero(free)
        for S in subsets:
            S = list(S)
            AS = A[np.ix_(S, F)]
            K = np.block([[Q[np.ix_(F, F)], AS.T], [AS, np.zeros((len(S), len(S)))]])
            rhs = np.concatenate([-(c[F] + lam * sgn[F]), b[S]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            u = np.zeros(n)
            u[F] = sol[:len(F)]
            p = np.zeros(m)
            p[S] = sol[len(F):]
            if np.any(p < -tol * scale) or np.any(A @ u - b > tol * scale):
                continue
            if lam > 0:
                if np.any(u[F] * sgn[F] < -tol * scale):
                    continue
                g = Q @ u + c + A.T @ p
                if np.any(np.abs(g[~free]) > lam + tol * scale):
                    continue
            return u, np.maximum(p, 0.0)
    raise GenerationError("active-set enumeration found no KKT point")


def gen_inequality_qp(n, m, N, seed, lam=0.0, Q=None, c=None, A=None, b=None):
    """min 1/2 u'Qu + c'u + lam ||u||_1  s.t.  Au <= b  (cone C = R^m_+).

    ``b`` is drawn so that u = 0 is a Slater point (A*0 - b < 0).  The
    reference comes from active-set enumeration when m <= 12 (and n <= 8
    when lam > 0); otherwise it is None.
    """
    _check_sizes(n, m, N)
    rng = np.random.default_rng(seed)
    Q_ = _random_spd(rng, n) if Q is None else np.atleast_2d(np.asarray(Q, dtype=float))
    A_ = rng.standard_normal((m, n)) / np.sqrt(n) if A is None else np.atleast_2d(np.asarray(A, dtype=float))
    b_ = rng.uniform(0.1, 0.5, size=m) if b is None else np.atleast_1d(np.asarray(b, dtype=float))
    # push the unconstrained minimizer across the constraints
    c_ = -(Q_ @ A_.T @ rng.uniform(0.5, 1.5, size=m)) * 2.0 if c is None else np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(b_ <= 0):
        raise GenerationError("b must be positive so that u = 0 is a Slater point")
    blocks, J = _blocks_J(n, N, lam)
    G = Quadratic(Q_, c_)
    prob = ProblemSpec(blocks=blocks, G=G, J=J, Phi=LinearMap(A_, b_), cone=cones.NonNegOrthant(m),
                       constants=Constants(B_G=spectral_norm(Q_), tau=spectral_norm(A_), T_bar=0.0,
                                           c1=0.0, c2=lam * np.sqrt(n)))
    if m > MAX_ENUM_CONSTRAINTS or (lam > 0 and n > 8):
        return prob, None
    u_s, p_s = _active_set_reference(Q_, c_, A_, b_, lam)
    F_s = G.value(u_s) + lam * float(np.abs(u_s).sum())
    return prob, ReferenceSolution(u_s, p_s, F_s, "reference_solver")


def inequality_toy():
    """min (u - 2)^2 s.t. u <= 1; u* = 1, p* = 2, F* = 1."""
    prob, _ = gen_inequality_qp(1, 1, 1, 0, Q=[[2.0]], c=[-4.0], A=[[1.0]], b=[1.0])
    prob = replace(prob, G=Quadratic(prob.G.Q, prob.G.c, 4.0))
    return prob, ReferenceSolution(np.array([1.0]), np.array([2.0]), 1.0, "analytic")


def _project_ball_np(x, r):
    nx = np.linalg.norm(x)
    return x if nx <= r else x * (r / nx)


def gen_soc_ls(n, seed, r=1.0, M=None, d=None, tol=1e-10):
    """min 1/2 ||Mu - d||^2  s.t.  ||u|| <= r, written as a second-order cone constraint.

    Theta(u) = (-r, u) = A u - b with A = [0; I], b = (r, 0, ..., 0) and
    C = SOC(n + 1), so Theta(u) in -C  iff  ||u|| <= r.  One block.
    """
    if n < 2:
        raise ValueError("gen_soc_ls needs n >= 2")
    if n > MAX_DIM:
        raise ValueError(f"n must be at most {MAX_DIM}")
    rng = np.random.default_rng(seed)
    if M is None:
        basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
        M_ = basis * rng.uniform(0.5, 1.0, size=n)
    else:
        M_ = np.asarray(M, dtype=float)
    d_ = rng.standard_normal(n) * 2.0 * r if d is None else np.asarray(d, dtype=float)
    A = np.vstack([np.zeros((1, n)), np.eye(n)])
    b = np.zeros(n + 1)
    b[0] = r
    G = LeastSquares(M_, d_)
    H = M_.T @ M_
    L = spectral_norm(H)
    # projected gradient on the ball
    u = np.zeros(n)
    for _ in range(200000):
        u_new = _project_ball_np(u - G.gradient(u) / L, r)
        if np.linalg.norm(u_new - u) <= tol * (1 + np.linalg.norm(u)):
            u = u_new
            break
        u = u_new
    grad = G.gradient(u)
    if np.linalg.norm(u) < r * (1 - 1e-9):
        p = np.zeros(n + 1)
    else:
        px = -grad
        p = np.concatenate([[px @ u / r], px])
    blocks = BlockStructure((n,))
    prob = ProblemSpec(blocks=blocks, G=G, J=[SeparableL1Box(n)], Phi=LinearMap(A, b),
                       cone=cones.SecondOrder(n + 1),
                       constants=Constants(B_G=L, tau=spectral_norm(A), T_bar=0.0))
    return prob, ReferenceSolution(u, p, G.value(u), "reference_solver")


GENERATORS = {
    "equality_qp": gen_equality_qp,
    "inequality_qp": gen_inequality_qp,
    "soc_ls": gen_soc_ls,
    "equality_toy": lambda **kw: equality_toy(),
    "inequality_toy": lambda **kw: inequality_toy(),
}
