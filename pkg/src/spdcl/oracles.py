"""Shipped oracle families for the objective and constraint map.

Smooth parts (``G``) expose ``value`` and ``gradient``; block regularizers
(``J_i`` fused with the indicator of ``U_i``) expose ``value`` and ``prox``;
constraint maps (``Omega``) expose ``value`` and ``adjoint``.  Anything with
the same methods can be plugged into :class:`spdcl.model.ProblemSpec`.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "ZeroFunction",
    "Quadratic",
    "LeastSquares",
    "SeparableL1Box",
    "ZeroMap",
    "QuadraticMap",
    "LinearMap",
]


class ZeroFunction:
    """G = 0."""

    def __init__(self, n):
        self.n = int(n)

    def value(self, u):
        return 0.0

    def gradient(self, u):
        return np.zeros(self.n)

    def to_dict(self):
        return {"type": "zero", "n": self.n}


class Quadratic:
    """G(u) = 1/2 u'Qu + c'u + const with Q symmetric positive semidefinite."""

    def __init__(self, Q, c=None, const=0.0):
        Q = np.array(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be a square matrix")
        self.Q = Q
        self.c = np.zeros(Q.shape[0]) if c is None else np.array(c, dtype=float)
        self.n = Q.shape[0]
        self.const = float(const)

    def value(self, u):
        return float(0.5 * u @ (self.Q @ u) + self.c @ u) + self.const

    def gradient(self, u):
        return self.Q @ u + self.c

    def hessian(self):
        return self.Q

    def to_dict(self):
        return {"type": "quadratic", "Q": self.Q.tolist(), "c": self.c.tolist(), "const": self.const}


class LeastSquares:
    """G(u) = 1/2 ||Mu - d||^2."""

    def __init__(self, M, d):
        self.M = np.array(M, dtype=float)
        self.d = np.array(d, dtype=float)
        self.n = self.M.shape[1]

    def value(self, u):
        r = self.M @ u - self.d
        return float(0.5 * r @ r)

    def gradient(self, u):
        return self.M.T @ (self.M @ u - self.d)

    def hessian(self):
        return self.M.T @ self.M

    def as_quadratic(self):
        """Equivalent :class:`Quadratic` (drops the constant 1/2||d||^2)."""
        return Quadratic(self.M.T @ self.M, -self.M.T @ self.d)

    def to_dict(self):
        return {"type": "least_squares", "M": self.M.tolist(), "d": self.d.tolist()}


class SeparableL1Box:
    """J_i(x) = lam * ||x||_1 restricted to the box lower <= x <= upper.

    With ``lam = 0`` and an infinite box this is the zero function on R^n_i;
    with ``lam = 0`` and a finite box it is the box indicator.
    """

    def __init__(self, size, lam=0.0, lower=-np.inf, upper=np.inf):
        self.size = int(size)
        self.lam = float(lam)
        self.lower = np.broadcast_to(np.asarray(lower, dtype=float), (self.size,)).copy()
        self.upper = np.broadcast_to(np.asarray(upper, dtype=float), (self.size,)).copy()
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if np.any(self.lower > self.upper):
            raise ValueError("empty box")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower) or np.any(x > self.upper):
            return np.inf
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, v, step):
        """argmin_x lam|x|_1 + box(x) + ||x - v||^2 / (2 step); step may be per coordinate."""
        v = np.asarray(v, dtype=float)
        shrunk = np.sign(v) * np.maximum(np.abs(v) - self.lam * np.asarray(step), 0.0)
        return np.clip(shrunk, self.lower, self.upper)

    def to_dict(self):
        enc = lambda a: [None if not np.isfinite(x) else float(x) for x in a]
        return {"type": "l1_box", "size": self.size, "lam": self.lam,
                "lower": enc(self.lower), "upper": enc(self.upper)}


class ZeroMap:
    """Omega = 0 (affine constraints only)."""

    is_zero = True

    def __init__(self, n, m):
        self.n, self.m = int(n), int(m)

    def value(self, u):
        return np.zeros(self.m)

    def adjoint(self, u, q):
        return np.zeros(self.n)

    def curvature_bound(self):
        return np.zeros(self.m)

    def to_dict(self):
        return {"type": "zero", "n": self.n, "m": self.m}


class QuadraticMap:
    """Omega_j(u) = 1/2 u'P_j u + r_j'u, one symmetric P_j per constraint row."""

    is_zero = False

    def __init__(self, P, r=None):
        self.P = np.array(P, dtype=float)
        if self.P.ndim != 3 or self.P.shape[1] != self.P.shape[2]:
            raise ValueError("P must have shape (m, n, n)")
        self.m, self.n = self.P.shape[0], self.P.shape[1]
        self.r = np.zeros((self.m, self.n)) if r is None else np.array(r, dtype=float)

    def value(self, u):
        return 0.5 * np.einsum("i,jik,k->j", u, self.P, u) + self.r @ u

    def jacobian(self, u):
        return self.P @ u + self.r

    def adjoint(self, u, q):
        return self.jacobian(u).T @ q

    def curvature_bound(self):
        """Per-row largest eigenvalue: the vector T of the curvature condition."""
        return np.array([np.linalg.eigvalsh(Pj)[-1] for Pj in self.P])

    def to_dict(self):
        return {"type": "quadratic", "P": self.P.tolist(), "r": self.r.tolist()}


class LinearMap:
    """Phi(u) = A u - b, split column-wise into blocks A_i."""

    linear = True

    def __init__(self, A, b):
        self.A = np.array(A, dtype=float)
        if self.A.ndim != 2:
            raise ValueError("A must be a matrix")
        self.b = np.array(b, dtype=float).reshape(-1)
        if self.b.shape[0] != self.A.shape[0]:
            raise ValueError("b length must equal the number of rows of A")
        self.m, self.n = self.A.shape

    def value(self, u):
        return self.A @ u - self.b

    def to_dict(self):
        return {"type": "linear", "A": self.A.tolist(), "b": self.b.tolist()}


def smooth_from_dict(obj):
    kind = obj["type"]
    if kind == "zero":
        return ZeroFunction(obj["n"])
    if kind == "quadratic":
        return Quadratic(obj["Q"], obj["c"], obj.get("const", 0.0))
    if kind == "least_squares":
        return LeastSquares(obj["M"], obj["d"])
    raise ValueError(f"unknown smooth function type {kind!r}")


def regularizer_from_dict(obj):
    if obj["type"] != "l1_box":
        raise ValueError(f"unknown regularizer type {obj['type']!r}")
    dec = lambda a, fill: [fill if x is None else x for x in a]
    return SeparableL1Box(obj["size"], obj["lam"], dec(obj["lower"], -np.inf), dec(obj["upper"], np.inf))


def map_from_dict(obj):
    kind = obj["type"]
    if kind == "zero":
        return ZeroMap(obj["n"], obj["m"])
    if kind == "quadratic":
        return QuadraticMap(obj["P"], obj["r"])
    raise ValueError(f"unknown constraint map type {kind!r}")
