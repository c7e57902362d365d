"""Compiled inner loop for the structured problem class.

Covers G quadratic, Omega = 0, Phi linear, J_i = lam|.|_1 + box and a
separable quadratic core.  The arithmetic mirrors the pure-Python steppers
in :mod:`spdcl.solver` operation for operation.
"""
import numpy as np
from numba import njit

SPDCL, SPDCL_CONST, VAPP = 0, 1, 2


@njit(cache=True)
def _project_into(kinds, starts, dims, signs, y, out):
    for s in range(kinds.shape[0]):
        a = starts[s]
        d = dims[s]
        sg = signs[s]
        kind = kinds[s]
        if kind == 0:
            for j in range(a, a + d):
                out[j] = 0.0
        elif kind == 1:
            for j in range(a, a + d):
                out[j] = y[j]
        elif kind == 2:
            for j in range(a, a + d):
                v = sg * y[j]
                out[j] = sg * v if v > 0.0 else 0.0
        else:
            t = sg * y[a]
            nx = 0.0
            for j in range(a + 1, a + d):
                nx += y[j] * y[j]
            nx = np.sqrt(nx)
            if nx <= t:
                for j in range(a, a + d):
                    out[j] = y[j]
            elif nx <= -t:
                for j in range(a, a + d):
                    out[j] = 0.0
            else:
                scale = 0.5 * (t + nx)
                out[a] = sg * scale
                f = scale / nx
                for j in range(a + 1, a + d):
                    out[j] = f * y[j]


@njit(cache=True)
def _norm(x):
    s = 0.0
    for j in range(x.shape[0]):
        s += x[j] * x[j]
    return np.sqrt(s)


@njit(cache=True)
def advance(variant, Q, c, A, b, lam, lo, hi, w, offsets,
            kinds, starts, dims, signs,
            gamma, rho, mu, eps_const, beta, B_G, T_bar, tau,
            blocks, n_steps, u, p, q, q_half, theta,
            eps, sum_eps, eps_min, avg_u, avg_q):
    """Run ``n_steps`` iterations in place; returns (eps, sum_eps, eps_min)."""
    n = u.shape[0]
    m = p.shape[0]
    u_new = np.empty(n)
    z = np.empty(m)
    curv = B_G + gamma * tau * tau
    for t in range(n_steps):
        den = curv + _norm(q) * T_bar
        if variant == SPDCL:
            if den > 0.0:
                cand = beta / (2.0 * den)
                if cand < eps:
                    eps = cand
        elif variant == SPDCL_CONST:
            eps = eps_const
        else:
            if den > 0.0:
                eps = beta / (2.0 * den)
        if variant == VAPP:
            lo_j = 0
            hi_j = n
        else:
            i = blocks[t]
            lo_j = offsets[i]
            hi_j = offsets[i + 1]
        for j in range(n):
            u_new[j] = u[j]
        for j in range(lo_j, hi_j):
            g = c[j]
            for k in range(n):
                g += Q[j, k] * u[k]
            for r in range(m):
                g += A[r, j] * q[r]
            step = eps / w[j]
            v = u[j] - step * g
            av = abs(v) - lam[j] * step
            if av > 0.0:
                x = av if v > 0.0 else -av
            else:
                x = 0.0
            if x < lo[j]:
                x = lo[j]
            if x > hi[j]:
                x = hi[j]
            u_new[j] = x
        for r in range(m):
            s = 0.0
            for k in range(n):
                s += A[r, k] * u_new[k]
            theta[r] = s - b[r]
            z[r] = p[r] + gamma * theta[r]
        _project_into(kinds, starts, dims, signs, z, q_half)
        if variant == VAPP:
            for r in range(m):
                p[r] = q_half[r]
        else:
            ratio = rho / gamma
            for r in range(m):
                p[r] = p[r] + ratio * (q_half[r] - p[r])
            if variant == SPDCL:
                nrm = _norm(p)
                if nrm > mu:
                    f = mu / nrm
                    for r in range(m):
                        p[r] = p[r] * f
        sum_eps += eps
        for j in range(n):
            avg_u[j] += eps * u_new[j]
        for r in range(m):
            avg_q[r] += eps * q[r]
        if eps < eps_min:
            eps_min = eps
        for r in range(m):
            z[r] = p[r] + gamma * theta[r]
        _project_into(kinds, starts, dims, signs, z, q)
        for j in range(n):
            u[j] = u_new[j]
    return eps, sum_eps, eps_min
