"""Stochastic primal-dual coordinate iterations and the deterministic baseline.

Three variants share one state layout:

``SPDCL``
    adaptive non-increasing step, one uniformly drawn block per iteration,
    relaxed dual step ``rho/gamma`` followed by projection onto the ball of
    radius ``mu``.
``SPDCL_CONST``
    constant step ``epsilon_const < beta/(B_G + gamma*tau^2)``, no ball
    projection; only for instances with Omega = 0.
``VAPP``
    every block updated from the same anchor, full dual step.

Averages are weighted by the step used in each iteration:
``u_bar = sum eps^k u^{k+1} / sum eps^k`` and
``p_bar = sum eps^k q^k / sum eps^k``.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace, asdict
from typing import Optional

import numpy as np

from . import cones
from .core import CoreFunction
from .model import eval_objective, eval_theta, feasibility_residual
from .oracles import LeastSquares, Quadratic, SeparableL1Box
from .subproblem import assemble_work_item, solve_block

__all__ = [
    "ConfigurationError",
    "SolverConfig",
    "IterateState",
    "RunResult",
    "BlockSampler",
    "resolve_config",
    "initial_state",
    "stepsize_update",
    "dual_update",
    "spdcl_step",
    "vapp_step",
    "run",
    "run_many",
]

VARIANTS = ("SPDCL", "SPDCL_CONST", "VAPP")
STOP_WINDOW = 100


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    variant: str = "SPDCL"
    gamma: float = 1.0
    rho: Optional[float] = None
    epsilon_init: float = math.inf
    mu: Optional[float] = None
    epsilon_const: Optional[float] = None
    max_iter: int = 1000
    tol_feas: Optional[float] = None
    tol_obj_change: Optional[float] = None
    rng_seed: int = 0
    trace_stride: int = 100
    allow_p0_outside_dual_cone: bool = False
    engine: str = "auto"

    def to_dict(self):
        d = asdict(self)
        if math.isinf(d["epsilon_init"]):
            d["epsilon_init"] = None
        return d

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown solver field(s): {', '.join(sorted(unknown))}")
        if obj.get("epsilon_init", 0) is None:
            obj["epsilon_init"] = math.inf
        return cls(**obj)


def default_rho(gamma, N):
    return gamma / (2 * N - 1)


def constant_step_bound(prob, core, gamma):
    c = prob.constants
    return core.beta / (c.B_G + gamma * c.tau ** 2)


def resolve_config(prob, core, config: SolverConfig) -> SolverConfig:
    """Validate ``config`` against ``prob`` and fill the default ``rho``.

    Raises
    ------
    ConfigurationError
        On any violated precondition of the chosen variant.
    """
    if config.variant not in VARIANTS:
        raise ConfigurationError(f"variant must be one of {VARIANTS}, got {config.variant!r}")
    if not (isinstance(config.gamma, (int, float)) and config.gamma > 0):
        raise ConfigurationError(f"gamma must be positive, got {config.gamma}")
    if not prob.constants.complete:
        raise ConfigurationError("problem constants B_G, tau, T_bar must be set (see estimate_constants)")
    if not config.epsilon_init > 0:
        raise ConfigurationError(f"epsilon_init must be positive, got {config.epsilon_init}")
    if int(config.max_iter) != config.max_iter or config.max_iter < 0:
        raise ConfigurationError(f"max_iter must be a nonnegative integer, got {config.max_iter}")
    if int(config.trace_stride) != config.trace_stride or config.trace_stride < 1:
        raise ConfigurationError(f"trace_stride must be a positive integer, got {config.trace_stride}")
    if config.engine not in ("auto", "python", "compiled"):
        raise ConfigurationError(f"engine must be auto, python or compiled, got {config.engine!r}")
    rho = config.rho
    if rho is None:
        rho = default_rho(config.gamma, prob.N)
    if not rho > 0:
        raise ConfigurationError(f"rho must be positive, got {rho}")
    if rho > config.gamma:
        raise ConfigurationError(
            f"rho={rho} exceeds gamma={config.gamma}; the relaxed dual step must be a convex combination")
    c = prob.constants
    curvature = c.B_G + config.gamma * c.tau ** 2
    if config.variant == "SPDCL":
        if config.mu is None:
            raise ConfigurationError(
                "SPDCL requires mu, the radius of the dual ball P_mu (a bound on the dual solution plus one)")
        if not config.mu > 0:
            raise ConfigurationError(f"mu must be positive, got {config.mu}")
    if config.variant in ("SPDCL", "VAPP") and curvature == 0 and c.T_bar == 0 \
            and math.isinf(config.epsilon_init):
        raise ConfigurationError("no curvature constants and no finite epsilon_init: step size is unbounded")
    if config.variant == "SPDCL_CONST":
        if not prob.omega_is_zero:
            raise ConfigurationError("SPDCL_CONST applies only to instances with Omega = 0")
        bound = constant_step_bound(prob, core, config.gamma)
        eps = config.epsilon_const
        if eps is None:
            raise ConfigurationError("SPDCL_CONST requires epsilon_const")
        if not 0 < eps < bound:
            raise ConfigurationError(
                f"epsilon_const={eps} violates the strict bound 0 < epsilon < beta/(B_G + gamma*tau^2) = {bound}")
    return replace(config, rho=float(rho))


@dataclass
class IterateState:
    k: int
    u: np.ndarray
    p: np.ndarray
    epsilon: float
    q: np.ndarray
    theta: np.ndarray
    q_half: Optional[np.ndarray] = None
    sum_eps: float = 0.0
    avg_u_accum: Optional[np.ndarray] = None
    avg_q_accum: Optional[np.ndarray] = None
    eps_min: float = math.inf
    eps0: Optional[float] = None

    @property
    def u_bar(self):
        if self.sum_eps == 0.0:
            return None
        return self.avg_u_accum / self.sum_eps

    @property
    def p_bar(self):
        if self.sum_eps == 0.0:
            return None
        return self.avg_q_accum / self.sum_eps

    def copy(self):
        cp = lambda a: None if a is None else a.copy()
        return replace(self, u=self.u.copy(), p=self.p.copy(), q=self.q.copy(),
                       theta=self.theta.copy(), q_half=cp(self.q_half),
                       avg_u_accum=cp(self.avg_u_accum), avg_q_accum=cp(self.avg_q_accum))


def initial_state(prob, core, config, u0=None, p0=None) -> IterateState:
    """State before the first iteration; ``p0`` defaults to 0, which lies in C*."""
    u = np.zeros(prob.n) if u0 is None else np.array(u0, dtype=float)
    p = np.zeros(prob.m) if p0 is None else np.array(p0, dtype=float)
    if u.shape != (prob.n,) or p.shape != (prob.m,):
        raise ValueError("initial point has the wrong dimension")
    if p0 is not None and not config.allow_p0_outside_dual_cone:
        if np.linalg.norm(p - cones.project_dual(prob.cone, p)) > 1e-12 * (1 + np.linalg.norm(p)):
            raise ConfigurationError("p0 must lie in the dual cone (set allow_p0_outside_dual_cone to override)")
    theta = eval_theta(prob, u)
    q = cones.project_dual(prob.cone, p + config.gamma * theta)
    return IterateState(k=0, u=u, p=p, epsilon=float(config.epsilon_init), q=q, theta=theta,
                        avg_u_accum=np.zeros(prob.n), avg_q_accum=np.zeros(prob.m))


def _formula(q_k, consts, beta):
    B_G, T_bar, gamma, tau = consts
    den = B_G + float(np.linalg.norm(q_k)) * T_bar + gamma * tau ** 2
    if den <= 0:
        return None
    return beta / (2.0 * den)


def stepsize_update(eps_prev, q_k, consts, beta) -> float:
    """min(eps_prev, beta / (2 (B_G + ||q_k|| T_bar + gamma tau^2))).

    ``consts`` is ``(B_G, T_bar, gamma, tau)``.  With all curvature terms
    zero the previous step is returned unchanged.
    """
    if not eps_prev > 0:
        raise ValueError(f"previous step must be positive, got {eps_prev}")
    cand = _formula(q_k, consts, beta)
    if cand is None:
        return eps_prev
    return min(eps_prev, cand)


def dual_update(p, q_half, rho, gamma, mu) -> np.ndarray:
    """P_mu(p + (rho/gamma)(q_half - p)); ``mu=None`` or ``inf`` skips the ball."""
    if not (rho > 0 and gamma > 0):
        raise ValueError("rho and gamma must be positive")
    p = np.asarray(p, dtype=float)
    step = p + (rho / gamma) * (np.asarray(q_half, dtype=float) - p)
    if mu is None or math.isinf(mu):
        return step
    return cones.project_ball(step, mu)


class BlockSampler:
    """Uniform block indices from a counter-based (Philox) generator.

    Indices are drawn in fixed-size chunks, so the sequence depends only on
    the seed, not on how callers consume it.
    """

    chunk = 4096

    def __init__(self, seed, N):
        self.N = int(N)
        self._rng = np.random.Generator(np.random.Philox(int(seed)))
        self._buf = np.empty(0, dtype=np.int64)
        self._pos = 0

    def take(self, k):
        out = np.empty(k, dtype=np.int64)
        filled = 0
        while filled < k:
            if self._pos == self._buf.size:
                self._buf = self._rng.integers(0, self.N, size=self.chunk, dtype=np.int64)
                self._pos = 0
            n = min(k - filled, self._buf.size - self._pos)
            out[filled:filled + n] = self._buf[self._pos:self._pos + n]
            self._pos += n
            filled += n
        return out

    def next(self):
        return int(self.take(1)[0])


def _consts(prob, config):
    c = prob.constants
    return (c.B_G, c.T_bar, config.gamma, c.tau)


def _finish_step(prob, config, state, u_new, eps, p_new, theta_new, q_half):
    sum_eps = state.sum_eps + eps
    avg_u = state.avg_u_accum + eps * u_new
    avg_q = state.avg_q_accum + eps * state.q
    q_new = cones.project_dual(prob.cone, p_new + config.gamma * theta_new)
    return IterateState(k=state.k + 1, u=u_new, p=p_new, epsilon=eps, q=q_new, theta=theta_new,
                        q_half=q_half, sum_eps=sum_eps, avg_u_accum=avg_u, avg_q_accum=avg_q,
                        eps_min=min(state.eps_min, eps),
                        eps0=eps if state.eps0 is None else state.eps0)


def spdcl_step(prob, core, config, state, rng) -> IterateState:
    """One SPDCL (or SPDCL_CONST) iteration; ``config`` must be resolved.

    ``rng`` is a :class:`BlockSampler` or a ``numpy.random.Generator``.
    """
    if config.variant == "SPDCL_CONST":
        eps = config.epsilon_const
    else:
        eps = stepsize_update(state.epsilon, state.q, _consts(prob, config), core.beta)
    if isinstance(rng, BlockSampler):
        i = rng.next()
    else:
        i = int(rng.integers(prob.N))
    u_new = state.u.copy()
    item = assemble_work_item(prob, state.u, state.q, i, eps)
    u_new[prob.blocks.slice(i)] = solve_block(prob, core, item)
    theta_new = eval_theta(prob, u_new)
    q_half = cones.project_dual(prob.cone, state.p + config.gamma * theta_new)
    mu = config.mu if config.variant == "SPDCL" else None
    p_new = dual_update(state.p, q_half, config.rho, config.gamma, mu)
    return _finish_step(prob, config, state, u_new, eps, p_new, theta_new, q_half)


def vapp_step(prob, core, config, state) -> IterateState:
    """One VAPP iteration: all blocks from the same anchor, then a full dual step."""
    cand = _formula(state.q, _consts(prob, config), core.beta)
    eps = state.epsilon if cand is None else cand
    u_new = state.u.copy()
    for i in range(prob.N):
        item = assemble_work_item(prob, state.u, state.q, i, eps)
        u_new[prob.blocks.slice(i)] = solve_block(prob, core, item)
    theta_new = eval_theta(prob, u_new)
    q_half = cones.project_dual(prob.cone, state.p + config.gamma * theta_new)
    return _finish_step(prob, config, state, u_new, eps, q_half.copy(), theta_new, q_half)


# -- compiled path -----------------------------------------------------------

def _structured_arrays(prob, core):
    """Dense arrays for the compiled kernel, or None if the instance is outside its class."""
    if not (prob.linear_phi and prob.omega_is_zero and isinstance(core, CoreFunction)):
        return None
    G = prob.G
    if isinstance(G, LeastSquares):
        G = G.as_quadratic()
    if not isinstance(G, Quadratic):
        return None
    if not all(isinstance(Ji, SeparableL1Box) for Ji in prob.J):
        return None
    cat = lambda attr: np.ascontiguousarray(np.concatenate(
        [np.broadcast_to(np.asarray(getattr(Ji, attr), dtype=float), (Ji.size,)) for Ji in prob.J]))
    if any(Ji.size != s for Ji, s in zip(prob.J, prob.blocks.block_sizes)):
        return None
    kinds, starts, dims, signs = cones.flatten(cones.dual_cone(prob.cone))
    return dict(Q=np.ascontiguousarray(G.Q), c=np.ascontiguousarray(G.c),
                A=np.ascontiguousarray(prob.Phi.A), b=np.ascontiguousarray(prob.Phi.b),
                lam=cat("lam"), lo=cat("lower"), hi=cat("upper"),
                w=np.ascontiguousarray(core.w(prob.n)),
                offsets=np.asarray(prob.blocks.offsets, dtype=np.int64),
                kinds=kinds, starts=starts, dims=dims, signs=signs)


class _CompiledStepper:
    def __init__(self, prob, core, config, arrays):
        from . import _kernel

        self._kernel = _kernel
        self.prob, self.core, self.config, self.arr = prob, core, config, arrays
        self.code = {"SPDCL": _kernel.SPDCL, "SPDCL_CONST": _kernel.SPDCL_CONST,
                     "VAPP": _kernel.VAPP}[config.variant]

    def advance(self, state, n_steps, sampler):
        if n_steps <= 0:
            return state
        cfg, c, a = self.config, self.prob.constants, self.arr
        if cfg.variant == "VAPP":
            blocks = np.zeros(1, dtype=np.int64)
        else:
            blocks = sampler.take(n_steps)
        st = state.copy()
        if st.q_half is None:
            st.q_half = np.zeros(self.prob.m)
        mu = math.inf if cfg.variant != "SPDCL" else float(cfg.mu)
        eps_const = float(cfg.epsilon_const) if cfg.epsilon_const is not None else 0.0
        eps, sum_eps, eps_min = self._kernel.advance(
            self.code, a["Q"], a["c"], a["A"], a["b"], a["lam"], a["lo"], a["hi"], a["w"],
            a["offsets"], a["kinds"], a["starts"], a["dims"], a["signs"],
            float(cfg.gamma), float(cfg.rho), mu, eps_const, float(self.core.beta),
            float(c.B_G), float(c.T_bar), float(c.tau),
            blocks, int(n_steps), st.u, st.p, st.q, st.q_half, st.theta,
            float(st.epsilon), float(st.sum_eps), float(st.eps_min), st.avg_u_accum, st.avg_q_accum)
        if st.eps0 is None:
            st.eps0 = self._first_eps(state)
        st.k = state.k + n_steps
        st.epsilon, st.sum_eps, st.eps_min = eps, sum_eps, eps_min
        return st

    def _first_eps(self, state):
        cfg = self.config
        if cfg.variant == "SPDCL_CONST":
            return float(cfg.epsilon_const)
        cand = _formula(state.q, _consts(self.prob, cfg), self.core.beta)
        if cfg.variant == "VAPP":
            return state.epsilon if cand is None else cand
        return state.epsilon if cand is None else min(state.epsilon, cand)


class _PythonStepper:
    def __init__(self, prob, core, config):
        self.prob, self.core, self.config = prob, core, config

    def advance(self, state, n_steps, sampler):
        for _ in range(n_steps):
            if self.config.variant == "VAPP":
                state = vapp_step(self.prob, self.core, self.config, state)
            else:
                state = spdcl_step(self.prob, self.core, self.config, state, sampler)
        return state


def make_stepper(prob, core, config):
    """Pick the compiled kernel when the instance allows it (``engine='auto'``)."""
    if config.engine == "python":
        return _PythonStepper(prob, core, config)
    arrays = _structured_arrays(prob, core)
    if arrays is None:
        if config.engine == "compiled":
            raise ConfigurationError("instance is outside the compiled kernel's problem class")
        return _PythonStepper(prob, core, config)
    return _CompiledStepper(prob, core, config, arrays)


@dataclass
class RunResult:
    state: IterateState
    trace: list
    config: SolverConfig
    stop_reason: str
    wall_time: float
    u0: np.ndarray = None
    p0: np.ndarray = None
    eps_first: Optional[float] = None

    @property
    def u_bar(self):
        return self.state.u_bar

    @property
    def p_bar(self):
        return self.state.p_bar

    @property
    def iterations(self):
        return self.state.k


def run(prob, core, config, reference=None, u0=None, p0=None) -> RunResult:
    """Iterate until ``max_iter`` or until the averaged iterate is feasible and settled.

    The stopping test is active only when ``tol_feas`` is set: every
    ``STOP_WINDOW`` iterations it requires ``||Pi(Theta(u_bar))|| <= tol_feas``
    and ``|F(u_bar) - F(u_bar 100 iterations earlier)| <= tol_obj_change``.
    A trace record is produced every ``trace_stride`` iterations and at the
    final iteration.
    """
    from .diagnostics import make_record

    config = resolve_config(prob, core, config)
    start = time.perf_counter()
    state = initial_state(prob, core, config, u0, p0)
    u_init, p_init = state.u.copy(), state.p.copy()
    stepper = make_stepper(prob, core, config)
    sampler = BlockSampler(config.rng_seed, prob.N)
    stride = int(config.trace_stride)
    checking = config.tol_feas is not None
    tol_obj = math.inf if config.tol_obj_change is None else config.tol_obj_change
    trace = []
    prev_F = None
    reason = "max_iter"
    while state.k < config.max_iter:
        nxt = min(config.max_iter, (state.k // stride + 1) * stride)
        if checking:
            nxt = min(nxt, (state.k // STOP_WINDOW + 1) * STOP_WINDOW)
        state = stepper.advance(state, nxt - state.k, sampler)
        done = False
        if checking and state.k % STOP_WINDOW == 0:
            F_bar = eval_objective(prob, state.u_bar)
            if (feasibility_residual(prob, state.u_bar) <= config.tol_feas
                    and prev_F is not None and abs(F_bar - prev_F) <= tol_obj):
                done = True
                reason = "converged"
            prev_F = F_bar
        if state.k % stride == 0 or state.k == config.max_iter or done:
            trace.append(make_record(prob, core, config, state, reference))
        if done:
            break
    return RunResult(state=state, trace=trace, config=config, stop_reason=reason,
                     wall_time=time.perf_counter() - start, u0=u_init, p0=p_init,
                     eps_first=state.eps0)


def _run_one(args):
    prob, core, config, reference, u0, p0 = args
    return run(prob, core, config, reference, u0, p0)


def run_many(prob, core, config, seeds, reference=None, u0=None, p0=None, jobs=1):
    """Independent runs, one per seed; results are returned in seed order."""
    tasks = [(prob, core, replace(config, rng_seed=int(s)), reference, u0, p0) for s in seeds]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))
