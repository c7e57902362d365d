"""Acceptance criteria 1-10, each at its stated tolerance and time limit.

Every test records one ``PASS``/``FAIL`` line, printed in the terminal
summary (and immediately with ``-s``).  Run just this file with

    pytest tests/test_acceptance.py -v
"""
import json
import time
from dataclasses import replace

import numpy as np
import pytest

from spdcl import cones
from spdcl.cli import main as cli_main
from spdcl.core import quadratic_core
from spdcl.diagnostics import bifunction_gap, eval_h3, eval_lambda, fit_rate, mean_stderr
from spdcl.lagrangian import eval_L, eval_L_gamma, eval_phi, grad_phi_p, grad_phi_theta
from spdcl.model import eval_theta, feasibility_residual
from spdcl.oracles import SeparableL1Box
from spdcl.problems import equality_toy, gen_equality_qp, gen_inequality_qp, gen_soc_ls
from spdcl.solver import (BlockSampler, SolverConfig, initial_state, resolve_config, run, run_many,
                          spdcl_step, stepsize_update, vapp_step)
from spdcl.subproblem import BlockWorkItem, solve_block

from conftest import ACCEPTANCE
from test_subproblem import grid_oracle, scalar_prob

CORE = quadratic_core()
SEEDS = list(range(30))


def report(num, title, ok, detail, elapsed, limit=None):
    timing = f"{elapsed:.2f} s" + (f" (limit {limit:g} s)" if limit is not None else "")
    if limit is not None and elapsed >= limit:
        ok = False
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {title}; {detail}; {timing}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def family_samples(rng, count, max_dim=50):
    """``count`` random cones per family with dimensions up to ``max_dim``."""
    makers = {
        "zero": lambda d: cones.Zero(d),
        "full": lambda d: cones.Full(d),
        "nonneg": lambda d: cones.NonNegOrthant(d),
        "soc": lambda d: cones.SecondOrder(max(d, 2)),
        "product": lambda d: cones.Product([cones.Zero(max(d // 4, 1)), cones.NonNegOrthant(max(d // 4, 1)),
                                            cones.SecondOrder(max(d // 2, 2))]),
    }
    for name, make in makers.items():
        yield name, [make(int(rng.integers(1, max_dim + 1))) for _ in range(count)]


def test_criterion_1_projections():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_moreau = worst_orth = worst_prop = 0.0
    for _, specs in family_samples(rng, 1000):
        for spec in specs:
            y = rng.standard_normal(spec.dim) * rng.exponential(5.0)
            yd, yn = cones.moreau_split(spec, y)
            ny = np.linalg.norm(y)
            worst_moreau = max(worst_moreau, np.linalg.norm(y - yd - yn) / max(ny, 1e-300))
            worst_orth = max(worst_orth, abs(yd @ yn) / max(ny ** 2, 1e-300))
            # three-point inequality of the dual-cone projection on a random triple
            x, w, z = rng.standard_normal((3, spec.dim)) * rng.exponential(3.0, size=(3, 1))
            a, b = cones.project_dual(spec, z + x), cones.project_dual(spec, z + w)
            lhs = 2 * (a - b) @ x
            rhs = (x - w) @ (x - w) + (a - z) @ (a - z) - (b - z) @ (b - z)
            scale = (x @ x) + (w @ w) + (z @ z)
            worst_prop = max(worst_prop, (lhs - rhs) / scale)
    elapsed = time.perf_counter() - start
    ok = worst_moreau <= 1e-10 and worst_orth <= 1e-10 and worst_prop <= 1e-10
    detail = (f"max rel Moreau residual {worst_moreau:.1e}, max rel <Pi y, Pi_-C y> {worst_orth:.1e}, "
              f"max rel three-point violation {worst_prop:.1e} (tol 1e-10, 5x1000 samples)")
    assert report(1, "projection suite", ok, detail, elapsed, 5.0)


def test_criterion_2_gradients():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    h = 1e-6
    for name, specs in family_samples(rng, 100, max_dim=8):
        for spec in specs:
            while True:
                theta, p = rng.standard_normal((2, spec.dim))
                gamma = rng.uniform(0.5, 2.0)
                y = p + gamma * theta
                # a kink is within a few finite-difference steps of the projection's breakpoints
                margin = np.min(np.abs(y))
                if spec.kind == "soc":
                    margin = min(abs(abs(y[0]) - np.linalg.norm(y[1:])), np.linalg.norm(y[1:]))
                if margin > 1e-3:
                    break
            analytic = [grad_phi_p(spec, theta, p, gamma), grad_phi_theta(spec, theta, p, gamma)]
            for which, g in enumerate(analytic):
                fd = np.zeros(spec.dim)
                for j in range(spec.dim):
                    e = np.zeros(spec.dim)
                    e[j] = h
                    if which == 0:
                        fd[j] = (eval_phi(spec, theta, p + e, gamma) - eval_phi(spec, theta, p - e, gamma)) / (2 * h)
                    else:
                        fd[j] = (eval_phi(spec, theta + e, p, gamma) - eval_phi(spec, theta - e, p, gamma)) / (2 * h)
                worst = max(worst, np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1.0))
    elapsed = time.perf_counter() - start
    detail = f"max relative finite-difference mismatch {worst:.1e} (tol 1e-5, 5x100 points)"
    assert report(2, "gradient suite", worst <= 1e-5, detail, elapsed, 5.0)


def test_criterion_3_inequalities():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    instances = [gen_inequality_qp(6, 3, 3, 2)[0], gen_equality_qp(10, 4, 2, 5)[0], gen_soc_ls(4, 1)[0]]
    worst_gap = worst_descent = -np.inf
    for k in range(1000):
        prob = instances[k % 3]
        u = rng.uniform(-2, 2, prob.n)
        p = cones.project_dual(prob.cone, rng.standard_normal(prob.m) * 2)
        pp = rng.standard_normal(prob.m) * 2
        gamma = rng.uniform(0.1, 5.0)
        gap = eval_L(prob, u, p) - eval_L_gamma(prob, u, pp, gamma) - (p - pp) @ (p - pp) / (2 * gamma)
        worst_gap = max(worst_gap, gap)
        v = rng.uniform(-2, 2, prob.n)
        B = prob.constants.B_G
        d = prob.G.value(u) - prob.G.value(v) - prob.G.gradient(v) @ (u - v) - 0.5 * B * (u - v) @ (u - v)
        worst_descent = max(worst_descent, d)
    elapsed = time.perf_counter() - start
    ok = worst_gap <= 1e-9 and worst_descent <= 1e-9
    detail = (f"max gap-bound excess {worst_gap:.1e}, max descent-inequality excess {worst_descent:.1e} "
              f"(tol 1e-9, 1000 samples each)")
    assert report(3, "inequality suite", ok, detail, elapsed, 10.0)


def test_criterion_4_subproblem_oracle():
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst = 0.0
    for k in range(200):
        kind = k % 3
        if kind == 0:
            J = SeparableL1Box(1)
        elif kind == 1:
            J = SeparableL1Box(1, lam=rng.uniform(0.1, 2.0))
        else:
            lo = rng.uniform(-3, 1)
            J = SeparableL1Box(1, 0.0, lo, lo + rng.uniform(0.2, 3))
        anchor = rng.uniform(-2, 2) if kind < 2 else rng.uniform(J.lower[0], J.upper[0])
        g, eps = rng.normal(), rng.uniform(0.1, 2.0)
        got = solve_block(scalar_prob(J), CORE, BlockWorkItem(0, np.array([g]), eps, np.array([anchor])))[0]
        worst = max(worst, abs(got - grid_oracle(J, g, anchor, eps, -8.0, 8.0)))
    elapsed = time.perf_counter() - start
    detail = f"max |solve_block - grid search| {worst:.1e} (tol 1e-3, 200 instances, grid step 1e-4)"
    assert report(4, "subproblem oracle equivalence", worst <= 1e-3, detail, elapsed, 10.0)


def test_criterion_5_single_block_reduction():
    prob, _ = gen_equality_qp(2, 1, 1, 0, Q=np.eye(2), c=np.zeros(2), A=[[1.0, 1.0]], b=[1.0])
    start = time.perf_counter()
    cs = resolve_config(prob, CORE, SolverConfig(mu=1e9))
    cv = resolve_config(prob, CORE, SolverConfig(variant="VAPP"))
    a = initial_state(prob, CORE, cs)
    b = initial_state(prob, CORE, cv)
    sampler = BlockSampler(0, 1)
    worst = 0.0
    for _ in range(100):
        a = spdcl_step(prob, CORE, cs, a, sampler)
        b = vapp_step(prob, CORE, cv, b)
        worst = max(worst, np.abs(a.u - b.u).max(), np.abs(a.p - b.p).max())
    elapsed = time.perf_counter() - start
    detail = f"max trajectory difference over 100 iterations {worst:.1e} (tol 1e-10)"
    assert report(5, "N=1 reduction", worst <= 1e-10, detail, elapsed, 1.0)


@pytest.fixture(scope="module")
def equality_runs():
    """30 seeds of SPDCL on the n=20, m=5, N=4 equality QP, t = 1e5."""
    prob, ref = gen_equality_qp(20, 5, 4, 1)
    cfg = SolverConfig(gamma=1.0, mu=10.0, max_iter=100000, trace_stride=1000)
    start = time.perf_counter()
    results = run_many(prob, CORE, cfg, SEEDS, ref)
    return prob, ref, cfg, results, time.perf_counter() - start


def test_criterion_6_convergence(equality_runs):
    prob, ref, cfg, results, elapsed = equality_runs
    assert np.linalg.norm(ref.p_star) < cfg.mu
    gaps = [abs(prob.G.value(r.u_bar) - ref.F_star) for r in results]
    feas = [np.linalg.norm(eval_theta(prob, r.u_bar)) for r in results]
    ok = np.mean(gaps) <= 1e-3 and np.mean(feas) <= 1e-3 and max(gaps) <= 1e-3 and max(feas) <= 1e-3
    detail = (f"mean |F(u_bar)-F*| {np.mean(gaps):.2e} (max {max(gaps):.2e}), "
              f"mean ||Theta(u_bar)|| {np.mean(feas):.2e} (max {max(feas):.2e}) at t=1e5 over 30 seeds (tol 1e-3)")
    assert report(6, "convergence to reference", ok, detail, elapsed, 60.0)


def test_criterion_7_rate(equality_runs):
    prob, ref, cfg, results, run_time = equality_runs
    start = time.perf_counter()
    ks = [rec.k for rec in results[0].trace]
    means = [(k, np.mean([r.trace[j].avg_feasibility for r in results])) for j, k in enumerate(ks)]
    slope, _, r2 = fit_rate(means, "avg_feasibility", 1000, 100000)

    rng = np.random.default_rng(7)
    probes = [(rng.uniform(-1, 1, prob.n), rng.uniform(-1, 1, prob.m)) for _ in range(5)]
    worst_ratio = -np.inf
    for t in (1000, 10000):
        short = run_many(prob, CORE, replace(cfg, max_iter=t), SEEDS)
        eps_bar = min(r.state.eps_min for r in short)
        for u, p in probes:
            m, s = mean_stderr([bifunction_gap(prob, r.u_bar, r.p_bar, u, p) for r in short])
            r0 = short[0]
            h3 = eval_h3(prob, CORE, r0.config, ref, u, p, r0.u0, r0.p0, r0.eps_first)
            bound = prob.N * h3 / (eps_bar * (t + 1))
            worst_ratio = max(worst_ratio, (m + 2 * s) / bound)
    elapsed = time.perf_counter() - start + run_time
    ok = slope <= -0.7 and worst_ratio <= 1.0
    detail = (f"log-log slope of mean avg_feasibility on [1e3,1e5] {slope:.4f} (r2 {r2:.6f}, need <= -0.7); "
              f"max (mean+2se gap)/bound {worst_ratio:.2e} at t in {{1e3,1e4}} (need <= 1)")
    assert report(7, "rate check", ok, detail, elapsed, 120.0)


def test_criterion_8_lyapunov():
    prob, ref = equality_toy()
    cfg = SolverConfig(gamma=1.0, mu=10.0, max_iter=10000, trace_stride=100)
    start = time.perf_counter()
    rcfg = resolve_config(prob, CORE, cfg)
    st0 = initial_state(prob, CORE, rcfg)
    eps0 = stepsize_update(rcfg.epsilon_init, st0.q, (prob.constants.B_G, prob.constants.T_bar, 1.0,
                                                      prob.constants.tau), CORE.beta)
    lam0 = eval_lambda(prob, CORE, rcfg, ref, st0.u, st0.p, eps0)
    results = run_many(prob, CORE, cfg, SEEDS, ref)
    means = [lam0]
    for k in (100, 1000, 10000):
        means.append(np.mean([next(rec.lambda_k for rec in r.trace if rec.k == k) for r in results]))
    # 5% relative noise, plus an absolute floor at double-precision rounding of O(1) terms
    trend_ok = all(b <= a + 0.05 * abs(a) + 1e-12 for a, b in zip(means, means[1:]))
    at_ref = eval_lambda(prob, CORE, rcfg, ref, ref.u_star, ref.p_star, eps0)
    elapsed = time.perf_counter() - start
    ok = trend_ok and abs(at_ref) <= 1e-10
    detail = (f"mean Lambda at k=0,1e2,1e3,1e4: {', '.join(f'{m:.3e}' for m in means)}; "
              f"Lambda(u*,p*) = {at_ref:.1e}")
    assert report(8, "Lyapunov behavior", ok, detail, elapsed)


def test_criterion_9_inequality_cone():
    prob, ref = gen_inequality_qp(6, 3, 3, 2)
    start = time.perf_counter()
    vapp = run(prob, CORE, SolverConfig(variant="VAPP", max_iter=1000000, trace_stride=1000000))
    dev = max(np.abs(vapp.state.u - ref.u_star).max(), np.abs(vapp.state.p - ref.p_star).max())
    assert np.linalg.norm(ref.p_star) < 10.0
    results = run_many(prob, CORE, SolverConfig(mu=10.0, max_iter=100000, trace_stride=100000), SEEDS)
    feas_avg = np.mean([feasibility_residual(prob, r.u_bar) for r in results])
    feas_last = np.mean([feasibility_residual(prob, r.state.u) for r in results])
    elapsed = time.perf_counter() - start
    ok = dev <= 1e-4 and feas_avg <= 1e-3
    detail = (f"max |VAPP(1e6) - active-set reference| {dev:.1e} (tol 1e-4); SPDCL mean feasibility "
              f"of u_bar {feas_avg:.2e}, of last iterate {feas_last:.2e} at t=1e5 over 30 seeds (tol 1e-3)")
    assert report(9, "inequality-cone instance", ok, detail, elapsed)


def test_criterion_10_determinism(tmp_path):
    cfg = {
        "problem": {"generator": "equality_qp", "params": {"n": 12, "m": 3, "N": 3}, "seed": 4},
        "solver": {"variant": "SPDCL", "gamma": 1.0, "mu": 10.0, "max_iter": 5000},
        "output": {"trace_stride": 250},
        "seeds": [0, 1, 2, 3, 4],
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    start = time.perf_counter()
    assert cli_main(["bench", str(path), "--out", str(tmp_path / "a")]) == 0
    assert cli_main(["bench", str(path), "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    names = sorted(f.name for f in (tmp_path / "a").iterdir())
    same = names == sorted(f.name for f in (tmp_path / "b").iterdir()) and all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    elapsed = time.perf_counter() - start
    detail = f"{len(names)} output files compared byte for byte across two bench invocations"
    assert report(10, "determinism", same, detail, elapsed)
