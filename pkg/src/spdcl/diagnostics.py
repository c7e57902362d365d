"""Run traces, Lyapunov and rate-bound quantities, and trace export."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, asdict, fields
from typing import Optional

import numpy as np

from .core import bregman_D
from .lagrangian import eval_L, eval_L_gamma
from .model import eval_objective, feasibility_residual

__all__ = [
    "TraceRecord",
    "make_record",
    "eval_lambda",
    "eval_h3",
    "bifunction_gap",
    "fit_rate",
    "export_trace",
    "read_trace",
    "write_atomic",
    "mean_stderr",
]

CSV_COLUMNS = ("k", "epsilon", "objective", "feasibility", "avg_objective", "avg_feasibility",
               "L", "L_gamma", "lambda", "eps_min")
# CSV column -> record attribute
_ATTR = {"L": "L_value", "L_gamma": "L_gamma_value", "lambda": "lambda_k",
         "eps_min": "eps_min_so_far"}


class MissingReferenceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    k: int
    epsilon: float
    objective: float
    feasibility: float
    avg_objective: float
    avg_feasibility: float
    L_value: float
    L_gamma_value: float
    lambda_k: Optional[float]
    eps_min_so_far: float


def make_record(prob, core, config, state, reference=None) -> TraceRecord:
    u_bar = state.u_bar
    lam = None
    if reference is not None:
        lam = eval_lambda(prob, core, config, reference, state.u, state.p, state.epsilon)
    return TraceRecord(
        k=int(state.k),
        epsilon=float(state.epsilon),
        objective=eval_objective(prob, state.u),
        feasibility=feasibility_residual(prob, state.u),
        avg_objective=eval_objective(prob, u_bar),
        avg_feasibility=feasibility_residual(prob, u_bar),
        L_value=eval_L(prob, state.u, state.p),
        L_gamma_value=eval_L_gamma(prob, state.u, state.p, config.gamma),
        lambda_k=lam,
        eps_min_so_far=float(state.eps_min),
    )


def _rho(config, N):
    return config.rho if config.rho is not None else config.gamma / (2 * N - 1)


def eval_lambda(prob, core, config, reference, u_prime, p_prime, epsilon_k) -> float:
    """Lyapunov value at ``(u', p')`` relative to the saddle point ``reference``:

        D(u*, u') + eps/(2 N rho) ||p* - p'||^2
                  + ((N-1) eps / N) (L_gamma(u', p') - L(u*, p*))
    """
    if reference is None:
        raise MissingReferenceError("the Lyapunov function needs a reference saddle point")
    N = prob.N
    rho = _rho(config, N)
    u_s, p_s = reference.u_star, reference.p_star
    dp = p_s - np.asarray(p_prime, dtype=float)
    val = bregman_D(core, u_s, u_prime) + epsilon_k / (2 * N * rho) * float(dp @ dp)
    if N > 1:
        gap = eval_L_gamma(prob, u_prime, p_prime, config.gamma) - eval_L(prob, u_s, p_s)
        val += (N - 1) * epsilon_k / N * gap
    return float(val)


def eval_h3(prob, core, config, reference, u, p, u0, p0, eps0) -> float:
    """Constant of the ergodic bifunction bound at ``(u, p)`` for a run started at ``(u0, p0)``."""
    if reference is None:
        raise MissingReferenceError("h3 needs a reference saddle point")
    N, gamma = prob.N, config.gamma
    u_s, p_s = reference.u_star, reference.p_star
    p = np.asarray(p, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    val = bregman_D(core, u, u0) + eps0 / gamma * float((p - p0) @ (p - p0))
    if N > 1:
        val += (N - 1) / N * bregman_D(core, u_s, u0)
        bracket = (float((p_s - p0) @ (p_s - p0)) / (2 * gamma)
                   + eval_L_gamma(prob, u0, p0, gamma) - eval_L(prob, u_s, p_s))
        val += (2 * N - 1) * (N - 1) * eps0 / N ** 2 * bracket
    return float(val)


def bifunction_gap(prob, u_bar, p_bar, u, p) -> float:
    """L(u_bar, p) - L(u, p_bar)."""
    return eval_L(prob, u_bar, p) - eval_L(prob, u, p_bar)


def fit_rate(trace, field, k_min=None, k_max=None):
    """Least-squares fit of log(field) against log(k).

    ``trace`` is a sequence of :class:`TraceRecord` (``field`` an attribute
    or CSV column name) or of ``(k, value)`` pairs.  Nonpositive values are
    skipped.

    Returns
    -------
    slope, intercept, r2 : float
    """
    attr = _ATTR.get(field, field)
    ks, vals = [], []
    for rec in trace:
        if isinstance(rec, TraceRecord):
            k, v = rec.k, getattr(rec, attr)
        else:
            k, v = rec
        if k_min is not None and k < k_min or k_max is not None and k > k_max:
            continue
        if v is None or not v > 0 or k <= 0:
            continue
        ks.append(k)
        vals.append(v)
    if len(ks) < 10:
        raise ValueError(f"need at least 10 positive records in range, got {len(ks)}")
    x = np.log(np.asarray(ks, dtype=float))
    y = np.log(np.asarray(vals, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    return float(slope), float(intercept), r2


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def trace_to_text(trace, format="csv"):
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in trace:
            writer.writerow([_fmt(getattr(rec, _ATTR.get(col, col))) for col in CSV_COLUMNS])
        return buf.getvalue()
    if format == "json":
        rows = []
        for rec in trace:
            rows.append({f.name: getattr(rec, f.name) for f in fields(TraceRecord)})
        # repr of a Python float is the shortest exact round-trip form
        return json.dumps(rows, indent=1, allow_nan=True) + "\n"
    raise ValueError(f"unknown trace format {format!r}")


def export_trace(trace, path, format="csv"):
    write_atomic(path, trace_to_text(trace, format))


def read_trace(path, format=None):
    """Parse a trace written by :func:`export_trace` back into records."""
    path = os.fspath(path)
    if format is None:
        format = "json" if path.endswith(".json") else "csv"
    with open(path, newline="") as fh:
        if format == "json":
            return [TraceRecord(**row) for row in json.load(fh)]
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            kw = {}
            for col in CSV_COLUMNS:
                attr = _ATTR.get(col, col)
                val = row[col]
                if attr == "k":
                    kw[attr] = int(val)
                elif val == "":
                    kw[attr] = None
                else:
                    kw[attr] = float(val)
            out.append(TraceRecord(**kw))
        return out


def mean_stderr(values):
    """Across-seed mean and standard error (0 for a single value)."""
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return math.nan, math.nan
    if a.size == 1:
        return float(a[0]), 0.0
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))
