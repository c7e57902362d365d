"""Command-line driver: ``spdcl validate | run | bench | gen``.

Exit codes: 0 success, 1 runtime failure, 2 configuration or validation
failure.  Everything that affects results lives in the config file.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import diagnostics
from .core import core_from_config, core_to_config
from .model import estimate_constants, load_problem, problem_to_dict, save_problem
from .problems import GENERATORS
from .solver import ConfigurationError, SolverConfig, resolve_config, run

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
_SECTIONS = {"problem", "solver", "core", "output", "seeds"}


@dataclass
class ExperimentConfig:
    problem: dict
    solver: SolverConfig
    core: object
    output: dict
    seeds: list
    raw: dict

    def digest(self):
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _fail(msg):
    raise ConfigurationError(msg)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        _fail(f"cannot read config {path}: {exc.strerror}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        _fail(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(raw, dict):
        _fail(f"{path}: top level must be a mapping")
    unknown = set(raw) - _SECTIONS
    if unknown:
        _fail(f"unknown config section(s): {', '.join(sorted(unknown))}")
    problem = raw.get("problem")
    if not isinstance(problem, dict):
        _fail("missing 'problem' section")
    if ("generator" in problem) == ("path" in problem):
        _fail("problem section needs exactly one of 'generator' or 'path'")
    if "generator" in problem and problem["generator"] not in GENERATORS:
        _fail(f"problem.generator: unknown generator {problem['generator']!r}; "
              f"choose from {', '.join(sorted(GENERATORS))}")
    output = dict(raw.get("output") or {})
    fmt = output.setdefault("trace_format", "csv")
    if fmt not in ("csv", "json"):
        _fail(f"output.trace_format must be csv or json, got {fmt!r}")
    output.setdefault("dir", "out")
    solver_raw = dict(raw.get("solver") or {})
    if "trace_stride" in output:
        solver_raw["trace_stride"] = output["trace_stride"]
    try:
        solver = SolverConfig.from_dict(solver_raw)
    except TypeError as exc:
        _fail(f"solver section: {exc}")
    try:
        core = core_from_config(raw.get("core", "quadratic"))
    except ValueError as exc:
        _fail(f"core: {exc}")
    seeds = raw.get("seeds", [])
    if not isinstance(seeds, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        _fail("seeds must be a list of integers")
    return ExperimentConfig(problem, solver, core, output, seeds, raw)


def build_problem(cfg: ExperimentConfig):
    spec = cfg.problem
    try:
        if "path" in spec:
            prob, ref = load_problem(spec["path"])
        else:
            params = dict(spec.get("params") or {})
            if "seed" in spec:
                params["seed"] = spec["seed"]
            prob, ref = GENERATORS[spec["generator"]](**params)
    except OSError as exc:
        _fail(f"problem: cannot load {spec.get('path')}: {exc.strerror}")
    except (TypeError, ValueError, KeyError) as exc:
        _fail(f"problem: {exc}")
    if not prob.constants.complete:
        prob = replace(prob, constants=estimate_constants(prob, 100, 0))
    return prob, ref


def resolve(cfg: ExperimentConfig):
    prob, ref = build_problem(cfg)
    solver = resolve_config(prob, cfg.core, cfg.solver)
    return prob, ref, solver


def _echo(cfg, prob, solver):
    out = {
        "problem": {**cfg.problem, "n": prob.n, "m": prob.m, "N": prob.N,
                    "cone": repr(prob.cone),
                    "constants": {k: getattr(prob.constants, k) for k in ("B_G", "tau", "T_bar", "c1", "c2")}},
        "core": core_to_config(cfg.core),
        "solver": solver.to_dict(),
        "output": cfg.output,
        "seeds": cfg.seeds,
    }
    return json.dumps(out, indent=2, sort_keys=True)


def cmd_validate(config_path, stream=None):
    cfg = load_config(config_path)
    prob, _, solver = resolve(cfg)
    print(_echo(cfg, prob, solver), file=stream or sys.stdout)
    return EXIT_OK


def _out_dir(cfg, override):
    path = override or cfg.output["dir"]
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc.strerror}") from exc
    if not os.access(path, os.W_OK):
        raise OSError(f"output directory {path} is not writable")
    return path


def _vec(a):
    return None if a is None else [float(x) for x in a]


def _result_json(res, prob, ref):
    from .model import eval_objective, feasibility_residual

    st = res.state
    out = {
        "iterations": st.k,
        "stop_reason": res.stop_reason,
        "wall_time": res.wall_time,
        "u_bar": _vec(st.u_bar),
        "p_bar": _vec(st.p_bar),
        "u_last": _vec(st.u),
        "p_last": _vec(st.p),
        "avg_objective": None if st.u_bar is None else eval_objective(prob, st.u_bar),
        "avg_feasibility": None if st.u_bar is None else feasibility_residual(prob, st.u_bar),
        "feasibility": feasibility_residual(prob, st.u),
        "eps_min": None if math.isinf(st.eps_min) else st.eps_min,
    }
    if ref is not None and st.u_bar is not None:
        out["F_star"] = ref.F_star
        out["avg_objective_gap"] = abs(out["avg_objective"] - ref.F_star)
    return json.dumps(out, indent=2) + "\n"


def cmd_run(config_path, out=None):
    cfg = load_config(config_path)
    prob, ref, solver = resolve(cfg)
    path = _out_dir(cfg, out)
    res = run(prob, cfg.core, solver, ref)
    ext = cfg.output["trace_format"]
    diagnostics.export_trace(res.trace, os.path.join(path, f"trace.{ext}"), ext)
    diagnostics.write_atomic(os.path.join(path, "result.json"), _result_json(res, prob, ref))
    return EXIT_OK


def _bench_task(args):
    prob, core, solver, ref = args
    try:
        return run(prob, core, solver, ref), None
    except Exception as exc:  # reported per seed
        return None, f"{type(exc).__name__}: {exc}"


def _summary(cfg, seeds, results, ref):
    ok = [r for r in results if r is not None]
    ks = sorted(set.intersection(*[{rec.k for rec in r.trace} for r in ok])) if ok else []
    checkpoints = []
    feas_means, gap_means = [], []
    for k in ks:
        recs = [next(rec for rec in r.trace if rec.k == k) for r in ok]
        entry = {"k": k}
        for name in ("avg_feasibility", "avg_objective", "feasibility", "objective"):
            m, s = diagnostics.mean_stderr([getattr(rec, name) for rec in recs])
            entry[name] = {"mean": m, "stderr": s}
        feas_means.append((k, entry["avg_feasibility"]["mean"]))
        if ref is not None:
            m, s = diagnostics.mean_stderr([abs(rec.avg_objective - ref.F_star) for rec in recs])
            entry["avg_objective_gap"] = {"mean": m, "stderr": s}
            gap_means.append((k, m))
        checkpoints.append(entry)
    kmin, kmax = cfg.output.get("fit_k_min"), cfg.output.get("fit_k_max")

    def slope(points):
        try:
            return diagnostics.fit_rate(points, "value", kmin, kmax)[0]
        except ValueError:
            return None

    return {
        "config_digest": cfg.digest(),
        "seeds": seeds,
        "checkpoints": checkpoints,
        "slopes": {"avg_feasibility": slope(feas_means),
                   "avg_objective_gap": slope(gap_means) if ref is not None else None},
    }


def cmd_bench(config_path, out=None, jobs=1, stream=None):
    cfg = load_config(config_path)
    if not cfg.seeds:
        _fail("bench needs a nonempty 'seeds' list")
    prob, ref, solver = resolve(cfg)
    path = _out_dir(cfg, out)
    tasks = [(prob, cfg.core, replace(solver, rng_seed=s), ref) for s in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_bench_task, tasks))
    else:
        outcomes = [_bench_task(t) for t in tasks]
    ext = cfg.output["trace_format"]
    failed = False
    results = []
    for idx, (seed, (res, err)) in enumerate(zip(cfg.seeds, outcomes)):
        if err is not None:
            print(f"seed {seed}: FAILED {err}", file=stream or sys.stderr)
            failed = True
            results.append(None)
            continue
        diagnostics.export_trace(res.trace, os.path.join(path, f"trace_{idx:03d}_seed{seed}.{ext}"), ext)
        results.append(res)
    summary = _summary(cfg, cfg.seeds, results, ref)
    diagnostics.write_atomic(os.path.join(path, "summary.json"), json.dumps(summary, indent=2) + "\n")
    return EXIT_RUNTIME if failed else EXIT_OK


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_gen(generator, params, out):
    if generator not in GENERATORS:
        _fail(f"unknown generator {generator!r}; choose from {', '.join(sorted(GENERATORS))}")
    kw = {}
    for item in params:
        if "=" not in item:
            _fail(f"generator parameter {item!r} is not of the form key=value")
        key, val = item.split("=", 1)
        kw[key] = _parse_value(val)
    try:
        prob, ref = GENERATORS[generator](**kw)
    except (TypeError, ValueError) as exc:
        _fail(f"{generator}: {exc}")
    text = json.dumps(problem_to_dict(prob, ref), indent=1) + "\n"
    diagnostics.write_atomic(out, text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="spdcl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", help="check a config and echo it with defaults resolved")
    p.add_argument("config")
    p = sub.add_parser("run", help="run one seed")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p = sub.add_parser("bench", help="run every seed and write an aggregate summary")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p = sub.add_parser("gen", help="serialize a generated instance and its reference")
    p.add_argument("generator", choices=sorted(GENERATORS))
    p.add_argument("params", nargs="*", help="key=value generator parameters")
    p.add_argument("--out", required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.config)
        if args.command == "run":
            return cmd_run(args.config, args.out)
        if args.command == "bench":
            return cmd_bench(args.config, args.out, args.jobs)
        return cmd_gen(args.generator, args.params, args.out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception:
        traceback.print_exc()
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
