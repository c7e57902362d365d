"""Stochastic primal-dual coordinate methods for cone-constrained composite problems."""
from . import cones, core, diagnostics, lagrangian, model, oracles, problems, solver, subproblem
from .cones import (ConeSpec, Full, NonNegOrthant, Product, SecondOrder, Zero, dual_cone,
                    moreau_split, project, project_ball)
from .core import CoreFunction, bregman_D
from .model import BlockStructure, Constants, ProblemSpec, estimate_constants, eval_objective, \
    eval_theta, feasibility_residual
from .problems import ReferenceSolution, gen_equality_qp, gen_inequality_qp, gen_soc_ls
from .solver import ConfigurationError, SolverConfig, run, run_many

__version__ = "0.1.0"
