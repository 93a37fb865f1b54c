"""Penalty method for frictionless unilateral contact in 2D linear elasticity.

P1 finite elements on structured unit-square meshes, a semismooth Newton
solver for the penalized problem, a primal-dual active-set reference solver
for the variational inequality, and convergence-study tooling.
"""
from .cases import ProblemCase, get_case
from .elasticity import Material
from .errors import ContactError
from .mesh import BoundaryTag, Mesh, contact_trace_mesh, generate_structured_square, refine_uniform
from .penalty import PenaltyConfig, PenaltyState, solve_penalty
from .study import ConvergenceRecord, StudyConfig, run_eps_study, run_h_study
from .vi import VISolution, solve_vi

__all__ = [
    "BoundaryTag", "ContactError", "ConvergenceRecord", "Material", "Mesh", "PenaltyConfig",
    "PenaltyState", "ProblemCase", "StudyConfig", "VISolution", "contact_trace_mesh",
    "generate_structured_square", "get_case", "refine_uniform", "run_eps_study", "run_h_study",
    "solve_penalty", "solve_vi",
]
