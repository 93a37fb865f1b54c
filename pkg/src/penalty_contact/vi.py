"""Primal-dual active-set solver for the discrete contact variational inequality.

Constraints are nodal: ``u_n = -u_y <= 0`` at every contact node.  At the
solution ``K U = F + B^T lam`` on free dofs, where ``B^T lam`` puts the
multiplier ``lam_i >= 0`` on the y dof of contact node ``i`` (an upward
reaction from the foundation).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elasticity import factorize, solve_factorized
from .errors import NonConvergenceError
from .mesh import Mesh, TraceMesh, contact_trace_mesh
from .norms import TraceFunction, boundary_mass_matrix
from .penalty import _Problem, normal_trace

MAX_SWEEPS = 100


@dataclass
class VISolution:
    U: np.ndarray
    multiplier: np.ndarray   # lam_i >= 0 per contact node, trace-mesh order
    active: np.ndarray       # boolean mask over contact nodes
    u_n: np.ndarray
    sweeps: int

    @property
    def active_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.active)


def solve_vi(m: Mesh, case, tol: float = 1e-10, max_sweeps: int = MAX_SWEEPS) -> VISolution:
    """Solve the discrete VI; terminates when the active set stops changing."""
    prob = _Problem(m, case, None)
    sys_ = prob.system
    free = prob.free
    trace = contact_trace_mesh(m)
    # position of each contact node's y dof inside the free-dof vector
    free_pos = np.full(m.num_dofs, -1, dtype=np.int64)
    free_pos[free] = np.arange(len(free))
    ydof = free_pos[2 * trace.node_ids + 1]
    A_full = sys_.matrix.tocsr()

    U = sys_.expand(solve_factorized(A_full, sys_.rhs))
    lam = np.zeros(trace.num_nodes)
    active = normal_trace(m, U, trace.node_ids) > tol
    history = [int(active.sum())]
    for sweep in range(1, max_sweeps + 1):
        keep = np.ones(len(free), dtype=bool)
        keep[ydof[active]] = False
        x = np.zeros(len(free))
        if keep.any():
            A = A_full[keep][:, keep].tocsc()
            x[keep] = solve_factorized(A, sys_.rhs[keep], factorize(A))
        react = A_full @ x - sys_.rhs
        lam = np.where(active, react[ydof], 0.0)
        U = sys_.expand(x)
        u_n = normal_trace(m, U, trace.node_ids)
        new_active = np.where(active, lam > -tol, u_n > tol)
        history.append(int(new_active.sum()))
        if np.array_equal(new_active, active):
            return VISolution(U, lam, active, u_n, sweep)
        active = new_active
    raise NonConvergenceError(f"active set did not settle in {max_sweeps} sweeps", history)


def multiplier_as_trace_function(sol: VISolution, trace: TraceMesh) -> TraceFunction:
    """Contact pressure density ``-sigma_n >= 0`` from lumped nodal multipliers."""
    weights = np.asarray(boundary_mass_matrix(trace).sum(axis=1)).ravel()
    return TraceFunction(trace, sol.multiplier / weights)
