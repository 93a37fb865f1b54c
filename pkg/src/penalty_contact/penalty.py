"""Penalty formulation of frictionless unilateral contact on y = 0.

The outward normal on the contact side is ``(0, -1)``, so the normal trace
of a displacement is ``u_n = -u_y`` and penetration means ``u_n > 0``.

On each contact edge ``u_n`` is linear, so the set where it is positive is a
sub-interval ``[s_lo, s_hi]`` of the reference edge.  All contact integrals
(force, Jacobian, energy) are polynomial on that sub-interval and are
evaluated in closed form from its monomial moments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .elasticity import (
    SparseSystem,
    apply_dirichlet,
    assemble_load,
    assemble_stiffness,
    build_dofmap,
    factorize,
    solve_factorized,
)
from .errors import InvalidArgumentError, NonConvergenceError
from .mesh import BoundaryTag, Mesh, contact_trace_mesh

MAX_HALVINGS = 40
ARMIJO = 1e-4


@dataclass(frozen=True)
class PenaltyConfig:
    epsilon: float
    newton_tol: float = 1e-10
    max_iters: int = 50
    # derivative of [.]_+ at 0; only "inactive" (value 0) is supported
    active_zero_convention: str = "inactive"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if not self.newton_tol > 0:
            raise InvalidArgumentError("newton_tol must be positive")
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be at least 1")
        if self.active_zero_convention != "inactive":
            raise InvalidArgumentError("only the 'inactive' convention is implemented")


@dataclass
class PenaltyState:
    U: np.ndarray
    u_n: np.ndarray              # normal trace at contact nodes (trace-mesh order)
    residual_history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)
    iterations: int = 0


def positive_part(a):
    """``max(a, 0)``, elementwise for arrays."""
    if np.isscalar(a):
        return a if a > 0 else 0.0 * a
    return np.maximum(a, 0.0)


def normal_trace(m: Mesh, U: np.ndarray, nodes: Optional[np.ndarray] = None) -> np.ndarray:
    """``u_n = -u_y`` at the given nodes (default: every node)."""
    if nodes is None:
        return -U[1::2]
    return -U[2 * np.asarray(nodes) + 1]


def _contact_moments(m: Mesh, U: np.ndarray):
    """Per contact edge: endpoint values, slope, length and moments of the positive set."""
    edges = m.edges_with(BoundaryTag.CONTACT)
    a = -U[2 * edges[:, 0] + 1]
    b = -U[2 * edges[:, 1] + 1]
    length = np.abs(m.nodes[edges[:, 1], 0] - m.nodes[edges[:, 0], 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(a != b, a / (a - b), 0.0)
    lo = np.where(a > 0, 0.0, np.where(b > 0, root, 0.0))
    hi = np.where(a > 0, np.where(b > 0, 1.0, root), np.where(b > 0, 1.0, 0.0))
    moments = [(hi ** (k + 1) - lo ** (k + 1)) / (k + 1) for k in range(3)]
    return edges, a, b - a, length, moments


def penalty_force(m: Mesh, U: np.ndarray, cfg: PenaltyConfig) -> np.ndarray:
    """Nodal vector of ``(1/eps) <[u_n]_+, v_n>`` over all test functions."""
    edges, a, d, L, (m0, m1, m2) = _contact_moments(m, U)
    w = L / cfg.epsilon
    # u(s) = a + d s against phi_a = 1 - s and phi_b = s
    fa = w * (a * m0 + (d - a) * m1 - d * m2)
    fb = w * (a * m1 + d * m2)
    out = np.zeros_like(U, dtype=float)
    # v_n = -v_y
    np.add.at(out, 2 * edges[:, 0] + 1, -fa)
    np.add.at(out, 2 * edges[:, 1] + 1, -fb)
    return out


def penalty_jacobian(m: Mesh, U: np.ndarray, cfg: PenaltyConfig) -> sp.csr_matrix:
    """Generalized derivative of :func:`penalty_force` (derivative of [.]_+ at 0 is 0)."""
    edges, _, _, L, (m0, m1, m2) = _contact_moments(m, U)
    w = L / cfg.epsilon
    jaa = w * (m0 - 2 * m1 + m2)
    jab = w * (m1 - m2)
    jbb = w * m2
    ya, yb = 2 * edges[:, 0] + 1, 2 * edges[:, 1] + 1
    rows = np.concatenate([ya, ya, yb, yb])
    cols = np.concatenate([ya, yb, ya, yb])
    vals = np.concatenate([jaa, jab, jab, jbb])
    J = sp.coo_matrix((vals, (rows, cols)), shape=(len(U), len(U))).tocsr()
    J.sum_duplicates()
    return J


def contact_penalty_energy(m: Mesh, U: np.ndarray, cfg: PenaltyConfig) -> float:
    """``(1/2eps) ||[u_n]_+||^2`` on the contact boundary, exactly."""
    _, a, d, L, (m0, m1, m2) = _contact_moments(m, U)
    return float(np.sum(L * (a * a * m0 + 2 * a * d * m1 + d * d * m2)) / (2 * cfg.epsilon))


class _Problem:
    """Assembled pieces shared by the penalty and active-set solvers."""

    def __init__(self, m: Mesh, case, epsilon: Optional[float] = None):
        self.mesh = m
        self.K = assemble_stiffness(m, case.material)
        self.F = assemble_load(m, case.body_force, case.traction, case.traction_breaks)
        self.dofs = build_dofmap(m, case.dirichlet_for(epsilon))
        self.system: SparseSystem = apply_dirichlet(self.K, self.F, self.dofs)
        self.free = self.dofs.free


def penalty_energy(m: Mesh, U: np.ndarray, case, cfg: PenaltyConfig, problem=None) -> float:
    """``1/2 a(U,U) - L(U) + (1/2eps) ||[u_n]_+||^2``."""
    if problem is None:
        K = assemble_stiffness(m, case.material)
        F = assemble_load(m, case.body_force, case.traction, case.traction_breaks)
    else:
        K, F = problem.K, problem.F
    return float(0.5 * U @ (K @ U) - F @ U) + contact_penalty_energy(m, U, cfg)


def solve_penalty(m: Mesh, case, cfg: PenaltyConfig) -> PenaltyState:
    """Semismooth Newton for the discrete penalty problem.

    Starts from the unconstrained elastic solution and takes full steps.  Only
    when a full step increases the residual norm is it shortened, by halving
    until the energy satisfies an Armijo decrease; the energy is convex and
    the Newton direction is a descent direction, so this always succeeds.
    """
    prob = _Problem(m, case, cfg.epsilon)
    sys_ = prob.system
    free = prob.free
    trace_ids = contact_trace_mesh(m).node_ids

    def residual(U):
        return sys_.matrix @ U[free] + penalty_force(m, U, cfg)[free] - sys_.rhs

    def energy(U):
        return penalty_energy(m, U, case, cfg, prob)

    scale = np.linalg.norm(sys_.rhs)
    tol = cfg.newton_tol * (scale if scale > 0 else 1.0)

    U = sys_.expand(solve_factorized(sys_.matrix, sys_.rhs))
    R = residual(U)
    rnorm = float(np.linalg.norm(R))
    state = PenaltyState(U, normal_trace(m, U, trace_ids), [rnorm], [energy(U)], 0)
    it = 0
    while rnorm > tol:
        if it >= cfg.max_iters:
            raise NonConvergenceError(
                f"semismooth Newton did not converge in {cfg.max_iters} iterations "
                f"(residual {rnorm:.3e}, target {tol:.3e})", state.residual_history)
        J = penalty_jacobian(m, U, cfg)[free][:, free]
        A = (sys_.matrix + J).tocsc()
        dU = solve_factorized(A, -R, factorize(A))
        trial = U.copy()
        trial[free] += dU
        R_trial = residual(trial)
        if np.linalg.norm(R_trial) > rnorm:
            e0, slope, step = state.energy_history[-1], float(R @ dU), 1.0
            for _ in range(MAX_HALVINGS):
                if energy(trial) <= e0 + ARMIJO * step * slope:
                    break
                step *= 0.5
                trial = U.copy()
                trial[free] += step * dU
            R_trial = residual(trial)
        U, R = trial, R_trial
        rnorm = float(np.linalg.norm(R))
        it += 1
        state.residual_history.append(rnorm)
        state.energy_history.append(energy(U))
    state.U = U
    state.u_n = normal_trace(m, U, trace_ids)
    state.iterations = it
    return state
