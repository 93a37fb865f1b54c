"""Plane-strain linear elasticity with P1 triangles.

Degrees of freedom are interleaved: node ``k`` owns dofs ``2k`` (x) and
``2k + 1`` (y).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, IllPosedProblemError, InvalidArgumentError, SingularSystemError
from .mesh import BoundaryTag, Mesh

VectorField = Callable[[np.ndarray, np.ndarray], tuple]

DEGENERATE_AREA = 1e-14
SOLVE_RTOL = 1e-12

# Gauss-Legendre on [0, 1]
_GAUSS2_S = 0.5 + np.array([-0.5, 0.5]) / np.sqrt(3.0)
_GAUSS2_W = np.array([0.5, 0.5])


@dataclass(frozen=True)
class Material:
    mu: float
    lambda_lame: float

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidArgumentError(f"mu must be positive, got {self.mu}")
        if not self.lambda_lame >= 0:
            raise InvalidArgumentError(f"lambda_lame must be nonnegative, got {self.lambda_lame}")

    @classmethod
    def from_engineering(cls, young: float, poisson: float) -> "Material":
        if not (young > 0 and 0 <= poisson < 0.5):
            raise InvalidArgumentError(f"need E > 0 and 0 <= nu < 1/2, got E={young}, nu={poisson}")
        mu = young / (2.0 * (1.0 + poisson))
        lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
        return cls(mu, lam)

    @property
    def young(self) -> float:
        return self.mu * (3 * self.lambda_lame + 2 * self.mu) / (self.lambda_lame + self.mu)

    def elasticity_matrix(self) -> np.ndarray:
        """Plane-strain Hooke law in Voigt form (engineering shear strain)."""
        lam, mu = self.lambda_lame, self.mu
        return np.array([[lam + 2 * mu, lam, 0.0],
                         [lam, lam + 2 * mu, 0.0],
                         [0.0, 0.0, mu]])


def _gradients(m: Mesh):
    """Constant gradients of the three barycentric shape functions per triangle."""
    p = m.nodes[m.triangles]
    area = m.areas
    if np.any(area <= DEGENERATE_AREA):
        bad = int(np.argmin(area))
        raise AssemblyError(f"degenerate triangle {bad} with area {area[bad]:.3e}")
    x, y = p[..., 0], p[..., 1]
    # grad phi_i = (y_j - y_k, x_k - x_j) / (2A) over cyclic (i, j, k)
    dphidx = np.column_stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]]) / (2 * area[:, None])
    dphidy = np.column_stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]]) / (2 * area[:, None])
    return dphidx, dphidy, area


def strain_matrices(m: Mesh) -> np.ndarray:
    """(T, 3, 6) strain-displacement matrices mapping element dofs to Voigt strain."""
    dx, dy, _ = _gradients(m)
    B = np.zeros((len(m.triangles), 3, 6))
    B[:, 0, 0::2] = dx
    B[:, 1, 1::2] = dy
    B[:, 2, 0::2] = dy
    B[:, 2, 1::2] = dx
    return B


def element_stiffness(m: Mesh, mat: Material) -> np.ndarray:
    B = strain_matrices(m)
    D = mat.elasticity_matrix()
    return m.areas[:, None, None] * np.einsum("tki,kl,tlj->tij", B, D, B)


def element_dofs(m: Mesh) -> np.ndarray:
    t = m.triangles
    dofs = np.empty((len(t), 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * t
    dofs[:, 1::2] = 2 * t + 1
    return dofs


def assemble_stiffness(m: Mesh, mat: Material) -> sp.csr_matrix:
    Ke = element_stiffness(m, mat)
    dofs = element_dofs(m)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(m.num_dofs, m.num_dofs)).tocsr()
    K.sum_duplicates()
    return K


def _eval_field(field: Optional[VectorField], x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if field is None:
        return np.zeros(x.shape + (2,))
    fx, fy = field(x, y)
    return np.stack(np.broadcast_arrays(np.asarray(fx, float), np.asarray(fy, float)), axis=-1) \
        * np.ones(x.shape + (1,))


def assemble_load(m: Mesh, f: Optional[VectorField] = None, g: Optional[VectorField] = None,
                  breakpoints: Sequence[float] = ()) -> np.ndarray:
    """Load vector for body force ``f`` and Neumann traction ``g``.

    Triangles use the three edge-midpoint rule; Neumann edges use two-point
    Gauss, split at ``breakpoints`` (abscissae or ordinates where ``g`` jumps)
    so piecewise-smooth tractions are integrated piece by piece.
    """
    F = np.zeros(m.num_dofs)
    if f is not None:
        t = m.triangles
        p = m.nodes[t]
        mids = 0.5 * (p[:, [0, 1, 2]] + p[:, [1, 2, 0]])   # midpoints of edges 01, 12, 20
        fq = _eval_field(f, mids[..., 0], mids[..., 1])    # (T, 3, 2)
        w = m.areas / 3.0
        # phi_0 is 1/2 at midpoints of edges 01 and 20, zero at 12
        share = np.array([[0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
        contrib = w[:, None, None] * np.einsum("iq,tqc->tic", share, fq)
        np.add.at(F, 2 * t, contrib[..., 0])
        np.add.at(F, 2 * t + 1, contrib[..., 1])
    if g is not None:
        edges = m.edges_with(BoundaryTag.NEUMANN)
        if len(edges):
            a, b = m.nodes[edges[:, 0]], m.nodes[edges[:, 1]]
            cuts = [np.zeros(len(edges)), np.ones(len(edges))]
            for c in breakpoints:
                for k in (0, 1):
                    da = b[:, k] - a[:, k]
                    with np.errstate(divide="ignore", invalid="ignore"):
                        s = np.where(da != 0, (c - a[:, k]) / da, -1.0)
                    cuts.append(np.where((s > 0) & (s < 1), s, 0.0))
            cuts = np.sort(np.column_stack(cuts), axis=1)
            length = np.linalg.norm(b - a, axis=1)
            fa = np.zeros((len(edges), 2))
            fb = np.zeros((len(edges), 2))
            for k in range(cuts.shape[1] - 1):
                lo, hi = cuts[:, k], cuts[:, k + 1]
                for sq, wq in zip(_GAUSS2_S, _GAUSS2_W):
                    s = lo + (hi - lo) * sq
                    pt = a + s[:, None] * (b - a)
                    gq = _eval_field(g, pt[:, 0], pt[:, 1])
                    wgt = (wq * (hi - lo) * length)[:, None]
                    fa += wgt * (1 - s)[:, None] * gq
                    fb += wgt * s[:, None] * gq
            for nodes_, vals in ((edges[:, 0], fa), (edges[:, 1], fb)):
                np.add.at(F, 2 * nodes_, vals[:, 0])
                np.add.at(F, 2 * nodes_ + 1, vals[:, 1])
    return F


@dataclass(frozen=True, eq=False)
class DofMap:
    num_dofs: int
    constrained: np.ndarray  # sorted constrained dof indices
    values: np.ndarray       # prescribed values, aligned with ``constrained``

    @property
    def free(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.num_dofs), self.constrained)


def build_dofmap(m: Mesh, dirichlet: Optional[VectorField] = None) -> DofMap:
    nodes = m.dirichlet_nodes()
    vals = _eval_field(dirichlet, m.nodes[nodes, 0], m.nodes[nodes, 1])
    dofs = np.column_stack([2 * nodes, 2 * nodes + 1]).ravel()
    return DofMap(m.num_dofs, dofs, vals.ravel())


@dataclass(frozen=True, eq=False)
class SparseSystem:
    matrix: sp.csr_matrix  # free x free
    rhs: np.ndarray
    dofs: DofMap

    def expand(self, u_free: np.ndarray) -> np.ndarray:
        u = np.zeros(self.dofs.num_dofs)
        u[self.dofs.free] = u_free
        u[self.dofs.constrained] = self.dofs.values
        return u


def apply_dirichlet(K: sp.spmatrix, F: np.ndarray, dofs: DofMap) -> SparseSystem:
    if len(dofs.constrained) == 0:
        raise IllPosedProblemError("no Dirichlet dofs: stiffness is singular (meas(Gamma_D) = 0)")
    K = sp.csr_matrix(K)
    free, con = dofs.free, dofs.constrained
    Kff = K[free][:, free].tocsr()
    rhs = F[free] - K[free][:, con] @ dofs.values
    return SparseSystem(Kff, rhs, dofs)


def factorize(A: sp.spmatrix):
    try:
        return spla.splu(sp.csc_matrix(A))
    except RuntimeError as exc:  # SuperLU reports exact singularity this way
        raise SingularSystemError(str(exc)) from exc


def solve_factorized(A: sp.spmatrix, b: np.ndarray, lu=None, rtol: float = SOLVE_RTOL) -> np.ndarray:
    """Direct solve with up to two steps of iterative refinement."""
    lu = lu if lu is not None else factorize(A)
    x = lu.solve(b)
    nb = np.linalg.norm(b)
    for _ in range(2):
        r = b - A @ x
        if not np.all(np.isfinite(r)):
            raise SingularSystemError("non-finite solution")
        if np.linalg.norm(r) <= rtol * nb:
            break
        x = x + lu.solve(r)
    return x


def solve_spd(system: SparseSystem) -> np.ndarray:
    x = solve_factorized(system.matrix, system.rhs)
    return system.expand(x)


def interpolate_nodal(m: Mesh, u_exact: VectorField) -> np.ndarray:
    vals = _eval_field(u_exact, m.nodes[:, 0], m.nodes[:, 1])
    return vals.ravel()


def ellipticity_estimate(system: SparseSystem) -> float:
    """Smallest eigenvalue of the constrained stiffness (a discrete coercivity diagnostic)."""
    A = system.matrix
    if A.shape[0] <= 200:
        return float(np.linalg.eigvalsh(A.toarray())[0])
    val = spla.eigsh(sp.csc_matrix(A), k=1, sigma=0.0, which="LM", return_eigenvectors=False)
    return float(val[0])
