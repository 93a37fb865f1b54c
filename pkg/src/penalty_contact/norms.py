"""Error norms on the domain and Sobolev-scale norms on the contact boundary.

Fractional norms on the contact boundary come from spectral interpolation of
the discrete 1D H^1 scale.  With boundary mass ``M``, boundary stiffness
``A`` and M-orthonormal eigenpairs ``A phi_i = theta_i M phi_i``,

    ||v||_s^2 = sum_i (1 + theta_i)^s (phi_i^T M v)^2,    -1 <= s <= 1,

which is exact at s = 0 (L^2) and s = 1 (H^1), and gives the dual norm of the
discrete H^1 scale at s = -1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .elasticity import Material, _gradients, strain_matrices
from .errors import InvalidArgumentError
from .mesh import Mesh, TraceMesh, locate_points

# Gauss-Legendre, 4 points on [0, 1]
_G4_X, _G4_W = np.polynomial.legendre.leggauss(4)
_G4_S = 0.5 * (_G4_X + 1.0)
_G4_W = 0.5 * _G4_W


@dataclass(frozen=True, eq=False)
class TraceFunction:
    """Continuous piecewise-linear function on a contact trace mesh."""

    trace: TraceMesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.trace.num_nodes,):
            raise InvalidArgumentError(
                f"expected {self.trace.num_nodes} nodal values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("trace function values must be finite")
        object.__setattr__(self, "values", vals)

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.trace.x, self.values)

    def integral(self) -> float:
        v = self.values
        return float(np.sum(self.trace.lengths * 0.5 * (v[:-1] + v[1:])))


def boundary_mass_matrix(trace: TraceMesh) -> sp.csr_matrix:
    L = trace.lengths
    e = trace.elements
    local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    vals = L[:, None, None] * local
    rows = np.repeat(e, 2, axis=1).ravel()
    cols = np.tile(e, (1, 2)).ravel()
    return sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(trace.num_nodes,) * 2).tocsr()


def boundary_stiffness_matrix(trace: TraceMesh) -> sp.csr_matrix:
    L = trace.lengths
    e = trace.elements
    local = np.array([[1.0, -1.0], [-1.0, 1.0]])
    vals = local / L[:, None, None]
    rows = np.repeat(e, 2, axis=1).ravel()
    cols = np.tile(e, (1, 2)).ravel()
    return sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(trace.num_nodes,) * 2).tocsr()


def l2_norm(v: TraceFunction) -> float:
    x = v.values
    M = boundary_mass_matrix(v.trace)
    return float(np.sqrt(max(x @ (M @ x), 0.0)))


class FractionalNormOperator:
    """Generalised eigenpairs of the boundary stiffness/mass pencil, computed once."""

    def __init__(self, trace: TraceMesh):
        self.trace = trace
        self.M = boundary_mass_matrix(trace).toarray()
        self.A = boundary_stiffness_matrix(trace).toarray()
        theta, phi = sla.eigh(self.A, self.M)
        # fix the sign of each eigenvector for reproducibility
        signs = np.sign(phi[np.argmax(np.abs(phi), axis=0), np.arange(phi.shape[1])])
        self.theta = np.maximum(theta, 0.0)
        self.phi = phi * signs

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        return self.phi.T @ (self.M @ values)

    def weights(self, s: float) -> np.ndarray:
        return (1.0 + self.theta) ** s

    @cached_property
    def gram_half(self) -> np.ndarray:
        """Gram matrix of the discrete H^{1/2} norm in nodal coordinates."""
        return self.gram(0.5)

    def gram(self, s: float) -> np.ndarray:
        Mphi = self.M @ self.phi
        return (Mphi * self.weights(s)) @ Mphi.T


def fractional_norm(op: FractionalNormOperator, v: Union[TraceFunction, np.ndarray], s: float) -> float:
    if abs(s) > 1:
        raise InvalidArgumentError(f"Sobolev order must lie in [-1, 1], got {s}")
    vals = v.values if isinstance(v, TraceFunction) else np.asarray(v, dtype=float)
    if isinstance(v, TraceFunction) and v.trace is not op.trace and not _same_trace(v.trace, op.trace):
        raise InvalidArgumentError("trace function lives on a different trace mesh")
    c = op.coefficients(vals)
    return float(np.sqrt(np.sum(op.weights(s) * c * c)))


def _same_trace(a: TraceMesh, b: TraceMesh) -> bool:
    return a.num_nodes == b.num_nodes and np.array_equal(a.x, b.x)


def l2_projection(trace: TraceMesh, v: Union[Callable, TraceFunction]) -> TraceFunction:
    """L^2(Gamma_C) projection onto continuous P1 functions on ``trace``.

    ``v`` is a callable of x, or a TraceFunction on a finer nested trace mesh;
    in the latter case the load is integrated over the fine elements so the
    4-point Gauss rule is exact.
    """
    if isinstance(v, TraceFunction):
        sub = v.trace
        a, b = sub.x[:-1], sub.x[1:]
        src = v
    else:
        a, b = trace.x[:-1], trace.x[1:]
        src = v
    xq = a[:, None] + (b - a)[:, None] * _G4_S[None, :]
    wq = (b - a)[:, None] * _G4_W[None, :]
    fq = np.asarray(src(xq), dtype=float) * np.ones_like(xq)
    # hat functions of the target mesh at the quadrature points
    k = np.clip(np.searchsorted(trace.x, xq, side="right") - 1, 0, trace.num_nodes - 2)
    t = (xq - trace.x[k]) / trace.lengths[k]
    load = np.zeros(trace.num_nodes)
    np.add.at(load, k, wq * fq * (1 - t))
    np.add.at(load, k + 1, wq * fq * t)
    M = boundary_mass_matrix(trace).toarray()
    return TraceFunction(trace, sla.solve(M, load, assume_a="pos"))


class ErrorNorms(NamedTuple):
    l2: float
    h1_semi: float
    energy: float

    @property
    def h1(self) -> float:
        return float(np.hypot(self.l2, self.h1_semi))


def transfer(coarse: Mesh, U: np.ndarray, fine: Mesh) -> np.ndarray:
    """Evaluate a coarse P1 field at the nodes of a nested fine mesh."""
    _check_nested(fine, coarse)
    t, bary = locate_points(coarse, fine.nodes)
    tri = coarse.triangles[t]
    ux = np.sum(bary * U[2 * tri], axis=1)
    uy = np.sum(bary * U[2 * tri + 1], axis=1)
    return np.column_stack([ux, uy]).ravel()


def _check_nested(fine: Mesh, coarse: Mesh) -> None:
    ratio, rem = divmod(fine.n, coarse.n)
    if rem or ratio & (ratio - 1):
        raise InvalidArgumentError(
            f"mesh with n={coarse.n} is not an ancestor of mesh with n={fine.n}")


def h1_error(fine: Mesh, u_ref: np.ndarray, coarse: Mesh, u_h: np.ndarray,
             material: Optional[Material] = None) -> ErrorNorms:
    """Errors of ``u_h`` (on ``coarse``) against ``u_ref`` (on the nested ``fine``).

    ``u_h`` restricted to a fine triangle is affine, so the edge-midpoint rule
    per fine triangle is exact.  ``energy`` is nan without a material.
    """
    e = u_ref - transfer(coarse, u_h, fine)
    tri = fine.triangles
    ex, ey = e[0::2][tri], e[1::2][tri]
    # midpoint rule: values at edge midpoints are means of the endpoints
    mid = lambda v: 0.5 * (v + np.roll(v, -1, axis=1))  # noqa: E731
    area = fine.areas
    l2 = np.sum(area / 3.0 * np.sum(mid(ex) ** 2 + mid(ey) ** 2, axis=1))
    dx, dy, _ = _gradients(fine)
    gxx, gxy = np.sum(dx * ex, axis=1), np.sum(dy * ex, axis=1)
    gyx, gyy = np.sum(dx * ey, axis=1), np.sum(dy * ey, axis=1)
    semi = np.sum(area * (gxx ** 2 + gxy ** 2 + gyx ** 2 + gyy ** 2))
    energy = np.nan
    if material is not None:
        B = strain_matrices(fine)
        el = np.empty((len(tri), 6))
        el[:, 0::2], el[:, 1::2] = ex, ey
        strain = np.einsum("tij,tj->ti", B, el)
        energy = np.sum(area * np.einsum("ti,ij,tj->t", strain, material.elasticity_matrix(), strain))
    return ErrorNorms(float(np.sqrt(l2)), float(np.sqrt(semi)), float(np.sqrt(max(energy, 0.0))) if material else np.nan)


def contact_residual_norms(trace: TraceMesh, sigma_ref: TraceFunction, u_n: TraceFunction,
                           eps: float, nu: float, op: Optional[FractionalNormOperator] = None):
    """``||r||_0`` and ``||r||_{-nu}`` for ``r = sigma_ref + (1/eps)[u_n]_+`` (nodewise)."""
    for f in (sigma_ref, u_n):
        if not _same_trace(f.trace, trace):
            raise InvalidArgumentError("residual inputs must share the trace mesh")
    r = TraceFunction(trace, sigma_ref.values + np.maximum(u_n.values, 0.0) / eps)
    op = op or FractionalNormOperator(trace)
    return l2_norm(r), fractional_norm(op, r, -nu)


class DualBoundReport(NamedTuple):
    lhs: float            # ||r||_{-nu}
    rhs: float            # h^nu ||r||_0 + h^(nu - 1/2) ||e||_1, without the unknown constant
    ratio: float
    half_norm: float      # ||r||_{-1/2}
    half_ratio: float     # ||r||_{-1/2} / ||e||_1


def dual_bound_check(trace: TraceMesh, r: TraceFunction, u_err_h1: float, h: float, nu: float,
                     op: Optional[FractionalNormOperator] = None) -> DualBoundReport:
    op = op or FractionalNormOperator(trace)
    lhs = fractional_norm(op, r, -nu)
    rhs = h ** nu * l2_norm(r) + h ** (nu - 0.5) * u_err_h1
    half = fractional_norm(op, r, -0.5)
    ratio = lhs / rhs if rhs > 0 else 0.0
    half_ratio = half / u_err_h1 if u_err_h1 > 0 else 0.0
    return DualBoundReport(lhs, rhs, ratio, half, half_ratio)
