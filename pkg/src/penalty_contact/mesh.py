"""Structured triangulations of the unit square with tagged boundary edges.

Nodes of the structured family sit on the grid ``(i/n, j/n)``; every cell is
split along its bottom-left to top-right diagonal.  Uniform refinement splits
each triangle into four through its edge midpoints, which reproduces the
structured mesh with ``2n`` cells per side, so point location can always be
done with cell arithmetic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping, Union

import numpy as np

from .errors import InvalidArgumentError, OutOfDomainError

SIDES = ("bottom", "right", "top", "left")
LOCATE_TOL = 1e-12


class BoundaryTag(enum.Enum):
    DIRICHLET = "D"
    NEUMANN = "N"
    CONTACT = "C"


# A side is tagged either uniformly or by a function of the edge midpoint.
SideTag = Union[BoundaryTag, Callable[[float, float], BoundaryTag]]


def _level_of(n: int) -> int:
    return n.bit_length() - 1 if n & (n - 1) == 0 else 0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray           # (N, 2)
    triangles: np.ndarray       # (T, 3), counterclockwise
    boundary_edges: np.ndarray  # (E, 2) node index pairs
    edge_tags: tuple            # (E,) BoundaryTag per boundary edge
    n: int                      # cells per side
    level: int

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_dofs(self) -> int:
        return 2 * len(self.nodes)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def h(self) -> float:
        p = self.nodes[self.triangles]
        lengths = [np.linalg.norm(p[:, a] - p[:, b], axis=1) for a, b in ((0, 1), (1, 2), (2, 0))]
        return float(np.max(lengths))

    def edges_with(self, tag: BoundaryTag) -> np.ndarray:
        mask = np.array([t is tag for t in self.edge_tags], dtype=bool)
        return self.boundary_edges[mask]

    def nodes_with(self, tag: BoundaryTag) -> np.ndarray:
        return np.unique(self.edges_with(tag))

    def dirichlet_nodes(self) -> np.ndarray:
        """Nodes carrying Dirichlet constraints.

        End points of the contact boundary are left free even where they
        touch a Dirichlet edge.
        """
        return np.setdiff1d(self.nodes_with(BoundaryTag.DIRICHLET),
                            self.nodes_with(BoundaryTag.CONTACT))

    @cached_property
    def _cell_table(self) -> np.ndarray:
        # (j, i, upper) -> triangle index, filled from triangle centroids
        table = np.full((self.n, self.n, 2), -1, dtype=np.int64)
        c = self.nodes[self.triangles].mean(axis=1) * self.n
        i = np.floor(c[:, 0]).astype(np.int64)
        j = np.floor(c[:, 1]).astype(np.int64)
        upper = (c[:, 1] - j > c[:, 0] - i).astype(np.int64)
        table[j, i, upper] = np.arange(len(self.triangles))
        return table


def generate_structured_square(n: int, tagging: Mapping[str, SideTag]) -> Mesh:
    """Build the ``n x n`` structured triangulation of the unit square.

    ``tagging`` maps each of ``bottom``, ``right``, ``top``, ``left`` to a
    :class:`BoundaryTag`, or to a callable ``(x, y) -> BoundaryTag`` applied
    to edge midpoints.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    missing = set(SIDES) - set(tagging)
    if missing:
        raise InvalidArgumentError(f"untagged sides: {sorted(missing)}")
    n = int(n)
    t = np.arange(n + 1) / n
    X, Y = np.meshgrid(t, t)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (n + 1) + i

    I, J = np.meshgrid(np.arange(n), np.arange(n))
    I, J = I.ravel(), J.ravel()
    v00, v10, v11, v01 = idx(I, J), idx(I + 1, J), idx(I + 1, J + 1), idx(I, J + 1)
    # lower and upper triangle of each cell, interleaved in cell order
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([v00, v10, v11])
    tris[1::2] = np.column_stack([v00, v11, v01])

    k = np.arange(n)
    side_edges = {
        "bottom": np.column_stack([idx(k, 0), idx(k + 1, 0)]),
        "right": np.column_stack([idx(n, k), idx(n, k + 1)]),
        "top": np.column_stack([idx(n - k, n), idx(n - k - 1, n)]),
        "left": np.column_stack([idx(0, n - k), idx(0, n - k - 1)]),
    }
    edges, tags = [], []
    for side in SIDES:
        rule = tagging[side]
        for a, b in side_edges[side]:
            if isinstance(rule, BoundaryTag):
                tag = rule
            else:
                mx, my = 0.5 * (nodes[a] + nodes[b])
                tag = rule(mx, my)
            edges.append((a, b))
            tags.append(tag)
    mesh = Mesh(_readonly(nodes), _readonly(tris), _readonly(np.array(edges, dtype=np.int64)),
                tuple(tags), n, _level_of(n))
    _check_tags(mesh)
    return mesh


def _check_tags(mesh: Mesh) -> None:
    for tag in mesh.edge_tags:
        if not isinstance(tag, BoundaryTag):
            raise InvalidArgumentError(f"invalid boundary tag {tag!r}")
    contact = mesh.edges_with(BoundaryTag.CONTACT)
    if len(contact) and np.any(mesh.nodes[contact][..., 1] != 0.0):
        raise InvalidArgumentError("contact edges must lie on y = 0")


def refine_uniform(m: Mesh) -> Mesh:
    """Split every triangle into four through its edge midpoints.

    Parent nodes keep their indices; the children of parent triangle ``t``
    are triangles ``4t .. 4t+3``.
    """
    tri = m.triangles
    local = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    key = np.sort(local, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(3, -1).T + m.num_nodes          # midpoint ids per triangle edge
    mids = 0.5 * (m.nodes[uniq[:, 0]] + m.nodes[uniq[:, 1]])
    nodes = np.vstack([m.nodes, mids])

    v0, v1, v2 = tri.T
    m01, m12, m20 = inv.T
    children = np.stack([
        np.column_stack([v0, m01, m20]),
        np.column_stack([m01, v1, m12]),
        np.column_stack([m20, m12, v2]),
        np.column_stack([m01, m12, m20]),
    ], axis=1).reshape(-1, 3)

    lookup = {tuple(e): k + m.num_nodes for k, e in enumerate(uniq)}
    edges, tags = [], []
    for (a, b), tag in zip(m.boundary_edges, m.edge_tags):
        mid = lookup[(min(a, b), max(a, b))]
        edges += [(a, mid), (mid, b)]
        tags += [tag, tag]
    return Mesh(_readonly(nodes), _readonly(children), _readonly(np.array(edges, dtype=np.int64)),
                tuple(tags), 2 * m.n, m.level + 1)


def locate_points(m: Mesh, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised point location: triangle indices and barycentric coordinates."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(p < -LOCATE_TOL) or np.any(p > 1.0 + LOCATE_TOL):
        raise OutOfDomainError("point outside the unit square")
    s = np.clip(p, 0.0, 1.0) * m.n
    i = np.minimum(np.floor(s[:, 0]).astype(np.int64), m.n - 1)
    j = np.minimum(np.floor(s[:, 1]).astype(np.int64), m.n - 1)
    upper = (s[:, 1] - j > s[:, 0] - i).astype(np.int64)
    t = m._cell_table[j, i, upper]
    v = m.nodes[m.triangles[t]]
    d1 = v[:, 1] - v[:, 0]
    d2 = v[:, 2] - v[:, 0]
    r = p - v[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
    l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
    bary = np.column_stack([1.0 - l1 - l2, l1, l2])
    return t, bary


def locate_point(m: Mesh, p) -> tuple[int, np.ndarray]:
    t, bary = locate_points(m, [p])
    return int(t[0]), bary[0]


@dataclass(frozen=True, eq=False)
class TraceMesh:
    """1D mesh of the contact boundary, nodes ordered by x."""

    x: np.ndarray         # (K,) node abscissae
    node_ids: np.ndarray  # (K,) indices into the parent mesh
    lengths: np.ndarray   # (K-1,) element lengths

    @property
    def num_nodes(self) -> int:
        return len(self.x)

    @property
    def h(self) -> float:
        return float(self.lengths.max())

    @property
    def elements(self) -> np.ndarray:
        k = np.arange(len(self.lengths))
        return np.column_stack([k, k + 1])


def contact_trace_mesh(m: Mesh) -> TraceMesh:
    ids = m.nodes_with(BoundaryTag.CONTACT)
    if len(ids) == 0:
        raise InvalidArgumentError("mesh has no contact edges")
    order = np.argsort(m.nodes[ids, 0], kind="stable")
    ids = ids[order]
    x = m.nodes[ids, 0].copy()
    return TraceMesh(_readonly(x), _readonly(ids), _readonly(np.diff(x)))


def write_mesh(m: Mesh, path) -> None:
    lines = [f"nodes {m.num_nodes} triangles {len(m.triangles)} edges {len(m.boundary_edges)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in m.nodes]
    lines += [f"{a} {b} {c}" for a, b, c in m.triangles]
    lines += [f"{a} {b} {t.value}" for (a, b), t in zip(m.boundary_edges, m.edge_tags)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    rows = Path(path).read_text().splitlines()
    head = rows[0].split()
    if head[0::2] != ["nodes", "triangles", "edges"]:
        raise InvalidArgumentError(f"bad mesh header: {rows[0]!r}")
    nn, nt, ne = (int(v) for v in head[1::2])
    body = rows[1:]
    nodes = np.array([[float(v) for v in r.split()] for r in body[:nn]], dtype=float).reshape(nn, 2)
    tris = np.array([[int(v) for v in r.split()] for r in body[nn:nn + nt]], dtype=np.int64).reshape(nt, 3)
    edges, tags = [], []
    for r in body[nn + nt:nn + nt + ne]:
        a, b, t = r.split()
        edges.append((int(a), int(b)))
        tags.append(BoundaryTag(t))
    n = math.isqrt(nt // 2)
    if 2 * n * n != nt:
        raise InvalidArgumentError("triangle count does not match a structured square mesh")
    mesh = Mesh(_readonly(nodes), _readonly(tris), _readonly(np.array(edges, dtype=np.int64).reshape(ne, 2)),
                tuple(tags), n, _level_of(n))
    _check_tags(mesh)
    return mesh
