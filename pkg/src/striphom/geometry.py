"""Structured P1 triangulations of the unit square.

The bottom edge y = 0 is tagged as the distinguished boundary segment; every
cell of the uniform n x n grid is split along the diagonal from its lower-left
to its upper-right corner, so meshes are bit-reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class Point2:
    x: float
    y: float


class TriMesh:
    """Immutable structured triangulation of [0,1]^2.

    Attributes
    ----------
    n : number of cells per side
    vertices : (nv, 2) array, vertex (i, j) at index j*(n+1)+i
    triangles : (2*n*n, 3) int array, counterclockwise vertex triples
    gamma_edges : (n, 2) int array, bottom-boundary edges ordered by x
    other_boundary_edges : remaining boundary edges
    h : maximal edge length, sqrt(2)/n
    """

    def __init__(self, n):
        if n < 1:
            raise ValueError(f"mesh resolution must be >= 1, got {n}")
        self.n = int(n)
        m = self.n + 1
        ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="xy")
        self.vertices = np.column_stack([ii.ravel() / n, jj.ravel() / n])

        ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
        ci = ci.ravel()
        cj = cj.ravel()
        v00 = cj * m + ci
        v10 = v00 + 1
        v01 = v00 + m
        v11 = v01 + 1
        tris = np.empty((2 * n * n, 3), dtype=np.int64)
        tris[0::2] = np.column_stack([v00, v10, v11])  # lower triangle
        tris[1::2] = np.column_stack([v00, v11, v01])  # upper triangle
        self.triangles = tris

        bottom = np.arange(n)
        self.gamma_edges = np.column_stack([bottom, bottom + 1])
        top = n * m + np.arange(n)
        left = m * np.arange(n)
        right = m * np.arange(n) + n
        self.other_boundary_edges = np.vstack(
            [
                np.column_stack([top, top + 1]),
                np.column_stack([left, left + m]),
                np.column_stack([right, right + m]),
            ]
        )
        self.h = math.sqrt(2.0) / n

        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self.gamma_edges.setflags(write=False)
        self.other_boundary_edges.setflags(write=False)

    @property
    def num_vertices(self):
        return (self.n + 1) ** 2

    @property
    def gamma_vertices(self):
        """Indices of the vertices on y = 0, ordered by x."""
        return np.arange(self.n + 1)

    def triangle_area(self, t):
        a, b, c = self.vertices[self.triangles[t]]
        return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))

    def __repr__(self):
        return f"TriMesh(n={self.n})"


def build_uniform_mesh(n):
    """Uniform mesh with (n+1)^2 vertices and 2*n^2 triangles."""
    return TriMesh(n)


def _cell_candidates(g, n):
    """Indices of the cells whose closure may contain grid coordinate g.

    Points exactly on a gridline belong to two cells; the lower-index cell is
    listed first so that edge points resolve to the lowest triangle index.
    """
    i = min(int(math.floor(g)), n - 1)
    i = max(i, 0)
    if g - i <= _EDGE_TOL and i >= 1:
        return (i - 1, i)
    return (i,)


def _tri_bary(mesh, t, x, y):
    a, b, c = mesh.vertices[mesh.triangles[t]]
    det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    l1 = ((x - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (y - a[1])) / det
    l2 = ((b[0] - a[0]) * (y - a[1]) - (x - a[0]) * (b[1] - a[1])) / det
    return np.array([1.0 - l1 - l2, l1, l2])


def locate_point(mesh, p):
    """Locate `p` on the structured grid in O(1) arithmetic.

    Returns (triangle index, barycentric coordinates). Points on shared edges
    are assigned to the containing triangle with the lowest index, matching a
    brute-force scan in triangle order.
    """
    if isinstance(p, Point2):
        x, y = p.x, p.y
    else:
        x, y = float(p[0]), float(p[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"point ({x}, {y}) lies outside the closed unit square")
    n = mesh.n
    for j in _cell_candidates(y * n, n):
        for i in _cell_candidates(x * n, n):
            cell = j * n + i
            for t in (2 * cell, 2 * cell + 1):
                lam = _tri_bary(mesh, t, x, y)
                if np.all(lam >= -_EDGE_TOL):
                    lam = np.maximum(lam, 0.0)
                    lam = lam / lam.sum()
                    return t, lam
    raise RuntimeError(f"point ({x}, {y}) not located; should be unreachable")
