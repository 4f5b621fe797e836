"""Nodal P1 fields on a structured mesh."""

import numpy as np

from . import _kernels


class FEField:
    """Nodal coefficients on a TriMesh; evaluable anywhere on the square."""

    def __init__(self, mesh, coeffs):
        coeffs = np.ascontiguousarray(coeffs, dtype=float)
        if coeffs.shape != (mesh.num_vertices,):
            raise ValueError(
                f"coefficient count {coeffs.shape} does not match "
                f"{mesh.num_vertices} vertices"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("field coefficients must be finite")
        self.mesh = mesh
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(mesh.num_vertices))

    @classmethod
    def from_callable(cls, mesh, fn):
        """Nodal interpolant of fn(x, y); fn must accept arrays."""
        v = mesh.vertices
        return cls(mesh, np.asarray(fn(v[:, 0], v[:, 1]), dtype=float))

    def eval(self, xs, ys):
        xs = np.ascontiguousarray(xs, dtype=float)
        ys = np.ascontiguousarray(ys, dtype=float)
        flat = _kernels.p1_eval(self.mesh.n, self.coeffs, xs.ravel(), ys.ravel())
        return flat.reshape(xs.shape)

    def as_callable(self):
        return lambda x, y: self.eval(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def __sub__(self, other):
        if other.mesh is not self.mesh:
            raise ValueError("fields live on different meshes")
        return FEField(self.mesh, self.coeffs - other.coeffs)
