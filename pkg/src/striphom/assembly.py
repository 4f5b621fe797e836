"""P1 assembly of the bilinear forms and load functionals.

Matrices: stiffness, mass, concentrated potential (strip), boundary potential
(Gamma). Loads: volume reaction, concentrated reaction, boundary reaction.
All matrices are symmetric CSR; loads are plain vectors indexed by vertex.
"""

import weakref

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .concentration import strip_quadrature
from .quadrature import TRI_BARY, TRI_WEIGHTS, composite_gl

_BOUNDARY_ORDER = 8
_COO_CHUNK = 1_500_000


def local_stiffness(coords):
    """Exact P1 stiffness of one triangle with rows as vertex coordinates."""
    a, b, c = np.asarray(coords, dtype=float)
    area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    grads = np.array(
        [
            [b[1] - c[1], c[0] - b[0]],
            [c[1] - a[1], a[0] - c[0]],
            [a[1] - b[1], b[0] - a[0]],
        ]
    ) / (2.0 * area)
    return area * grads @ grads.T


def local_mass(coords):
    """Exact P1 mass of one triangle: area/12 * [[2,1,1],[1,2,1],[1,1,2]]."""
    a, b, c = np.asarray(coords, dtype=float)
    area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    return (area / 12.0) * np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])


def _assemble_two_class(mesh, lower_local, upper_local):
    tris = mesh.triangles
    nt = tris.shape[0]
    vals = np.empty((nt, 9))
    vals[0::2] = lower_local.ravel()
    vals[1::2] = upper_local.ravel()
    rows = tris[:, [0, 0, 0, 1, 1, 1, 2, 2, 2]].astype(np.int32).ravel()
    cols = tris[:, [0, 1, 2, 0, 1, 2, 0, 1, 2]].astype(np.int32).ravel()
    nv = mesh.num_vertices
    return sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()


def assemble_stiffness(mesh):
    """Stiffness matrix: integral of grad(phi_i).grad(phi_j)."""
    h = 1.0 / mesh.n
    lower = local_stiffness([[0.0, 0.0], [h, 0.0], [h, h]])
    upper = local_stiffness([[0.0, 0.0], [h, h], [0.0, h]])
    return _assemble_two_class(mesh, lower, upper)


def assemble_mass(mesh):
    """Consistent mass matrix: integral of phi_i*phi_j."""
    h = 1.0 / mesh.n
    lower = local_mass([[0.0, 0.0], [h, 0.0], [h, h]])
    upper = local_mass([[0.0, 0.0], [h, h], [0.0, h]])
    return _assemble_two_class(mesh, lower, upper)


def _strip_matrix(mesh, quad, pointwise):
    """CSR matrix with entries (1/eps) int_{strip} pointwise * phi_i * phi_j."""
    nv = mesh.num_vertices
    out = sp.csr_matrix((nv, nv))
    vals = quad.ws * pointwise
    for start in range(0, vals.size, _COO_CHUNK):
        sl = slice(start, min(start + _COO_CHUNK, vals.size))
        v = vals[sl]
        bary = quad.bary[sl]
        verts = quad.verts[sl].astype(np.int32)
        block = (v[:, None, None] * bary[:, :, None] * bary[:, None, :]).ravel()
        rows = np.repeat(verts, 3, axis=1).ravel()
        cols = np.tile(verts, (1, 3)).ravel()
        out = out + sp.coo_matrix((block, (rows, cols)), shape=(nv, nv)).tocsr()
    return out


def assemble_concentrated_potential(mesh, region, family):
    """(1/eps) int_{omega_eps} V_eps * phi_i * phi_j via the strip rule."""
    quad = strip_quadrature(mesh, region)
    v = np.asarray(family.Veps(region.eps, quad.xs, quad.ys), dtype=float)
    return _strip_matrix(mesh, quad, v)


def assemble_boundary_potential(mesh, V0):
    """1D P1 mass on the bottom edge weighted by V0."""
    nodes, base_w, t = _gamma_rule(mesh)
    v = np.asarray(V0(nodes), dtype=float).reshape(t.shape)
    return _gamma_matrix(mesh, base_w * v, t)


def _gamma_rule(mesh):
    """Gauss nodes on each Gamma edge: x positions, weights, local coords."""
    n = mesh.n
    xq, wq = composite_gl(0.0, 1.0, n, _BOUNDARY_ORDER)
    t = (xq * n) - np.repeat(np.arange(n), _BOUNDARY_ORDER)
    return xq, wq.reshape(n, _BOUNDARY_ORDER), t.reshape(n, _BOUNDARY_ORDER)


def _gamma_matrix(mesh, weights, t):
    n = mesh.n
    basis = np.stack([1.0 - t, t], axis=-1)  # (n, q, 2)
    local = np.einsum("eq,eqi,eqj->eij", weights, basis, basis)
    edges = mesh.gamma_edges
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    nv = mesh.num_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()


def _gamma_load(mesh, values, t):
    n = mesh.n
    basis = np.stack([1.0 - t, t], axis=-1)
    contrib = values[:, :, None] * basis
    out = np.zeros(mesh.num_vertices)
    np.add.at(out, mesh.gamma_edges, contrib.sum(axis=1))
    return out


class _VolumeQuad:
    """Cached degree-4 quadrature data for all triangles of a mesh."""

    def __init__(self, mesh):
        verts = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
        self.points = np.einsum("qk,tkd->tqd", TRI_BARY, verts)
        area = 0.5 / mesh.n**2
        self.weights = area * TRI_WEIGHTS
        self.tris = mesh.triangles
        self.xs = self.points[:, :, 0]
        self.ys = self.points[:, :, 1]


_VOLUME_CACHE = weakref.WeakKeyDictionary()
_KM_CACHE = weakref.WeakKeyDictionary()


def _volume_quad(mesh):
    q = _VOLUME_CACHE.get(mesh)
    if q is None:
        q = _VolumeQuad(mesh)
        _VOLUME_CACHE[mesh] = q
    return q


def mesh_forms(mesh):
    """Stiffness and mass of a mesh, assembled once and cached."""
    km = _KM_CACHE.get(mesh)
    if km is None:
        km = (assemble_stiffness(mesh), assemble_mass(mesh))
        _KM_CACHE[mesh] = km
    return km


def assemble_volume_load(mesh, f1, u):
    """Entries integral_Omega f1(x, y, u) * phi_i (degree-4 triangle rule)."""
    q = _volume_quad(mesh)
    uq = u.coeffs[q.tris] @ TRI_BARY.T  # (nt, 6)
    fv = np.asarray(f1(q.xs, q.ys, uq), dtype=float)
    if fv.shape != uq.shape:
        fv = np.broadcast_to(fv, uq.shape)
    contrib = np.einsum("tq,q,qk->tk", fv, q.weights, TRI_BARY)
    out = np.zeros(mesh.num_vertices)
    np.add.at(out, q.tris, contrib)
    return out


def assemble_volume_weighted_mass(mesh, w, u):
    """Matrix with entries integral_Omega w(x, y, u) * phi_i * phi_j."""
    q = _volume_quad(mesh)
    uq = u.coeffs[q.tris] @ TRI_BARY.T
    wv = np.asarray(w(q.xs, q.ys, uq), dtype=float)
    if wv.shape != uq.shape:
        wv = np.broadcast_to(wv, uq.shape)
    local = np.einsum("tq,q,qi,qj->tij", wv, q.weights, TRI_BARY, TRI_BARY)
    rows = mesh.triangles[:, [0, 0, 0, 1, 1, 1, 2, 2, 2]].astype(np.int32).ravel()
    cols = mesh.triangles[:, [0, 1, 2, 0, 1, 2, 0, 1, 2]].astype(np.int32).ravel()
    nv = mesh.num_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()


def assemble_concentrated_load(mesh, region, f0, u):
    """Entries (1/eps) int_{omega_eps} f0(x, y, u) * phi_i."""
    quad = strip_quadrature(mesh, region)
    uq = _kernels.p1_eval(mesh.n, u.coeffs, quad.xs, quad.ys)
    fv = np.asarray(f0(quad.xs, quad.ys, uq), dtype=float) * quad.ws
    out = np.bincount(
        quad.verts.ravel(), weights=(fv[:, None] * quad.bary).ravel(), minlength=mesh.num_vertices
    )
    return out


def assemble_concentrated_weighted_mass(mesh, region, w, u):
    """Matrix with entries (1/eps) int_{omega_eps} w(x, y, u) * phi_i * phi_j."""
    quad = strip_quadrature(mesh, region)
    uq = _kernels.p1_eval(mesh.n, u.coeffs, quad.xs, quad.ys)
    wv = np.asarray(w(quad.xs, quad.ys, uq), dtype=float)
    return _strip_matrix(mesh, quad, wv)


def assemble_boundary_load(mesh, mu, f0, u):
    """Entries integral_Gamma mu * f0(x, 0, u) * phi_i; zero off Gamma."""
    nodes, base_w, t = _gamma_rule(mesh)
    edge_coeffs = u.coeffs[mesh.gamma_edges]  # (n, 2)
    uq = edge_coeffs[:, 0][:, None] * (1.0 - t) + edge_coeffs[:, 1][:, None] * t
    zero = np.zeros_like(nodes)
    fv = np.asarray(f0(nodes, zero, uq.ravel()), dtype=float).reshape(t.shape)
    muv = np.asarray(mu(nodes), dtype=float).reshape(t.shape)
    return _gamma_load(mesh, base_w * muv * fv, t)


def assemble_boundary_weighted_mass(mesh, weight, u):
    """Matrix integral_Gamma weight(x, u) * phi_i * phi_j on the bottom edge."""
    nodes, base_w, t = _gamma_rule(mesh)
    edge_coeffs = u.coeffs[mesh.gamma_edges]
    uq = edge_coeffs[:, 0][:, None] * (1.0 - t) + edge_coeffs[:, 1][:, None] * t
    wv = np.asarray(weight(nodes, uq.ravel()), dtype=float).reshape(t.shape)
    return _gamma_matrix(mesh, base_w * wv, t)


def h1_norm_vec(mesh, vec):
    K, M = mesh_forms(mesh)
    return float(np.sqrt(vec @ (K @ vec) + vec @ (M @ vec)))


def h1_norm(u):
    """sqrt(u'Ku + u'Mu) of a nodal field."""
    return h1_norm_vec(u.mesh, u.coeffs)


def l2_norm(u):
    _, M = mesh_forms(u.mesh)
    return float(np.sqrt(u.coeffs @ (M @ u.coeffs)))


def h1_error(u, w):
    """H1 norm of the difference; both fields must share one mesh."""
    if u.mesh is not w.mesh:
        raise ValueError("h1_error requires fields on the same mesh")
    return h1_norm_vec(u.mesh, u.coeffs - w.coeffs)


def l2_error(u, w):
    if u.mesh is not w.mesh:
        raise ValueError("l2_error requires fields on the same mesh")
    _, M = mesh_forms(u.mesh)
    d = u.coeffs - w.coeffs
    return float(np.sqrt(d @ (M @ d)))
