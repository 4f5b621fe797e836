"""Concentrated strip integrals and their boundary-trace limits.

All strip integrals use the parameterization (x, z) -> (x, eps*G_eps(x)*z),
which maps the oscillating strip onto the unit square exactly:

    (1/eps) * integral_{omega_eps} F dxdy
        = integral_0^1 integral_0^1 F(x, eps*G_eps(x)*z) * G_eps(x) dz dx.

Smooth integrands get a tensor Gauss rule resolving the oscillation in x;
finite element integrands get a mesh-aware rule whose z-pieces align with the
P1 kinks (see _kernels).
"""

import math
import weakref
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fields import FEField
from .geometry import TriMesh
from .oscillation import OscillationProfile, mu_from_profile
from .quadrature import composite_gl, gauss_legendre_01

EPS_MIN = 1e-4


@dataclass(frozen=True)
class StripRegion:
    """The oscillating strip 0 < y < eps * G_eps(x) for a valid eps."""

    eps: float
    profile: OscillationProfile

    def __post_init__(self):
        if self.eps < EPS_MIN:
            raise ValueError(f"eps={self.eps} below the supported window ({EPS_MIN})")
        if self.eps * self.profile.G1 >= 1.0:
            raise ValueError(
                f"strip leaves the unit square: eps*G1 = {self.eps * self.profile.G1} >= 1"
            )

    def height(self, x):
        return self.eps * self.profile.G_eps(self.eps, x)


@dataclass(frozen=True)
class PotentialFamily:
    """Concentrated potential V_eps on the strip with boundary limit V0.

    V0 maps x -> value on Gamma; Veps maps (eps, x, y) -> value inside the
    strip. Both accept arrays.
    """

    V0: object
    Veps: object
    kind: str


def canonical_family(V0, profile):
    """V_eps(x, y) = V0(x) / mu(x), constant across the strip depth.

    The concentrated pairing converges to integral_Gamma V0*u*phi because the
    strip parameterization contributes one factor G_eps whose weak* limit is
    mu.
    """
    mu = mu_from_profile(profile)
    return PotentialFamily(
        V0=V0,
        Veps=lambda eps, x, y: np.asarray(V0(x), dtype=float) / mu(x),
        kind="canonical",
    )


def ramp_family(V0, profile):
    """V_eps(x, y) = (2y / (eps*G_eps(x))) * V0(x) / mu(x).

    Linear in the strip depth with unit average, so it has the same boundary
    limit as the canonical family while exercising y-variation.
    """
    mu = mu_from_profile(profile)

    def veps(eps, x, y):
        g = profile.G_eps(eps, x)
        return (2.0 * np.asarray(y, dtype=float) / (eps * g)) * np.asarray(V0(x), dtype=float) / mu(x)

    return PotentialFamily(V0=V0, Veps=veps, kind="ramp")


def v0_constant(c):
    c = float(c)
    return lambda x: np.full_like(np.asarray(x, dtype=float), c)


def v0_affine(a, b):
    return lambda x: a + b * np.asarray(x, dtype=float)


def v0_cosine(a, b):
    return lambda x: a + b * np.cos(np.pi * np.asarray(x, dtype=float))


def _eval_field(f, xs, ys):
    """Evaluate a scalar field given as FEField or array-capable callable."""
    if isinstance(f, FEField):
        return f.eval(xs, ys)
    out = np.asarray(f(xs, ys), dtype=float)
    if out.shape != np.shape(xs):
        out = np.vectorize(f)(xs, ys).astype(float)
    return out


def strip_contains(region, p):
    """True iff p lies strictly inside the open strip."""
    x, y = (p.x, p.y) if hasattr(p, "x") else (float(p[0]), float(p[1]))
    if not (0.0 < x < 1.0):
        return False
    return 0.0 < y < region.height(np.asarray(x)).item()


def strip_contains_many(region, xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    inside_x = (xs > 0.0) & (xs < 1.0)
    heights = np.where(inside_x, region.eps * region.profile.G_eps(region.eps, np.where(inside_x, xs, 0.5)), 0.0)
    return inside_x & (ys > 0.0) & (ys < heights)


def _smooth_rule(region, order_x=4, order_z=4):
    """Tensor rule for smooth integrands: x-panels no wider than eps*l0/8."""
    eps = region.eps
    panels = max(8, int(math.ceil(1.0 / (eps * region.profile.l0 / 8.0))))
    xq, wx = composite_gl(0.0, 1.0, panels, order_x)
    zq, wz = gauss_legendre_01(order_z)
    g = region.profile.G_eps(eps, xq)
    xs = np.repeat(xq, order_z)
    ys = (eps * g[:, None] * zq[None, :]).ravel()
    ws = ((wx * g)[:, None] * wz[None, :]).ravel()
    return xs, ys, ws


def concentrated_integral(region, h, phi):
    """(1/eps) * integral_{omega_eps} h*phi, exact in the strip geometry."""
    xs, ys, ws = _smooth_rule(region)
    return float(np.dot(ws, _eval_field(h, xs, ys) * _eval_field(phi, xs, ys)))


def trace_integral(mu, h, phi):
    """integral_0^1 mu(x) * h(x,0) * phi(x,0) dx (order 8, 64 panels)."""
    xq, wq = composite_gl(0.0, 1.0, 64, 8)
    zero = np.zeros_like(xq)
    return float(np.dot(wq, mu(xq) * _eval_field(h, xq, zero) * _eval_field(phi, xq, zero)))


def concentration_gap(region, mu, h, phi):
    """|concentrated integral - trace integral| for the pair (h, phi)."""
    return abs(concentrated_integral(region, h, phi) - trace_integral(mu, h, phi))


def potential_pairing_eps(region, family, u, phi):
    """(1/eps) * integral_{omega_eps} V_eps * u * phi."""
    xs, ys, ws = _smooth_rule(region)
    v = np.asarray(family.Veps(region.eps, xs, ys), dtype=float)
    return float(np.dot(ws, v * _eval_field(u, xs, ys) * _eval_field(phi, xs, ys)))


def potential_pairing_limit(V0, u, phi):
    """integral_Gamma V0 * u * phi dS."""
    xq, wq = composite_gl(0.0, 1.0, 64, 8)
    zero = np.zeros_like(xq)
    v = np.asarray(V0(xq), dtype=float)
    return float(np.dot(wq, v * _eval_field(u, xq, zero) * _eval_field(phi, xq, zero)))


def potential_l2_concentration(region, family):
    """(1/eps) * integral_{omega_eps} V_eps^2, the uniform-bound quantity."""
    xs, ys, ws = _smooth_rule(region)
    v = np.asarray(family.Veps(region.eps, xs, ys), dtype=float)
    return float(np.dot(ws, v * v))


def operator_gap_proxy(region, family, test_set, ref_n=64):
    """Max over pairs of |pairing_eps - pairing_limit| / (H1 norms).

    A finite test-set proxy for the potential-operator convergence; the norms
    are taken from nodal interpolants on an n=ref_n reference mesh.
    """
    from .assembly import h1_norm  # deferred: assembly builds on this module

    if len(test_set) == 0:
        raise ValueError("test_set must be nonempty")
    mesh = _reference_mesh(ref_n)
    norms = np.empty(len(test_set))
    for k, f in enumerate(test_set):
        fld = f if isinstance(f, FEField) else FEField.from_callable(mesh, f)
        norms[k] = h1_norm(fld)
        if norms[k] <= 0.0:
            raise ValueError("test functions must have positive H1 norm")

    xs, ys, ws = _smooth_rule(region)
    wv = ws * np.asarray(family.Veps(region.eps, xs, ys), dtype=float)
    xb, wb = composite_gl(0.0, 1.0, 64, 8)
    zero = np.zeros_like(xb)
    wv0 = wb * np.asarray(family.V0(xb), dtype=float)

    strip_vals = np.stack([_eval_field(f, xs, ys) for f in test_set])
    gamma_vals = np.stack([_eval_field(f, xb, zero) for f in test_set])
    pair_eps = (strip_vals * wv) @ strip_vals.T
    pair_lim = (gamma_vals * wv0) @ gamma_vals.T
    gaps = np.abs(pair_eps - pair_lim) / np.outer(norms, norms)
    return float(gaps.max())


def verify_uniform_bound(region, q, sample_fields):
    """Max over fields of ((1/eps) int_{omega_eps} |v|^q) / ||v||_{H1}^q."""
    from .assembly import h1_norm  # deferred: assembly builds on this module

    if q not in (2, 4):
        raise ValueError(f"q must be 2 or 4, got {q}")
    if len(sample_fields) == 0:
        raise ValueError("sample_fields must be nonempty")
    worst = 0.0
    for v in sample_fields:
        nrm = h1_norm(v)
        if nrm <= 0.0:
            raise ValueError("fields must have positive H1 norm")
        quad = strip_quadrature(v.mesh, region)
        vals = _kernels.p1_eval(v.mesh.n, v.coeffs, quad.xs, quad.ys)
        ratio = float(np.dot(quad.ws, np.abs(vals) ** q)) / nrm**q
        worst = max(worst, ratio)
    return worst


@dataclass(frozen=True)
class StripQuad:
    """Mesh-aware strip quadrature: nodes, weights and P1 scatter data."""

    xs: np.ndarray
    ys: np.ndarray
    ws: np.ndarray
    verts: np.ndarray
    bary: np.ndarray


_STRIP_CACHE = weakref.WeakKeyDictionary()
_REF_MESHES = {}


def _reference_mesh(n):
    mesh = _REF_MESHES.get(n)
    if mesh is None:
        mesh = TriMesh(n)
        _REF_MESHES[n] = mesh
    return mesh


def strip_quadrature(mesh, region, order_x=4, min_sub=2):
    """Strip rule aligned with the P1 kinks of `mesh` (cached per pair).

    Each mesh column is split into subpanels no wider than eps*l0/8 (at least
    `min_sub` per column, order-4 Gauss in x); the z-direction is integrated
    exactly piecewise between gridline and diagonal crossings.
    """
    per_mesh = _STRIP_CACHE.setdefault(mesh, {})
    key = (region.eps, id(region.profile), order_x, min_sub, _kernels.active_backend())
    quad = per_mesh.get(key)
    if quad is not None:
        return quad

    n = mesh.n
    eps = region.eps
    col_width = 1.0 / n
    sub = max(min_sub, int(math.ceil(col_width / (eps * region.profile.l0 / 8.0))))
    xq, wx = composite_gl(0.0, 1.0, n * sub, order_x)
    g = region.profile.G_eps(eps, xq)
    xs, ys, ws = _kernels.strip_nodes(n, eps, xq, wx, g)
    verts, bary = _kernels.p1_tri_bary(n, xs, ys)
    quad = StripQuad(xs=xs, ys=ys, ws=ws, verts=verts, bary=bary)
    per_mesh[key] = quad
    return quad
