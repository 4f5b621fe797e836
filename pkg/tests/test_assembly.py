import math

import numpy as np
import pytest

from striphom.assembly import (
    assemble_boundary_load,
    assemble_boundary_potential,
    assemble_concentrated_load,
    assemble_concentrated_potential,
    assemble_mass,
    assemble_stiffness,
    assemble_volume_load,
    h1_error,
    h1_norm,
    l2_norm,
    local_mass,
    local_stiffness,
)
from striphom.concentration import StripRegion, canonical_family, v0_constant
from striphom.fields import FEField
from striphom.geometry import build_uniform_mesh
from striphom.oscillation import constant_profile, periodic_profile

F_ONE = lambda x, y, u: np.ones_like(np.asarray(u, dtype=float))
F_ZERO = lambda x, y, u: np.zeros_like(np.asarray(u, dtype=float))


def sympy_local_matrices(coords):
    """Oracle: symbolic integration of P1 products over one triangle."""
    import sympy as sp

    x, y = sp.symbols("x y")
    (x0, y0), (x1, y1), (x2, y2) = coords
    T = sp.Matrix([[x1 - x0, x2 - x0], [y1 - y0, y2 - y0]])
    det = T.det()
    inv = T.inv()
    ref = inv @ sp.Matrix([x - x0, y - y0])
    lams = [1 - ref[0] - ref[1], ref[0], ref[1]]
    xi, eta = sp.symbols("xi eta")
    subs_ref = {}
    phys_x = x0 + (x1 - x0) * xi + (x2 - x0) * eta
    phys_y = y0 + (y1 - y0) * xi + (y2 - y0) * eta
    K = sp.zeros(3, 3)
    M = sp.zeros(3, 3)
    for i in range(3):
        for j in range(3):
            gi = sp.Matrix([sp.diff(lams[i], x), sp.diff(lams[i], y)])
            gj = sp.Matrix([sp.diff(lams[j], x), sp.diff(lams[j], y)])
            K[i, j] = sp.integrate(
                sp.integrate((gi.T @ gj)[0] * sp.Abs(det), (eta, 0, 1 - xi)), (xi, 0, 1)
            )
            pij = (lams[i] * lams[j]).subs({x: phys_x, y: phys_y})
            M[i, j] = sp.integrate(
                sp.integrate(sp.expand(pij) * sp.Abs(det), (eta, 0, 1 - xi)), (xi, 0, 1)
            )
    return np.array(K, dtype=float), np.array(M, dtype=float)


def test_local_stiffness_reference_triangle():
    coords = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    K = local_stiffness(coords)
    expected = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    assert np.allclose(K, expected, atol=1e-14)
    K_oracle, M_oracle = sympy_local_matrices(coords)
    assert np.allclose(K, K_oracle, atol=1e-12)
    assert np.allclose(local_mass(coords), M_oracle, atol=1e-12)


def test_local_mass_closed_form():
    coords = [[0.2, 0.1], [0.7, 0.3], [0.4, 0.9]]
    area = 0.5 * abs((0.7 - 0.2) * (0.9 - 0.1) - (0.4 - 0.2) * (0.3 - 0.1))
    expected = area / 12.0 * np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])
    assert np.allclose(local_mass(coords), expected, atol=1e-14)


def test_stiffness_kernel_is_constants():
    mesh = build_uniform_mesh(9)
    K = assemble_stiffness(mesh)
    ones = np.ones(mesh.num_vertices)
    assert np.abs(K @ ones).max() < 1e-12


def test_stiffness_energy_of_linear_field():
    mesh = build_uniform_mesh(6)
    K = assemble_stiffness(mesh)
    u = FEField.from_callable(mesh, lambda x, y: x)
    assert u.coeffs @ (K @ u.coeffs) == pytest.approx(1.0, abs=1e-12)


def test_mass_total_area():
    mesh = build_uniform_mesh(11)
    M = assemble_mass(mesh)
    ones = np.ones(mesh.num_vertices)
    assert ones @ (M @ ones) == pytest.approx(1.0, abs=1e-12)


def test_mass_quadratic_energy():
    mesh = build_uniform_mesh(64)
    M = assemble_mass(mesh)
    u = FEField.from_callable(mesh, lambda x, y: x)
    assert u.coeffs @ (M @ u.coeffs) == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_matrices_symmetric_and_psd():
    mesh = build_uniform_mesh(8)
    prof = periodic_profile(2.0, 1.0, period=1.0)
    region = StripRegion(0.1, prof)
    fam = canonical_family(v0_constant(1.0), prof)
    mats = [
        assemble_stiffness(mesh),
        assemble_mass(mesh),
        assemble_boundary_potential(mesh, v0_constant(1.0)),
        assemble_concentrated_potential(mesh, region, fam),
    ]
    rng = np.random.default_rng(5)
    for A in mats:
        assert abs(A - A.T).max() < 1e-12
        for _ in range(100):
            v = rng.normal(size=mesh.num_vertices)
            assert v @ (A @ v) >= -1e-12 * (v @ v)


def test_concentrated_potential_zero():
    mesh = build_uniform_mesh(8)
    prof = constant_profile(2.0)
    fam = canonical_family(v0_constant(0.0), prof)
    Q = assemble_concentrated_potential(mesh, StripRegion(0.1, prof), fam)
    assert Q.nnz == 0 or abs(Q).max() == 0.0


def test_concentrated_potential_strip_measure():
    # V_eps = 1: ones'Q ones = (1/eps)|omega_eps| = c by partition of unity
    mesh = build_uniform_mesh(16)
    c = 2.0
    prof = constant_profile(c)
    fam = canonical_family(v0_constant(c), prof)  # V_eps = c/c = 1... scaled below
    region = StripRegion(0.1, prof)
    unit_fam = canonical_family(v0_constant(c), prof)
    Q = assemble_concentrated_potential(mesh, region, unit_fam)
    ones = np.ones(mesh.num_vertices)
    # V_eps = V0/mu = c/c = 1, so the quadratic form on ones equals c
    assert ones @ (Q @ ones) == pytest.approx(c, abs=1e-8)


def test_concentrated_potential_trace_limit():
    # ones'Q ones = int (V0/mu) G_eps dx = 1 + (eps/2) sin(1/eps) for
    # G = 2 + cos(x/eps); the gap to int V0 = 1 decreases along the sequence
    mesh = build_uniform_mesh(32)
    prof = periodic_profile(2.0, 1.0, period=2.0 * math.pi)
    fam = canonical_family(v0_constant(1.0), prof)
    ones = np.ones(mesh.num_vertices)
    gaps = []
    for eps in (0.2, 0.05, 0.0125):
        Q = assemble_concentrated_potential(mesh, StripRegion(eps, prof), fam)
        gap = abs(ones @ (Q @ ones) - 1.0)
        assert gap == pytest.approx(abs(0.5 * eps * math.sin(1.0 / eps)), abs=1e-8)
        gaps.append(gap)
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))


def test_concentrated_potential_band_support():
    mesh = build_uniform_mesh(16)
    prof = constant_profile(1.0)
    eps = 0.1
    region = StripRegion(eps, prof)
    fam = canonical_family(v0_constant(1.0), prof)
    Q = assemble_concentrated_potential(mesh, region, fam).tocoo()
    # nonzero rows only for vertices of triangles meeting 0 <= y <= eps*G1
    band_rows = set(np.unique(Q.row))
    ymax = eps * prof.G1 + 1.0 / mesh.n  # one row of triangles above the band
    for r in band_rows:
        assert mesh.vertices[r, 1] <= ymax + 1e-12


def test_boundary_potential_examples():
    mesh = build_uniform_mesh(12)
    ones = np.ones(mesh.num_vertices)
    B1 = assemble_boundary_potential(mesh, v0_constant(1.0))
    assert ones @ (B1 @ ones) == pytest.approx(1.0, abs=1e-10)
    B0 = assemble_boundary_potential(mesh, v0_constant(0.0))
    assert abs(B0).max() == 0.0
    Bx = assemble_boundary_potential(mesh, lambda x: np.asarray(x, dtype=float))
    assert ones @ (Bx @ ones) == pytest.approx(0.5, abs=1e-10)


def test_volume_load_examples():
    mesh = build_uniform_mesh(10)
    u = FEField.zeros(mesh)
    assert np.all(assemble_volume_load(mesh, F_ZERO, u) == 0.0)
    load = assemble_volume_load(mesh, F_ONE, u)
    assert load.sum() == pytest.approx(1.0, abs=1e-12)
    # f1 = u with constant u reduces to the mass matrix action
    M = assemble_mass(mesh)
    c = 0.7
    uc = FEField(mesh, np.full(mesh.num_vertices, c))
    load_u = assemble_volume_load(mesh, lambda x, y, u: u, uc)
    assert np.allclose(load_u, c * (M @ np.ones(mesh.num_vertices)), atol=1e-10)


def test_concentrated_load_examples():
    mesh = build_uniform_mesh(16)
    c = 2.0
    prof = constant_profile(c)
    region = StripRegion(0.1, prof)
    u = FEField.zeros(mesh)
    assert np.all(assemble_concentrated_load(mesh, region, F_ZERO, u) == 0.0)
    load = assemble_concentrated_load(mesh, region, F_ONE, u)
    assert load.sum() == pytest.approx(c, abs=1e-8)


def test_concentrated_load_oscillatory_mean():
    # sum of entries = (1/eps)|omega_eps| -> mean of G = 2 as eps -> 0
    mesh = build_uniform_mesh(32)
    prof = periodic_profile(2.0, 1.0, period=2.0 * math.pi)
    u = FEField.zeros(mesh)
    sums = [
        assemble_concentrated_load(mesh, StripRegion(eps, prof), F_ONE, u).sum()
        for eps in (0.2, 0.05, 0.0125)
    ]
    gaps = [abs(s - 2.0) for s in sums]
    assert gaps[-1] < gaps[0]
    assert gaps[-1] < 0.02


def test_boundary_load_examples():
    mesh = build_uniform_mesh(12)
    u = FEField.zeros(mesh)
    mu2 = lambda x: np.full_like(np.asarray(x, dtype=float), 2.0)
    assert np.all(assemble_boundary_load(mesh, mu2, F_ZERO, u) == 0.0)
    load = assemble_boundary_load(mesh, mu2, F_ONE, u)
    assert load.sum() == pytest.approx(2.0, abs=1e-10)
    # zero entries off Gamma
    off_gamma = load[mesh.n + 1 :]
    assert np.all(off_gamma == 0.0)
    mu_affine = lambda x: 1.0 + np.asarray(x, dtype=float) / 2.0
    load2 = assemble_boundary_load(mesh, mu_affine, F_ONE, u)
    assert load2.sum() == pytest.approx(1.25, abs=1e-10)


def test_norms_and_errors():
    mesh = build_uniform_mesh(20)
    one = FEField(mesh, np.ones(mesh.num_vertices))
    assert h1_norm(one) == pytest.approx(1.0, abs=1e-12)
    assert l2_norm(one) == pytest.approx(1.0, abs=1e-12)
    ux = FEField.from_callable(mesh, lambda x, y: x)
    assert h1_norm(ux) == pytest.approx(math.sqrt(1.0 + 1.0 / 3.0), abs=1e-4)
    assert h1_error(ux, ux) == 0.0
    other = build_uniform_mesh(20)
    with pytest.raises(ValueError):
        h1_error(ux, FEField.zeros(other))


def test_field_validation():
    mesh = build_uniform_mesh(4)
    with pytest.raises(ValueError):
        FEField(mesh, np.ones(3))
    bad = np.ones(mesh.num_vertices)
    bad[0] = np.inf
    with pytest.raises(ValueError):
        FEField(mesh, bad)
