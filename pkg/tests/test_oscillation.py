import math

import numpy as np
import pytest
from scipy.integrate import quad

from striphom.geometry import build_uniform_mesh
from striphom.oscillation import (
    OscillationProfile,
    cell_average_mu,
    constant_profile,
    eval_G_eps,
    modulated_profile,
    mu_from_profile,
    periodic_profile,
    weak_star_residual,
)


def test_eval_full_period_is_exact():
    prof = periodic_profile(2.0, 1.0, period=1.0)
    # x/eps = 1 is a full period of cos(2*pi*y)
    assert eval_G_eps(prof, 0.5, 0.5) == pytest.approx(3.0, abs=1e-14)


def test_eval_constant():
    prof = constant_profile(2.5)
    for eps, x in [(0.1, 0.3), (0.7, 0.9), (0.003, 0.5)]:
        assert eval_G_eps(prof, eps, x) == 2.5


def test_eval_matches_direct_formula():
    prof = periodic_profile(2.0, 1.0, period=2.0 * math.pi)
    # oracle: direct evaluation of G(x, x/eps) = 2 + cos(x/eps)
    assert eval_G_eps(prof, 0.01, 0.5) == pytest.approx(2.0 + math.cos(50.0), abs=1e-14)


def test_eval_rejects_bad_arguments():
    prof = constant_profile(1.0)
    with pytest.raises(ValueError):
        eval_G_eps(prof, 0.0, 0.5)
    with pytest.raises(ValueError):
        eval_G_eps(prof, -0.1, 0.5)
    with pytest.raises(ValueError):
        eval_G_eps(prof, 0.1, 0.0)


def test_mu_cosine_is_mean():
    prof = periodic_profile(2.0, 1.0, period=1.0)
    for x in np.linspace(0.05, 0.95, 11):
        assert cell_average_mu(prof, x) == pytest.approx(2.0, abs=1e-12)


def test_mu_constant_exact():
    prof = constant_profile(1.7)
    assert cell_average_mu(prof, 0.42) == pytest.approx(1.7, abs=1e-15)


def test_mu_modulated_matches_quadrature_oracle():
    prof = modulated_profile()
    for x in (0.25, 0.5, 0.8):
        oracle, err = quad(lambda y: 1.0 + x * math.sin(2.0 * math.pi * y) ** 2, 0.0, 1.0,
                           limit=200)
        assert err < 1e-9  # quad's self-estimate is conservative
        assert cell_average_mu(prof, x) == pytest.approx(oracle, abs=1e-10)
    # sin^2 has period-average 1/2, so mu(0.5) = 1.25
    assert cell_average_mu(prof, 0.5) == pytest.approx(1.25, abs=1e-12)


def test_mu_bounds_hold_on_random_points():
    rng = np.random.default_rng(3)
    for prof in (periodic_profile(2.0, 1.0), modulated_profile()):
        for x in rng.uniform(0.01, 0.99, 100):
            mu = cell_average_mu(prof, float(x))
            assert prof.G0 - 1e-12 <= mu <= prof.G1 + 1e-12


def test_mu_coefficient_gamma_samples():
    prof = modulated_profile()
    mu = mu_from_profile(prof)
    mesh = build_uniform_mesh(8)
    samples = mu.on_gamma(mesh)
    assert samples.shape == (9,)
    xs = mesh.vertices[:9, 0]
    assert np.allclose(samples, 1.0 + xs / 2.0, atol=1e-8)


def test_weak_star_constant_profile_vanishes():
    prof = constant_profile(2.0)
    r = weak_star_residual(prof, 0.05, lambda x: np.cos(3.0 * x))
    assert r < 1e-10


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_weak_star_matches_analytic_antiderivative(eps):
    # G_eps = 2 + cos(x/eps): integral of cos(x/eps) over (0,1) is eps*sin(1/eps)
    prof = periodic_profile(2.0, 1.0, period=2.0 * math.pi)
    r = weak_star_residual(prof, eps, lambda x: np.ones_like(x))
    assert r == pytest.approx(abs(eps * math.sin(1.0 / eps)), abs=1e-8)


def test_weak_star_dyadic_monotone_decrease():
    prof = periodic_profile(2.0, 1.0, period=2.0 * math.pi)
    residuals = [weak_star_residual(prof, 0.1 * 2.0**-k, lambda x: x) for k in range(5)]
    assert all(r2 < r1 for r1, r2 in zip(residuals, residuals[1:]))


def test_weak_star_catalog_profiles_converge():
    phis = [
        lambda x: np.ones_like(x),
        lambda x: x,
        lambda x: x**2,
        lambda x: np.cos(np.pi * x),
        lambda x: np.exp(x),
    ]
    for prof in (periodic_profile(2.0, 1.0, period=1.0), modulated_profile()):
        first = max(weak_star_residual(prof, 0.1, phi) for phi in phis)
        last = max(weak_star_residual(prof, 0.1 * 2.0**-4, phi) for phi in phis)
        assert last < 0.1 * first


def test_weak_star_rejects_nonpositive_eps():
    prof = constant_profile(1.0)
    with pytest.raises(ValueError):
        weak_star_residual(prof, 0.0, lambda x: x)


def test_profile_constructor_validates_bounds():
    with pytest.raises(ValueError):
        periodic_profile(1.0, 1.0)  # needs a > b
    with pytest.raises(ValueError):
        OscillationProfile(
            G=lambda x, y: 1.0 + 0.0 * np.asarray(x),
            l=lambda x: np.ones_like(np.asarray(x)),
            G0=2.0, G1=3.0, l0=1.0, l1=1.0,  # claims G >= 2 but G = 1
        )
    with pytest.raises(ValueError):
        OscillationProfile(  # not periodic with the declared period
            G=lambda x, y: 1.0 + 0.1 * np.asarray(y),
            l=lambda x: np.ones_like(np.asarray(x)),
            G0=0.5, G1=50.0, l0=1.0, l1=1.0,
        )


def test_custom_variable_period_profile():
    l = lambda x: 1.0 + 0.5 * np.asarray(x, dtype=float)
    prof = OscillationProfile(
        G=lambda x, y: 2.0 + np.cos(2.0 * np.pi * np.asarray(y) / l(x)),
        l=l,
        G0=1.0, G1=3.0, l0=1.0, l1=1.5,
    )
    # mean of a full period of cos is zero whatever the period
    assert cell_average_mu(prof, 0.6) == pytest.approx(2.0, abs=1e-12)
