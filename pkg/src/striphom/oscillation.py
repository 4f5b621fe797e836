"""Oscillating strip profiles and their homogenized boundary coefficient.

A profile G(x, y) is periodic in y with period l(x) and bounded between G0
and G1; the strip upper boundary is y = eps * G(x, x/eps). The coefficient
mu(x) is the period average of G(x, .), the weight that survives in the limit
boundary condition.
"""

import math

import numpy as np

from .quadrature import composite_gl

MU_QUAD_TOL = 1e-12
_BOUND_SAMPLES = 100  # per axis, ~1e4 points for the constructor checks


def _as_float_array(x):
    return np.asarray(x, dtype=float)


class OscillationProfile:
    """Profile G(x, y) with period map l(x) and verified bounds.

    G and l must accept NumPy arrays. Bounds are supplied by the caller and
    checked on a dense sample grid, together with y-periodicity.
    """

    def __init__(self, G, l, G0, G1, l0, l1, kind="custom-sampled", check=True):
        if not (0.0 < G0 <= G1):
            raise ValueError(f"need 0 < G0 <= G1, got G0={G0}, G1={G1}")
        if not (0.0 < l0 <= l1):
            raise ValueError(f"need 0 < l0 <= l1, got l0={l0}, l1={l1}")
        self.G = G
        self.l = l
        self.G0 = float(G0)
        self.G1 = float(G1)
        self.l0 = float(l0)
        self.l1 = float(l1)
        self.kind = kind
        if check:
            self._check_bounds()

    def _check_bounds(self):
        xs = (np.arange(_BOUND_SAMPLES) + 0.5) / _BOUND_SAMPLES
        ls = _as_float_array(self.l(xs))
        if np.any(ls < self.l0 - 1e-12) or np.any(ls > self.l1 + 1e-12):
            raise ValueError("period l(x) leaves [l0, l1] on the sample grid")
        ts = np.linspace(0.0, 1.0, _BOUND_SAMPLES + 1)
        X = np.repeat(xs, ts.size)
        Y = (ls[:, None] * ts[None, :]).ravel()
        vals = _as_float_array(self.G(X, Y))
        if np.any(vals < self.G0 - 1e-12) or np.any(vals > self.G1 + 1e-12):
            raise ValueError("G(x, y) leaves [G0, G1] on the sample grid")
        shifted = _as_float_array(self.G(X, Y + np.repeat(ls, ts.size)))
        if np.max(np.abs(shifted - vals)) >= 1e-12 * max(1.0, self.G1):
            raise ValueError("G(x, .) is not l(x)-periodic on the sample grid")

    def G_eps(self, eps, x):
        """Vectorized G(x, x/eps)."""
        x = _as_float_array(x)
        return _as_float_array(self.G(x, x / eps))


def constant_profile(c):
    c = float(c)
    return OscillationProfile(
        G=lambda x, y: np.full_like(_as_float_array(x), c),
        l=lambda x: np.ones_like(_as_float_array(x)),
        G0=c, G1=c, l0=1.0, l1=1.0, kind="constant",
    )


def periodic_profile(a, b, period=1.0):
    """G(x, y) = a + b*cos(2*pi*y/period); requires a > b >= 0."""
    if not (a > b >= 0.0):
        raise ValueError(f"pure-periodic profile needs a > b >= 0, got a={a}, b={b}")
    om = 2.0 * math.pi / period
    return OscillationProfile(
        G=lambda x, y: a + b * np.cos(om * _as_float_array(y)),
        l=lambda x: np.full_like(_as_float_array(x), period),
        G0=a - b, G1=a + b, l0=period, l1=period, kind="pure-periodic",
    )


def modulated_profile():
    """G(x, y) = 1 + x*sin(2*pi*y)^2 with unit period; mu(x) = 1 + x/2."""
    return OscillationProfile(
        G=lambda x, y: 1.0 + _as_float_array(x) * np.sin(2.0 * np.pi * _as_float_array(y)) ** 2,
        l=lambda x: np.ones_like(_as_float_array(x)),
        G0=1.0, G1=2.0, l0=1.0, l1=1.0, kind="x-modulated",
    )


def eval_G_eps(profile, eps, x):
    """G(x, x/eps) at a single point; the oscillating strip height / eps."""
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not (0.0 < x < 1.0):
        raise ValueError(f"x must lie in (0, 1), got {x}")
    return float(profile.G(x, x / eps))


def cell_average_mu(profile, x):
    """Period average (1/l(x)) * integral_0^l(x) G(x, y) dy.

    Composite order-8 Gauss-Legendre with panel doubling until the estimated
    quadrature error drops below MU_QUAD_TOL.
    """
    if not (0.0 < x < 1.0):
        raise ValueError(f"x must lie in (0, 1), got {x}")
    lx = float(profile.l(np.asarray([x]))[0])
    prev = None
    panels = 1
    while panels <= 4096:
        ys, ws = composite_gl(0.0, lx, panels, 8)
        val = float(np.dot(ws, _as_float_array(profile.G(np.full_like(ys, x), ys)))) / lx
        if prev is not None and abs(val - prev) < MU_QUAD_TOL:
            return val
        prev = val
        panels *= 2
    return prev


class MuCoefficient:
    """Homogenized boundary coefficient: exact-evaluation callable plus nodal
    samples on the bottom-boundary vertices of any mesh. Scalar evaluations
    are cached; `scale` exists only for the verification negative control."""

    def __init__(self, fn, scale=1.0):
        self._fn = fn
        self.scale = float(scale)
        self._cache = {}

    def __call__(self, x):
        x = _as_float_array(x)
        if x.ndim == 0:
            return self._scalar(float(x))
        flat = x.ravel()
        out = np.fromiter((self._scalar(float(v)) for v in flat), dtype=float, count=flat.size)
        return out.reshape(x.shape)

    def _scalar(self, x):
        hit = self._cache.get(x)
        if hit is None:
            hit = self.scale * self._fn(x)
            self._cache[x] = hit
        return hit

    def on_gamma(self, mesh):
        """Nodal samples at the Gamma vertices.

        mu lives on the open interval; the endpoint samples take the
        continuous extension, evaluated just inside.
        """
        xs = mesh.vertices[mesh.gamma_vertices, 0].copy()
        xs[0] = 1e-9
        xs[-1] = 1.0 - 1e-9
        return self(xs)


def mu_from_profile(profile, scale=1.0):
    return MuCoefficient(lambda x: cell_average_mu(profile, x), scale=scale)


def weak_star_residual(profile, eps, phi, mu=None):
    """| integral_0^1 (G_eps - mu) * phi dx | with oscillation-resolving panels.

    The oscillatory factor is integrated with composite order-8 panels no
    wider than eps*l0/8; the smooth mu side uses a fixed 64-panel rule. An
    explicit mu overrides the profile's own coefficient (negative controls).
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    panels = max(8, int(math.ceil(1.0 / (eps * profile.l0 / 8.0))))
    xo, wo = composite_gl(0.0, 1.0, panels, 8)
    osc = float(np.dot(wo, profile.G_eps(eps, xo) * _as_float_array(phi(xo))))

    if mu is None:
        mu = mu_from_profile(profile)
    xs, ws = composite_gl(0.0, 1.0, 64, 8)
    smooth = float(np.dot(ws, mu(xs) * _as_float_array(phi(xs))))
    return abs(osc - smooth)
