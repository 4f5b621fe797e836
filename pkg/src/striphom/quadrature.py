"""Gauss-Legendre and triangle quadrature rules used throughout the package."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre_01(order):
    """Nodes and weights of the `order`-point Gauss-Legendre rule on [0, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def composite_gl(a, b, panels, order):
    """Composite Gauss-Legendre rule with `panels` equal panels on [a, b].

    Returns flattened nodes and weights in ascending panel order.
    """
    zq, wq = gauss_legendre_01(order)
    width = (b - a) / panels
    left = a + width * np.arange(panels)
    nodes = (left[:, None] + width * zq[None, :]).ravel()
    weights = np.broadcast_to(width * wq, (panels, order)).ravel()
    return nodes, weights


def integrate_1d(f, a, b, panels, order=8):
    x, w = composite_gl(a, b, panels, order)
    return float(np.dot(w, f(x)))


# Symmetric 6-point rule on the triangle, exact to polynomial degree 4.
# Barycentric coordinates of the quadrature points and weights that sum to 1.
_A1 = 0.445948490915965
_A2 = 0.091576213509771
_W1 = 0.223381589678011
_W2 = 0.109951743655322

TRI_BARY = np.array(
    [
        [_A1, _A1, 1.0 - 2.0 * _A1],
        [_A1, 1.0 - 2.0 * _A1, _A1],
        [1.0 - 2.0 * _A1, _A1, _A1],
        [_A2, _A2, 1.0 - 2.0 * _A2],
        [_A2, 1.0 - 2.0 * _A2, _A2],
        [1.0 - 2.0 * _A2, _A2, _A2],
    ]
)
TRI_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])
