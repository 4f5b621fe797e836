"""Strip-quadrature kernels with a compiled core and a NumPy fallback.

The compiled extension is preferred when it imported successfully; set
STRIPHOM_PURE_PYTHON=1 to force the fallback. `use_backend` switches the
active implementation at runtime (used by tests and benchmarks).
"""

import os

from . import fallback

try:
    from . import _strip_cy
except ImportError:
    _strip_cy = None

_BACKENDS = {"python": fallback}
if _strip_cy is not None:
    _BACKENDS["cython"] = _strip_cy

if os.environ.get("STRIPHOM_PURE_PYTHON"):
    _active_name = "python"
else:
    _active_name = "cython" if _strip_cy is not None else "python"


def available_backends():
    return tuple(sorted(_BACKENDS))


def active_backend():
    return _active_name


def use_backend(name):
    """Select the kernel implementation ('python', 'cython' or 'auto')."""
    global _active_name
    if name == "auto":
        name = "cython" if _strip_cy is not None else "python"
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; " f"available: {available_backends()}")
    _active_name = name


def strip_nodes(n, eps, xq, wxq, gq):
    return _BACKENDS[_active_name].strip_nodes(n, eps, xq, wxq, gq)


def p1_tri_bary(n, xs, ys):
    return _BACKENDS[_active_name].p1_tri_bary(n, xs, ys)


def p1_eval(n, coeffs, xs, ys):
    return _BACKENDS[_active_name].p1_eval(n, coeffs, xs, ys)
