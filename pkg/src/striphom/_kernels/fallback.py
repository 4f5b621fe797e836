"""Pure NumPy implementation of the strip-quadrature kernels.

These routines are the hot path of every concentrated assembly: they generate
quadrature nodes for (1/eps) * integral over the oscillating strip, aligned
with the kink structure of P1 basis functions on the structured mesh, and
evaluate P1 data at arbitrary points. A compiled twin lives in _strip_cy.pyx;
both produce nodes in the same (x-node major, ascending z) order.
"""

import numpy as np

# 3-point Gauss-Legendre on [0,1]: exact to degree 5, enough for products of
# P1 basis functions and low-degree potential profiles on each smooth piece.
_SQ35 = np.sqrt(0.6)
GL3_NODES = np.array([0.5 * (1.0 - _SQ35), 0.5, 0.5 * (1.0 + _SQ35)])
GL3_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def strip_nodes(n, eps, xq, wxq, gq):
    """Quadrature nodes of the strip integral aligned with mesh kinks.

    For each x-node `xq[k]` with weight `wxq[k]` and oscillation value
    `gq[k]` = G_eps(xq[k]), the vertical segment z in [0,1] (y = eps*gq*z) is
    split at every crossing of a horizontal gridline y = j/n and of a cell
    diagonal y = x + m/n, and a 3-point Gauss rule is applied per piece.

    Returns flattened arrays (xs, ys, ws) such that
    (1/eps) * integral_{omega_eps} F = sum(ws * F(xs, ys)).
    """
    xq = np.asarray(xq, dtype=float)
    wxq = np.asarray(wxq, dtype=float)
    gq = np.asarray(gq, dtype=float)
    ymax = eps * gq
    if np.any(ymax >= 1.0):
        raise ValueError("strip leaves the unit square: eps*G >= 1")
    nk = xq.size

    max_h = int(np.floor(n * ymax.max()))
    max_d = max_h + 2

    # horizontal gridline crossings z = (j/n)/ymax, j = 1..floor(n*ymax)
    jj = np.arange(1, max_h + 1, dtype=float)
    if max_h > 0:
        zh = jj[None, :] / (n * ymax[:, None])
        zh = np.minimum(zh, 1.0)
    else:
        zh = np.empty((nk, 0))

    # diagonal crossings y = xq + m/n with 0 < y < ymax
    kmin = np.floor(-xq * n) + 1.0
    mm = kmin[:, None] + np.arange(max_d, dtype=float)[None, :]
    zd = (xq[:, None] + mm / n) / ymax[:, None]
    zd = np.clip(zd, 0.0, 1.0)

    zeros = np.zeros((nk, 1))
    ones = np.ones((nk, 1))
    breaks = np.sort(np.concatenate([zeros, zh, zd, ones], axis=1), axis=1)
    lo = breaks[:, :-1]
    width = breaks[:, 1:] - lo

    z = lo[:, :, None] + width[:, :, None] * GL3_NODES[None, None, :]
    wz = width[:, :, None] * GL3_WEIGHTS[None, None, :]

    npieces = breaks.shape[1] - 1
    xs = np.broadcast_to(xq[:, None, None], z.shape)
    ys = ymax[:, None, None] * z
    ws = (wxq * gq)[:, None, None] * wz
    shape = nk * npieces * 3
    return (
        np.ascontiguousarray(xs).reshape(shape),
        np.ascontiguousarray(ys).reshape(shape),
        np.ascontiguousarray(ws).reshape(shape),
    )


def p1_tri_bary(n, xs, ys):
    """Vertex indices and barycentric weights of each point's triangle.

    Fast floor-based cell lookup on the structured mesh; basis values are
    continuous across edges, so the edge tie-break is irrelevant here.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    gx = xs * n
    gy = ys * n
    i = np.minimum(gx.astype(np.int64), n - 1)
    np.maximum(i, 0, out=i)
    j = np.minimum(gy.astype(np.int64), n - 1)
    np.maximum(j, 0, out=j)
    xi = gx - i
    eta = gy - j
    m = n + 1
    v00 = j * m + i

    lower = eta <= xi
    verts = np.empty(xs.shape + (3,), dtype=np.int64)
    bary = np.empty(xs.shape + (3,), dtype=float)

    verts[..., 0] = v00
    verts[..., 1] = np.where(lower, v00 + 1, v00 + m + 1)
    verts[..., 2] = np.where(lower, v00 + m + 1, v00 + m)
    bary[..., 0] = np.where(lower, 1.0 - xi, 1.0 - eta)
    bary[..., 1] = np.where(lower, xi - eta, xi)
    bary[..., 2] = np.where(lower, eta, eta - xi)
    return verts, bary


def p1_eval(n, coeffs, xs, ys):
    """Evaluate the P1 field with nodal values `coeffs` at (xs, ys)."""
    verts, bary = p1_tri_bary(n, xs, ys)
    c = np.asarray(coeffs)
    return (
        c[verts[..., 0]] * bary[..., 0]
        + c[verts[..., 1]] * bary[..., 1]
        + c[verts[..., 2]] * bary[..., 2]
    )
