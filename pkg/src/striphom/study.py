"""Convergence studies: eps sweeps, mesh refinement, lemma suites, CSV output.

The eps sweep solves the strip problem and the limit problem on the same mesh
per row, so the reported H1 difference isolates the eps-error from the
discretization error. All randomness is seeded and recorded; CSV files are
byte-reproducible across runs and thread counts.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import h1_error, h1_norm_vec, l2_error, mesh_forms
from .concentration import StripRegion
from .fields import FEField
from .geometry import build_uniform_mesh
from .oscillation import weak_star_residual
from .quadrature import TRI_BARY
from .solver import (
    SolveOptions,
    make_nonlinearity,
    mu_for,
    picard_solve,
    spatial_data,
)
from . import concentration as conc

DEFAULT_SEED = 1729

# Fixed smooth pair for the concentrated-to-trace gap diagnostics.
CONC_PAIR = (
    lambda x, y: np.exp(x) * (1.0 + y),
    lambda x, y: np.cos(np.pi * x) + 0.0 * y,
)

# Five smooth test functions on (0,1) for the weak* residual.
WS_TEST_FUNCS = (
    lambda x: np.ones_like(x),
    lambda x: x,
    lambda x: x**2,
    lambda x: np.cos(np.pi * x),
    lambda x: np.exp(x),
)

# Five smooth test functions on the square for the operator-gap proxy.
TEST_SET_2D = (
    lambda x, y: np.ones_like(x) + 0.0 * y,
    lambda x, y: x + 0.0 * y,
    lambda x, y: y + 0.0 * x,
    lambda x, y: np.cos(np.pi * x) + 0.0 * y,
    lambda x, y: np.cos(np.pi * y) + 0.0 * x,
)


class Table:
    """Immutable named-column table of float64 values."""

    def __init__(self, columns, rows):
        self.columns = tuple(columns)
        data = np.asarray(rows, dtype=float)
        if data.size == 0:
            data = data.reshape(0, len(self.columns))
        if data.ndim != 2 or data.shape[1] != len(self.columns):
            raise ValueError("row shape does not match column names")
        self.data = data
        self.data.setflags(write=False)

    def column(self, name):
        return self.data[:, self.columns.index(name)]

    def drop(self, *names):
        keep = [k for k, c in enumerate(self.columns) if c not in names]
        return Table([self.columns[k] for k in keep], self.data[:, keep])

    def __eq__(self, other):
        return (
            isinstance(other, Table)
            and self.columns == other.columns
            and self.data.shape == other.data.shape
            and bool(np.all(self.data == other.data))
        )

    def __len__(self):
        return self.data.shape[0]


SWEEP_COLUMNS = (
    "eps",
    "n",
    "h",
    "h1_error",
    "l2_error",
    "picard_iters",
    "coercivity_eps",
    "coercivity_limit",
    "concentration_gap",
    "weak_star_residual",
    "operator_gap_proxy",
    "wall_time",
)


def write_csv(table, path):
    """CSV with the table's column names and 17-significant-digit values."""
    lines = [",".join(table.columns)]
    for row in table.data:
        lines.append(",".join(f"{v:.16e}" for v in row))
    text = "\n".join(lines) + "\n"
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed writing CSV to {path}: {exc}") from exc


def parse_csv(path):
    try:
        with open(path, newline="") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise OSError(f"failed reading CSV from {path}: {exc}") from exc
    columns = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return Table(columns, rows)


@dataclass
class SweepConfig:
    """Eps sweep: mesh rule n(eps) = ceil(c_mesh/eps), same-mesh comparison."""

    eps_list: tuple
    spec: object  # eps-mode ProblemSpec template (its eps is replaced per row)
    c_mesh: float = 8.0
    opts: SolveOptions = field(default_factory=SolveOptions)
    ref_n: int = 64

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        if len(eps) == 0:
            raise ValueError("eps_list must be nonempty")
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        g1 = self.spec.profile.G1
        if any(e * g1 >= 1.0 for e in eps):
            raise ValueError("every eps must satisfy eps*G1 < 1")
        if self.c_mesh < 8.0:
            raise ValueError(f"c_mesh must be >= 8, got {self.c_mesh}")
        self.eps_list = eps


def _mesh_for(cfg, eps):
    return int(math.ceil(cfg.c_mesh / eps))


def _sweep_row(cfg, eps, mesh, u_lim, rep_lim):
    t0 = time.perf_counter()
    spec_eps = cfg.spec.with_eps(eps)
    u_eps, rep_eps = picard_solve(mesh, spec_eps, cfg.opts)

    h1e = h1_error(u_eps, u_lim)
    l2e = l2_error(u_eps, u_lim)
    region = StripRegion(eps, cfg.spec.profile)
    mu = mu_for(cfg.spec.profile)
    gap = conc.concentration_gap(region, mu, *CONC_PAIR)
    ws_res = max(weak_star_residual(cfg.spec.profile, eps, phi) for phi in WS_TEST_FUNCS)
    proxy = conc.operator_gap_proxy(region, cfg.spec.family, TEST_SET_2D, ref_n=cfg.ref_n)
    iters = rep_eps.iterations
    if not (rep_eps.converged and rep_lim.converged):
        iters = -max(1, iters)
    wall = time.perf_counter() - t0
    return [
        eps,
        float(mesh.n),
        mesh.h,
        h1e,
        l2e,
        float(iters),
        rep_eps.coercivity,
        rep_lim.coercivity,
        gap,
        ws_res,
        proxy,
        wall,
    ]


def run_eps_sweep(cfg, threads=1):
    """One row per eps; the limit problem is solved once per distinct mesh."""
    ns = {_mesh_for(cfg, eps) for eps in cfg.eps_list}
    meshes = {n: build_uniform_mesh(n) for n in sorted(ns)}
    limit_spec = cfg.spec.limit_twin()

    def solve_limit(n):
        return picard_solve(meshes[n], limit_spec, cfg.opts)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            limits = dict(zip(sorted(ns), pool.map(solve_limit, sorted(ns))))
            jobs = [
                pool.submit(_sweep_row, cfg, eps, meshes[_mesh_for(cfg, eps)],
                            *limits[_mesh_for(cfg, eps)])
                for eps in cfg.eps_list
            ]
            rows = [j.result() for j in jobs]
    else:
        limits = {n: solve_limit(n) for n in sorted(ns)}
        rows = [
            _sweep_row(cfg, eps, meshes[_mesh_for(cfg, eps)], *limits[_mesh_for(cfg, eps)])
            for eps in cfg.eps_list
        ]
    return Table(SWEEP_COLUMNS, rows)


# ---------------------------------------------------------------------------
# mesh refinement


def _p1_gradients(mesh, coeffs):
    """Per-triangle constant gradients of a nodal field."""
    c = coeffs[mesh.triangles]  # (nt, 3)
    h = 1.0 / mesh.n
    gx = np.empty(len(c))
    gy = np.empty(len(c))
    gx[0::2] = (c[0::2, 1] - c[0::2, 0]) / h
    gy[0::2] = (c[0::2, 2] - c[0::2, 1]) / h
    gx[1::2] = (c[1::2, 1] - c[1::2, 2]) / h
    gy[1::2] = (c[1::2, 2] - c[1::2, 0]) / h
    return gx, gy


def errors_vs_exact(u, exact, exact_grad):
    """H1/L2 errors of a field against an analytic solution (degree-4 rule)."""
    mesh = u.mesh
    verts = mesh.vertices[mesh.triangles]
    pts = np.einsum("qk,tkd->tqd", TRI_BARY, verts)
    xs, ys = pts[:, :, 0], pts[:, :, 1]
    area = 0.5 / mesh.n**2
    from .quadrature import TRI_WEIGHTS

    uq = u.coeffs[mesh.triangles] @ TRI_BARY.T
    diff = uq - np.asarray(exact(xs, ys), dtype=float)
    l2sq = float(np.einsum("tq,q->", diff**2, TRI_WEIGHTS) * area)

    gx, gy = _p1_gradients(mesh, u.coeffs)
    egx, egy = exact_grad(xs, ys)
    dgx = gx[:, None] - np.asarray(egx, dtype=float)
    dgy = gy[:, None] - np.asarray(egy, dtype=float)
    semisq = float(np.einsum("tq,q->", dgx**2 + dgy**2, TRI_WEIGHTS) * area)
    return math.sqrt(semisq + l2sq), math.sqrt(l2sq)


def restrict_to(coarse_mesh, fine_field):
    """Nodal restriction of a fine-mesh field onto a nested coarser mesh."""
    nf, nc = fine_field.mesh.n, coarse_mesh.n
    if nf % nc != 0:
        raise ValueError(f"meshes not nested: {nf} not a multiple of {nc}")
    r = nf // nc
    jj, ii = np.meshgrid(np.arange(nc + 1), np.arange(nc + 1), indexing="ij")
    idx = (jj * r) * (nf + 1) + ii * r
    return FEField(coarse_mesh, fine_field.coeffs[idx.ravel()])


def run_mesh_refinement(spec, n_list, exact=None, exact_grad=None, opts=None):
    """Limit-problem self-convergence; errors against the finest mesh by
    nodal restriction, or against an analytic solution when one is given."""
    opts = opts or SolveOptions()
    lim = spec if spec.mode == "limit" else spec.limit_twin()
    n_list = sorted(int(n) for n in n_list)
    sols = {}
    for n in n_list:
        mesh = build_uniform_mesh(n)
        u, rep = picard_solve(mesh, lim, opts)
        if not rep.converged:
            raise RuntimeError(f"limit solve failed to converge at n={n}")
        sols[n] = u

    rows = []
    errs = []
    if exact is not None:
        eval_ns = n_list
        for n in eval_ns:
            errs.append(errors_vs_exact(sols[n], exact, exact_grad))
    else:
        eval_ns = n_list[:-1]
        finest = sols[n_list[-1]]
        for n in eval_ns:
            ref = restrict_to(sols[n].mesh, finest)
            errs.append((h1_error(sols[n], ref), l2_error(sols[n], ref)))

    for k, n in enumerate(eval_ns):
        h1e, l2e = errs[k]
        if k == 0:
            o1 = o2 = 0.0
        else:
            prev_n, (p1, p2) = eval_ns[k - 1], errs[k - 1]
            scale = math.log(n / prev_n)
            o1 = math.log(p1 / h1e) / scale if h1e > 0 and p1 > 0 else 0.0
            o2 = math.log(p2 / l2e) / scale if l2e > 0 and p2 > 0 else 0.0
        rows.append([float(n), math.sqrt(2.0) / n, h1e, l2e, o1, o2])
    return Table(("n", "h", "h1_error", "l2_error", "h1_order", "l2_order"), rows)


def manufactured_limit_problem(lam=1.0):
    """Limit problem with exact solution cos(pi x)cos(pi y) + 2.

    The solution has zero normal derivative on the whole boundary, so the
    boundary data must satisfy V0*u = mu*f0 on the bottom edge; with V0 = 1
    and mu = 2 that fixes f0(x) = (cos(pi x) + 2)/2.
    """
    from .oscillation import periodic_profile
    from .solver import ProblemSpec

    profile = periodic_profile(2.0, 1.0, period=1.0)
    v0 = conc.v0_constant(1.0)
    family = conc.canonical_family(v0, profile)
    f1 = spatial_data(
        lambda x, y: (2.0 * np.pi**2 + lam) * np.cos(np.pi * x) * np.cos(np.pi * y) + 2.0 * lam
    )
    f0 = spatial_data(lambda x, y: 0.5 * (np.cos(np.pi * x) + 2.0))
    spec = ProblemSpec(lam=lam, f0=f0, f1=f1, R=4.0, profile=profile, family=family, mode="limit")
    exact = lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y) + 2.0
    exact_grad = lambda x, y: (
        -np.pi * np.sin(np.pi * x) * np.cos(np.pi * y),
        -np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
    )
    return spec, exact, exact_grad


# ---------------------------------------------------------------------------
# lemma suites


LEMMA_COLUMNS = (
    "eps",
    "weak_star_residual",
    "concentration_gap",
    "operator_gap_proxy",
    "uniform_q2",
    "uniform_q4",
    "f_gap",
)


def _random_fields(mesh, n_fields, seed, sup_bound=None, h1_normalized=False):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_fields):
        coeffs = rng.uniform(-1.0, 1.0, mesh.num_vertices)
        if sup_bound is not None:
            coeffs *= sup_bound / np.max(np.abs(coeffs))
        if h1_normalized:
            coeffs /= h1_norm_vec(mesh, coeffs)
        out.append(FEField(mesh, coeffs))
    return out


def _random_smooth_fields(mesh, n_fields, seed, sup_bound, max_mode=4):
    """Random low-frequency cosine combinations with ||u||_inf <= sup_bound.

    Their H1 norms are bounded independently of the mesh, the regime in which
    the reaction-load convergence is uniform in u.
    """
    rng = np.random.default_rng(seed)
    x = mesh.vertices[:, 0]
    y = mesh.vertices[:, 1]
    out = []
    for _ in range(n_fields):
        vals = np.zeros(mesh.num_vertices)
        for k in range(max_mode + 1):
            for l in range(max_mode + 1):
                vals += rng.normal() * np.cos(k * np.pi * x) * np.cos(l * np.pi * y)
        vals *= sup_bound / np.max(np.abs(vals))
        out.append(FEField(mesh, vals))
    return out


def run_lemma_suite(
    profile,
    family,
    eps_list,
    f0=None,
    mu_scale=1.0,
    ref_n=64,
    n_fields=10,
    seed=DEFAULT_SEED,
    R=2.0,
):
    """Per-eps residuals for the concentration and potential-operator limits.

    Columns: weak* residual (max over the 5 test functions), concentrated-to-
    trace gap for the fixed smooth pair, potential operator proxy, uniform
    bound ratios for q in {2, 4} over seeded H1-normalized fields, and the
    reaction-load gap (max Euclidean distance between the concentrated and
    boundary loads over seeded bounded fields).
    """
    if f0 is None:
        f0 = make_nonlinearity("saturating", (1.0,), R=R)
    mesh = build_uniform_mesh(ref_n)
    mesh_forms(mesh)  # warm the norm cache
    mu = mu_for(profile, mu_scale)
    norm_fields = _random_fields(mesh, n_fields, seed, h1_normalized=True)
    bounded_fields = _random_smooth_fields(mesh, n_fields, seed + 1, sup_bound=R)

    from .assembly import assemble_boundary_load, assemble_concentrated_load

    rows = []
    for eps in eps_list:
        region = StripRegion(eps, profile)
        ws_res = max(weak_star_residual(profile, eps, phi, mu=mu) for phi in WS_TEST_FUNCS)
        gap = conc.concentration_gap(region, mu, *CONC_PAIR)
        proxy = conc.operator_gap_proxy(region, family, TEST_SET_2D, ref_n=ref_n)
        uq2 = conc.verify_uniform_bound(region, 2, norm_fields)
        uq4 = conc.verify_uniform_bound(region, 4, norm_fields)
        f_gap = 0.0
        for u in bounded_fields:
            le = assemble_concentrated_load(mesh, region, f0, u)
            l0 = assemble_boundary_load(mesh, mu, f0, u)
            f_gap = max(f_gap, float(np.linalg.norm(le - l0)))
        rows.append([eps, ws_res, gap, proxy, uq2, uq4, f_gap])
    return Table(LEMMA_COLUMNS, rows)


def check_lemma_table(table, G1):
    """Assertions behind `verify`: returns a list of failure descriptions."""
    failures = []
    near_zero = 1e-8

    def col(name):
        return table.column(name)

    for name in ("concentration_gap", "operator_gap_proxy"):
        v = col(name)
        if v.max() < near_zero:
            continue
        if not np.all(np.diff(v) < 0.0):
            failures.append(f"{name} is not strictly decreasing")
        elif v[-1] > 0.1 * v[0]:
            failures.append(f"{name} final/initial = {v[-1] / v[0]:.3f} > 0.1")

    # the load gap is a fixed-mesh Euclidean proxy: its asymptotic range only
    # starts once the strip is inside the first cell row, so only the decrease
    # itself is asserted
    fg = col("f_gap")
    if fg.max() >= near_zero and not np.all(np.diff(fg) < 0.0):
        failures.append("f_gap is not strictly decreasing")

    ws = col("weak_star_residual")
    if ws.max() >= near_zero and ws[-1] > 0.1 * ws[0]:
        failures.append(f"weak_star_residual final/initial = {ws[-1] / ws[0]:.3f} > 0.1")

    for name in ("uniform_q2", "uniform_q4"):
        v = col(name)
        if v.max() > 4.0 * G1:
            failures.append(f"{name} max {v.max():.3e} exceeds 4*G1 = {4.0 * G1}")
        if v.min() <= 0.0 or v.max() / v.min() >= 2.0:
            failures.append(f"{name} varies by more than a factor 2 across eps")
    return failures
