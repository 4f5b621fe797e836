"""Discrete systems and fixed-point solvers for the strip and limit problems.

The strip problem couples -Laplace(u) + lambda*u with a potential and a
reaction concentrated in the oscillating strip; the limit problem carries the
potential V0 and the mu-weighted reaction on the bottom boundary. Both are
solved as fixed points of u -> A^{-1} F(u) (Picard), optionally accelerated
by Newton on the residual A u - F(u).
"""

import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    assemble_boundary_load,
    assemble_boundary_potential,
    assemble_boundary_weighted_mass,
    assemble_concentrated_load,
    assemble_concentrated_potential,
    assemble_concentrated_weighted_mass,
    assemble_volume_load,
    assemble_volume_weighted_mass,
    h1_norm_vec,
    mesh_forms,
)
from .concentration import StripRegion
from .fields import FEField
from .oscillation import mu_from_profile


class IndefiniteSystemError(Exception):
    """Raised when a solve is refused because estimate_coercivity <= 0."""


# ---------------------------------------------------------------------------
# nonlinearities


def smooth_clamp(u, R):
    """C1 clamp: identity on |u| <= R, constant |u| >= R+1, Hermite between.

    Returns (clamped values, derivative of the clamp).
    """
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    s = np.sign(u)
    t = np.clip(a - R, 0.0, 1.0)
    val = np.where(a <= R, u, s * (R + t - 0.5 * t * t))
    dval = np.where(a <= R, 1.0, 1.0 - t)
    return val, dval


class Nonlinearity:
    """Reaction term f(x, y, u) with u-derivative and optional C1 cutoff.

    `value` and `deriv` are array-capable callables of (x, y, u); when a
    cutoff radius is given, the map becomes f(x, y, clamp(u)) which leaves
    every solution with |u| <= R untouched.
    """

    def __init__(self, value, deriv, cutoff=None, depends_on_u=True, label="custom"):
        self._value = value
        self._deriv = deriv
        self.cutoff = cutoff
        self.depends_on_u = depends_on_u
        self.label = label

    def __call__(self, x, y, u):
        if self.cutoff is None:
            return np.asarray(self._value(x, y, u), dtype=float)
        s, _ = smooth_clamp(u, self.cutoff)
        return np.asarray(self._value(x, y, s), dtype=float)

    def du(self, x, y, u):
        if self.cutoff is None:
            return np.asarray(self._deriv(x, y, u), dtype=float)
        s, ds = smooth_clamp(u, self.cutoff)
        return np.asarray(self._deriv(x, y, s), dtype=float) * ds


def make_nonlinearity(kind, params=(), R=2.0):
    """Catalog: zero | linear a*u+b | logistic u-u^3 | saturating a*u/(1+u^2)."""
    params = tuple(float(p) for p in params)
    if kind == "zero":
        return Nonlinearity(
            lambda x, y, u: np.zeros_like(np.asarray(u, dtype=float)),
            lambda x, y, u: np.zeros_like(np.asarray(u, dtype=float)),
            cutoff=None, depends_on_u=False, label="zero",
        )
    if kind == "linear":
        a, b = params
        return Nonlinearity(
            lambda x, y, u: a * np.asarray(u, dtype=float) + b,
            lambda x, y, u: np.full_like(np.asarray(u, dtype=float), a),
            cutoff=R if a != 0.0 else None,
            depends_on_u=(a != 0.0), label="linear",
        )
    if kind == "logistic":
        return Nonlinearity(
            lambda x, y, u: np.asarray(u, dtype=float) - np.asarray(u, dtype=float) ** 3,
            lambda x, y, u: 1.0 - 3.0 * np.asarray(u, dtype=float) ** 2,
            cutoff=R, label="logistic",
        )
    if kind == "saturating":
        (a,) = params
        return Nonlinearity(
            lambda x, y, u: a * np.asarray(u, dtype=float) / (1.0 + np.asarray(u, dtype=float) ** 2),
            lambda x, y, u: a * (1.0 - np.asarray(u, dtype=float) ** 2)
            / (1.0 + np.asarray(u, dtype=float) ** 2) ** 2,
            cutoff=R, label="saturating",
        )
    raise ValueError(f"unknown nonlinearity kind {kind!r}")


def spatial_data(g):
    """u-independent source term from a spatial callable g(x, y)."""
    return Nonlinearity(
        lambda x, y, u: np.broadcast_to(np.asarray(g(x, y), dtype=float), np.shape(u)).copy(),
        lambda x, y, u: np.zeros_like(np.asarray(u, dtype=float)),
        cutoff=None, depends_on_u=False, label="data",
    )


# ---------------------------------------------------------------------------
# problem description


@dataclass(frozen=True)
class ProblemSpec:
    """One solve: mode 'eps' (strip problem) or 'limit' (boundary problem)."""

    lam: float
    f0: Nonlinearity
    f1: Nonlinearity
    R: float
    profile: object
    family: object
    mode: str = "limit"
    eps: float | None = None
    mu_scale: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError("lambda must be finite")
        if self.R <= 0.0:
            raise ValueError(f"cutoff radius R must be positive, got {self.R}")
        if self.mode not in ("eps", "limit"):
            raise ValueError(f"mode must be 'eps' or 'limit', got {self.mode!r}")
        if self.mode == "eps":
            if self.eps is None:
                raise ValueError("eps-mode problem needs eps")
            StripRegion(self.eps, self.profile)  # validates the window

    def with_eps(self, eps):
        return ProblemSpec(self.lam, self.f0, self.f1, self.R, self.profile,
                           self.family, mode="eps", eps=eps, mu_scale=self.mu_scale)

    def limit_twin(self):
        return ProblemSpec(self.lam, self.f0, self.f1, self.R, self.profile,
                           self.family, mode="limit", eps=None, mu_scale=self.mu_scale)


_MU_CACHE = weakref.WeakKeyDictionary()


def mu_for(profile, scale=1.0):
    """Shared MuCoefficient per profile (scale 1 cached; others fresh)."""
    if scale != 1.0:
        return mu_from_profile(profile, scale=scale)
    mu = _MU_CACHE.get(profile)
    if mu is None:
        mu = mu_from_profile(profile)
        _MU_CACHE[profile] = mu
    return mu


@dataclass
class SolveOptions:
    method: str = "picard"
    tol_rel: float = 1e-10
    max_iter: int = 200
    damping: float = 1.0
    cg_tol: float = 1e-12
    cg_maxiter_factor: int = 10
    gate_tol: float = 1e-2
    gate_max_outer: int = 30

    def __post_init__(self):
        if self.tol_rel <= 0.0:
            raise ValueError("tol_rel must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class SolveReport:
    method: str
    converged: bool
    iterations: int
    residual_history: list = field(default_factory=list)
    defect: float = math.nan
    coercivity: float = math.nan
    damping_final: float = 1.0
    message: str = ""

    def to_text(self):
        lines = [
            f"method {self.method}",
            f"converged {int(self.converged)}",
            f"iterations {self.iterations}",
            f"defect {self.defect:.16e}",
            f"coercivity {self.coercivity:.16e}",
            f"damping_final {self.damping_final:.16e}",
        ]
        if self.message:
            lines.append(f"message {self.message}")
        lines.append("increments " + " ".join(f"{r:.16e}" for r in self.residual_history))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# linear algebra


@dataclass
class PcgInfo:
    converged: bool
    iterations: int
    relres: float
    bad_direction: np.ndarray | None = None


def pcg(A, b, x0=None, rtol=1e-12, maxiter=None, diag=None):
    """Jacobi-preconditioned conjugate gradients for symmetric A.

    Stops on ||r|| <= rtol*||b||; reports the offending direction when
    nonpositive curvature is met (A not positive definite).
    """
    n = b.shape[0]
    if maxiter is None:
        maxiter = 10 * n
    if diag is None:
        diag = A.diagonal()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), PcgInfo(True, 0, 0.0)
    x = np.zeros(n) if x0 is None else x0.copy()
    r = b - A @ x
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    it = 0
    while it < maxiter:
        rnorm = float(np.linalg.norm(r))
        if rnorm <= rtol * bnorm:
            break
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            return x, PcgInfo(False, it, rnorm / bnorm, bad_direction=p.copy())
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    # the recursive residual drives the stopping rule; the true residual can
    # sit above rtol by the attainable-accuracy factor kappa*eps_machine
    true_res = float(np.linalg.norm(b - A @ x)) / bnorm
    return x, PcgInfo(true_res <= 1e4 * rtol, it, true_res)


# ---------------------------------------------------------------------------
# system assembly


def _system_parts(mesh, spec):
    K, M = mesh_forms(mesh)
    if spec.mode == "eps":
        region = StripRegion(spec.eps, spec.profile)
        C = assemble_concentrated_potential(mesh, region, spec.family)
    else:
        C = assemble_boundary_potential(mesh, spec.family.V0)
    A = (K + spec.lam * M + C).tocsr()
    return A, K, M


def build_system(mesh, spec):
    """System matrix: K + lambda*M plus the strip or boundary potential."""
    return _system_parts(mesh, spec)[0]


class _LoadOperator:
    """F(u) for one problem; u-independent parts are assembled once."""

    def __init__(self, mesh, spec):
        self.mesh = mesh
        self.spec = spec
        self._region = StripRegion(spec.eps, spec.profile) if spec.mode == "eps" else None
        self._mu = None if spec.mode == "eps" else mu_for(spec.profile, spec.mu_scale)
        self._static_f0 = None
        self._static_f1 = None

    def _f0_load(self, u):
        if self.spec.mode == "eps":
            return assemble_concentrated_load(self.mesh, self._region, self.spec.f0, u)
        return assemble_boundary_load(self.mesh, self._mu, self.spec.f0, u)

    def __call__(self, u):
        spec = self.spec
        if spec.f0.depends_on_u:
            f0_part = self._f0_load(u)
        else:
            if self._static_f0 is None:
                self._static_f0 = self._f0_load(u)
            f0_part = self._static_f0
        if spec.f1.depends_on_u:
            f1_part = assemble_volume_load(self.mesh, spec.f1, u)
        else:
            if self._static_f1 is None:
                self._static_f1 = assemble_volume_load(self.mesh, spec.f1, u)
            f1_part = self._static_f1
        return f0_part + f1_part

    def jacobian_term(self, u):
        """Assembled derivative of F at u (zero matrix when u-independent)."""
        import scipy.sparse as sp

        nv = self.mesh.num_vertices
        J = sp.csr_matrix((nv, nv))
        spec = self.spec
        if spec.f0.depends_on_u:
            if spec.mode == "eps":
                J = J + assemble_concentrated_weighted_mass(self.mesh, self._region, spec.f0.du, u)
            else:
                mu = self._mu
                J = J + assemble_boundary_weighted_mass(
                    self.mesh,
                    lambda x, uu: np.asarray(mu(x), dtype=float)
                    * spec.f0.du(x, np.zeros_like(np.asarray(x, dtype=float)), uu),
                    u,
                )
        if spec.f1.depends_on_u:
            J = J + assemble_volume_weighted_mass(self.mesh, spec.f1.du, u)
        return J


# ---------------------------------------------------------------------------
# coercivity


def estimate_coercivity(A, K, M, tol=1e-8, max_outer=500):
    """Smallest generalized eigenvalue of A x = theta (K+M) x.

    Inverse power iteration with CG inner solves; a nonpositive value
    certifies loss of discrete coercivity (reported, not raised).
    """
    B = (K + M).tocsr()
    n = A.shape[0]
    diag = A.diagonal()
    inner_rtol = min(1e-3, max(1e-12, tol * 1e-2))
    resid_tol = math.sqrt(tol)
    x = np.ones(n) + 1e-3 * np.cos(np.arange(n, dtype=float))
    x /= math.sqrt(float(x @ (B @ x)))
    theta = float(x @ (A @ x))
    y_prev = None
    for _ in range(max_outer):
        y, info = pcg(A, B @ x, x0=y_prev, rtol=inner_rtol, diag=diag)
        if info.bad_direction is not None:
            p = info.bad_direction
            return float(p @ (A @ p)) / float(p @ (B @ p))
        ynorm = math.sqrt(float(y @ (B @ y)))
        if ynorm == 0.0:
            return theta
        y /= ynorm
        Ay = A @ y
        By = B @ y
        theta_new = float(y @ Ay)
        # value stagnation alone can be a plateau of the power iteration;
        # require the eigenresidual to be small as well
        resid = float(np.linalg.norm(Ay - theta_new * By))
        resid_ok = resid <= resid_tol * max(np.linalg.norm(Ay), 1e-300)
        done = resid_ok and abs(theta_new - theta) <= tol * max(1.0, abs(theta_new))
        x = y
        y_prev = y * ynorm
        theta = theta_new
        if done:
            break
    return theta


@dataclass(frozen=True)
class LambdaStarResult:
    status: str  # found | coercive-at-min | indefinite-at-max
    value: float | None
    theta_min: float
    theta_max: float


def find_lambda_star(mesh, spec, lambda_range, tol_lambda=1e-3, eig_tol=1e-6):
    """Bisection on lambda for the sign of estimate_coercivity."""
    lo, hi = float(lambda_range[0]), float(lambda_range[1])
    if not lo < hi:
        raise ValueError(f"invalid lambda range ({lo}, {hi})")
    K, M = mesh_forms(mesh)
    if spec.mode == "eps":
        region = StripRegion(spec.eps, spec.profile)
        C = assemble_concentrated_potential(mesh, region, spec.family)
    else:
        C = assemble_boundary_potential(mesh, spec.family.V0)

    def theta_at(lam):
        A = (K + lam * M + C).tocsr()
        return estimate_coercivity(A, K, M, tol=eig_tol, max_outer=200)

    theta_lo = theta_at(lo)
    if theta_lo > 0.0:
        return LambdaStarResult("coercive-at-min", None, theta_lo, theta_lo)
    theta_hi = theta_at(hi)
    if theta_hi <= 0.0:
        return LambdaStarResult("indefinite-at-max", None, theta_lo, theta_hi)
    while hi - lo > tol_lambda:
        mid = 0.5 * (lo + hi)
        if theta_at(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return LambdaStarResult("found", 0.5 * (lo + hi), theta_lo, theta_hi)


# ---------------------------------------------------------------------------
# nonlinear solvers


def _gate_coercivity(A, K, M, opts):
    theta = estimate_coercivity(A, K, M, tol=opts.gate_tol, max_outer=opts.gate_max_outer)
    if theta <= 0.0:
        raise IndefiniteSystemError(
            f"estimate_coercivity returned {theta:.3e} <= 0; the system is not "
            "coercive at this lambda (lambda <= lambda*), refusing to iterate"
        )
    return theta


def picard_solve(mesh, spec, opts=None, initial=None):
    """Damped fixed-point iteration u <- (1-d) u + d A^{-1} F(u)."""
    opts = opts or SolveOptions()
    A, K, M = _system_parts(mesh, spec)
    theta = _gate_coercivity(A, K, M, opts)
    F = _LoadOperator(mesh, spec)
    diag = A.diagonal()
    maxiter_cg = opts.cg_maxiter_factor * mesh.num_vertices

    u = np.zeros(mesh.num_vertices) if initial is None else np.asarray(initial.coeffs, dtype=float).copy()
    f_zero_norm = float(np.linalg.norm(F(FEField.zeros(mesh))))
    d = opts.damping
    report = SolveReport(method="picard", converged=False, iterations=0, coercivity=theta)
    defect_prev = math.inf
    rising = 0
    w_prev = None
    for k in range(1, opts.max_iter + 1):
        Fu = F(FEField(mesh, u))
        defect = float(np.linalg.norm(A @ u - Fu)) / (1.0 + f_zero_norm)
        if defect > defect_prev:
            rising += 1
            if rising >= 3 and d > 1.0 / 16.0:
                d = max(d / 2.0, 1.0 / 16.0)
                rising = 0
        else:
            rising = 0
        defect_prev = defect

        w, info = pcg(A, Fu, x0=w_prev, rtol=opts.cg_tol, maxiter=maxiter_cg, diag=diag)
        if info.bad_direction is not None:
            raise IndefiniteSystemError(
                "conjugate gradients met nonpositive curvature; see estimate_coercivity"
            )
        if not info.converged:
            report.iterations = k
            report.message = f"inner CG stalled at relres {info.relres:.3e}"
            report.damping_final = d
            return FEField(mesh, u), report
        w_prev = w
        u_new = (1.0 - d) * u + d * w
        incr = h1_norm_vec(mesh, u_new - u)
        report.residual_history.append(incr)
        u_norm = h1_norm_vec(mesh, u)
        u = u_new
        report.iterations = k
        if incr <= opts.tol_rel * (1.0 + u_norm):
            report.converged = True
            break
    field_out = FEField(mesh, u)
    report.defect = float(np.linalg.norm(A @ u - F(field_out))) / (1.0 + f_zero_norm)
    report.damping_final = d
    if not report.converged and not report.message:
        report.message = f"no convergence within {opts.max_iter} iterations"
    return field_out, report


def newton_solve(mesh, spec, opts=None, initial=None):
    """Newton iteration on the residual A u - F(u) with assembled Jacobian."""
    opts = opts or SolveOptions()
    A, K, M = _system_parts(mesh, spec)
    theta = _gate_coercivity(A, K, M, opts)
    F = _LoadOperator(mesh, spec)
    maxiter_cg = opts.cg_maxiter_factor * mesh.num_vertices

    u = np.zeros(mesh.num_vertices) if initial is None else np.asarray(initial.coeffs, dtype=float).copy()
    f_zero_norm = float(np.linalg.norm(F(FEField.zeros(mesh))))
    d = opts.damping
    report = SolveReport(method="newton", converged=False, iterations=0, coercivity=theta)
    defect_prev = math.inf
    rising = 0
    for k in range(1, opts.max_iter + 1):
        fld = FEField(mesh, u)
        res = A @ u - F(fld)
        defect = float(np.linalg.norm(res)) / (1.0 + f_zero_norm)
        if defect > defect_prev:
            rising += 1
            if rising >= 3 and d > 1.0 / 16.0:
                d = max(d / 2.0, 1.0 / 16.0)
                rising = 0
        else:
            rising = 0
        defect_prev = defect

        J = (A - F.jacobian_term(fld)).tocsr()
        delta, info = pcg(J, -res, rtol=opts.cg_tol, maxiter=maxiter_cg, diag=J.diagonal())
        if info.bad_direction is not None or not info.converged:
            report.iterations = k
            report.message = (
                "Jacobian solve failed (singular or indefinite); fall back to picard_solve"
            )
            report.damping_final = d
            return FEField(mesh, u), report
        u_new = u + d * delta
        incr = h1_norm_vec(mesh, u_new - u)
        report.residual_history.append(incr)
        u_norm = h1_norm_vec(mesh, u)
        u = u_new
        report.iterations = k
        if incr <= opts.tol_rel * (1.0 + u_norm):
            report.converged = True
            break
    field_out = FEField(mesh, u)
    report.defect = float(np.linalg.norm(A @ u - F(field_out))) / (1.0 + f_zero_norm)
    report.damping_final = d
    if not report.converged and not report.message:
        report.message = f"no convergence within {opts.max_iter} iterations"
    return field_out, report
