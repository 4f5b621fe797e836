"""striphom: elliptic problems with terms concentrated in an oscillating
boundary strip, their homogenized limit, and desk-scale convergence studies."""

from . import _kernels
from .assembly import h1_error, h1_norm, l2_norm
from .concentration import (
    PotentialFamily,
    StripRegion,
    canonical_family,
    concentrated_integral,
    concentration_gap,
    operator_gap_proxy,
    potential_pairing_eps,
    potential_pairing_limit,
    ramp_family,
    strip_contains,
    trace_integral,
    verify_uniform_bound,
)
from .fields import FEField
from .geometry import Point2, TriMesh, build_uniform_mesh, locate_point
from .oscillation import (
    MuCoefficient,
    OscillationProfile,
    cell_average_mu,
    constant_profile,
    eval_G_eps,
    modulated_profile,
    mu_from_profile,
    periodic_profile,
    weak_star_residual,
)
from .solver import (
    IndefiniteSystemError,
    ProblemSpec,
    SolveOptions,
    SolveReport,
    build_system,
    estimate_coercivity,
    find_lambda_star,
    make_nonlinearity,
    newton_solve,
    picard_solve,
    spatial_data,
)
from .study import (
    SweepConfig,
    Table,
    parse_csv,
    run_eps_sweep,
    run_lemma_suite,
    run_mesh_refinement,
    write_csv,
)

__version__ = "0.1.0"
