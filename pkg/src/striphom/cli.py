"""Command-line front end: mu | solve | sweep | verify | coercivity.

Configuration is a TOML document (see docs/example-config.toml). Exit codes:
0 ok, 1 config error, 2 non-convergence, 3 indefinite system, 4 verification
failure.
"""

import argparse
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import concentration as conc
from . import study
from .geometry import build_uniform_mesh
from .oscillation import constant_profile, modulated_profile, periodic_profile
from .solver import (
    IndefiniteSystemError,
    ProblemSpec,
    SolveOptions,
    find_lambda_star,
    make_nonlinearity,
    mu_for,
    newton_solve,
    picard_solve,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INDEFINITE = 3
EXIT_VERIFY = 4


class ConfigError(Exception):
    pass


def _load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc


def _build_profile(cfg):
    block = cfg.get("profile", {})
    kind = block.get("kind", "pure-periodic")
    params = block.get("params", [])
    if kind == "constant":
        if len(params) != 1:
            raise ConfigError("profile.params must be [c] for profile.kind = 'constant'")
        return constant_profile(params[0])
    if kind == "pure-periodic":
        if len(params) not in (2, 3):
            raise ConfigError(
                "profile.params must be [a, b] or [a, b, period] for "
                "profile.kind = 'pure-periodic'"
            )
        period = params[2] if len(params) == 3 else 1.0
        return periodic_profile(params[0], params[1], period)
    if kind == "x-modulated":
        return modulated_profile()
    raise ConfigError(f"profile.kind unknown catalog tag: {kind!r}")


def _build_v0(cfg):
    pot = cfg.get("potential", {})
    block = pot.get("v0", pot.get("V0", {"kind": "constant", "params": [1.0]}))
    kind = block.get("kind")
    params = block.get("params", [])
    if kind == "constant":
        return conc.v0_constant(*params)
    if kind == "affine":
        return conc.v0_affine(*params)
    if kind == "cosine":
        return conc.v0_cosine(*params)
    raise ConfigError(f"potential.v0.kind unknown catalog tag: {kind!r}")


def _build_family(cfg, profile):
    kind = cfg.get("potential", {}).get("kind", "canonical")
    v0 = _build_v0(cfg)
    if kind == "canonical":
        return conc.canonical_family(v0, profile)
    if kind == "ramp":
        return conc.ramp_family(v0, profile)
    raise ConfigError(f"potential.kind unknown catalog tag: {kind!r}")


def _build_nonlinearity(cfg, key, R):
    block = cfg.get("problem", {}).get(key, {"kind": "zero"})
    kind = block.get("kind")
    try:
        return make_nonlinearity(kind, block.get("params", ()), R=R)
    except ValueError as exc:
        raise ConfigError(f"problem.{key}.kind unknown catalog tag: {kind!r}") from exc


def _build_options(cfg):
    block = cfg.get("solver", {})
    try:
        return SolveOptions(
            method=block.get("method", "picard"),
            tol_rel=block.get("tol_rel", 1e-10),
            max_iter=block.get("max_iter", 200),
            damping=block.get("damping", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"solver options invalid: {exc}") from exc


def _build_problem(cfg, mode, eps):
    problem = cfg.get("problem", {})
    lam = float(problem.get("lambda", 1.0))
    R = float(problem.get("R", 2.0))
    if R <= 0.0:
        raise ConfigError(f"problem.R must be positive, got {R}")
    profile = _build_profile(cfg)
    family = _build_family(cfg, profile)
    f0 = _build_nonlinearity(cfg, "f0", R)
    f1 = _build_nonlinearity(cfg, "f1", R)
    if mode == "eps":
        if eps is None:
            raise ConfigError("solve.eps is required for solve.mode = 'eps'")
        if eps * profile.G1 >= 1.0:
            raise ConfigError(
                f"solve.eps too large: eps*G1 = {eps * profile.G1} >= 1 "
                "(strip must stay in the unit square)"
            )
    return ProblemSpec(
        lam=lam, f0=f0, f1=f1, R=R, profile=profile, family=family, mode=mode, eps=eps
    )


def _eps_list(cfg):
    eps_list = cfg.get("study", {}).get("eps_list", [])
    if not eps_list:
        raise ConfigError("study.eps_list must be a nonempty decreasing list")
    profile = _build_profile(cfg)
    for e in eps_list:
        if e * profile.G1 >= 1.0:
            raise ConfigError(
                f"study.eps_list entry {e} too large: eps*G1 = {e * profile.G1} >= 1"
            )
    return [float(e) for e in eps_list]


def cmd_mu(cfg, args):
    profile = _build_profile(cfg)
    mu = mu_for(profile)
    samples = args.samples
    print("x mu")
    for i in range(samples):
        x = (i + 1) / (samples + 1)
        print(f"{x:.16e} {float(mu(x)):.16e}")
    return EXIT_OK


def write_field(field, path):
    """Plain text: header '<n> <vertex count>', then vertex-ordered values."""
    lines = [f"{field.mesh.n} {field.mesh.num_vertices}"]
    lines.extend(f"{v:.16e}" for v in field.coeffs)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path):
    with open(path) as fh:
        header = fh.readline().split()
        n, nv = int(header[0]), int(header[1])
        vals = np.array([float(fh.readline()) for _ in range(nv)])
    mesh = build_uniform_mesh(n)
    from .fields import FEField

    return FEField(mesh, vals)


def cmd_solve(cfg, args):
    solve_block = cfg.get("solve", {})
    mode = solve_block.get("mode", "limit")
    if mode not in ("eps", "limit"):
        raise ConfigError(f"solve.mode must be 'eps' or 'limit', got {mode!r}")
    eps = solve_block.get("eps")
    spec = _build_problem(cfg, mode, float(eps) if eps is not None else None)
    n = int(solve_block.get("n", 64))
    mesh = build_uniform_mesh(n)
    opts = _build_options(cfg)
    solve = newton_solve if opts.method == "newton" else picard_solve
    field, report = solve(mesh, spec, opts)
    out = args.out or solve_block.get("output", "solution.txt")
    write_field(field, out)
    sys.stdout.write(report.to_text())
    print(f"field written to {out}")
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def cmd_sweep(cfg, args):
    block = cfg.get("study", {})
    eps_list = _eps_list(cfg)
    spec = _build_problem(cfg, "eps", eps_list[0])
    sweep_cfg = study.SweepConfig(
        eps_list=eps_list,
        spec=spec,
        c_mesh=float(block.get("c_mesh", 8.0)),
        opts=_build_options(cfg),
    )
    result = study.run_eps_sweep(sweep_cfg, threads=args.threads)
    out = args.out or block.get("output", "sweep.csv")
    study.write_csv(result.drop("wall_time"), out)
    timing = study.Table(("eps", "wall_time"),
                         np.column_stack([result.column("eps"), result.column("wall_time")]))
    study.write_csv(timing, out + ".timing.csv")
    for row in result.data:
        print(
            f"eps={row[0]:g} n={int(row[1])} h1_error={row[3]:.6e} "
            f"iters={int(row[5])} wall={row[-1]:.2f}s",
            file=sys.stderr,
        )
    print(f"sweep written to {out} (timings in {out}.timing.csv)")
    return EXIT_OK


def cmd_verify(cfg, args):
    eps_list = _eps_list(cfg)
    profile = _build_profile(cfg)
    family = _build_family(cfg, profile)
    problem = cfg.get("problem", {})
    R = float(problem.get("R", 2.0))
    f0 = _build_nonlinearity(cfg, "f0", R) if "f0" in problem else None
    table = study.run_lemma_suite(
        profile,
        family,
        eps_list,
        f0=f0,
        mu_scale=args.debug_mu_scale,
        seed=args.seed,
        R=R,
    )
    out = args.out or cfg.get("study", {}).get("output", "verify.csv")
    study.write_csv(table, out)
    failures = study.check_lemma_table(table, profile.G1)
    if failures:
        for f in failures:
            print(f"FAIL: {f}", file=sys.stderr)
        print(f"verification failed ({len(failures)} checks); table in {out}")
        return EXIT_VERIFY
    print(f"verification passed; table in {out}")
    return EXIT_OK


def cmd_coercivity(cfg, args):
    solve_block = cfg.get("solve", {})
    mode = solve_block.get("mode", "limit")
    eps = solve_block.get("eps")
    spec = _build_problem(cfg, mode, float(eps) if eps is not None else None)
    n = int(solve_block.get("n", 16))
    mesh = build_uniform_mesh(n)
    lo = args.lambda_min if args.lambda_min is not None else cfg.get("coercivity", {}).get("lambda_min", 0.01)
    hi = args.lambda_max if args.lambda_max is not None else cfg.get("coercivity", {}).get("lambda_max", 10.0)
    result = find_lambda_star(mesh, spec, (lo, hi))
    if result.status == "found":
        print(f"lambda_star {result.value:.6f}")
    elif result.status == "coercive-at-min":
        print(f"coercive at range minimum (theta({lo}) = {result.theta_min:.6e} > 0)")
    else:
        print(f"indefinite at range maximum (theta({hi}) = {result.theta_max:.6e} <= 0)")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="striphom",
        description="Elliptic solves and convergence studies for potentials "
        "concentrated in an oscillating boundary strip.",
    )
    parser.add_argument("--config", required=True, help="TOML configuration file")
    parser.add_argument("--out", default=None, help="output path (command dependent)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--seed", type=int, default=study.DEFAULT_SEED, help="suite RNG seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p_mu = sub.add_parser("mu", help="tabulate the homogenized coefficient")
    p_mu.add_argument("--samples", type=int, default=11)
    sub.add_parser("solve", help="solve one problem and write the field")
    sub.add_parser("sweep", help="run the eps sweep and write CSV")
    p_verify = sub.add_parser("verify", help="run the lemma suites and check them")
    p_verify.add_argument(
        "--debug-mu-scale",
        type=float,
        default=1.0,
        help="debug: scale mu by this factor (negative control)",
    )
    p_coer = sub.add_parser("coercivity", help="estimate the coercivity threshold")
    p_coer.add_argument("--lambda-min", type=float, default=None)
    p_coer.add_argument("--lambda-max", type=float, default=None)

    args = parser.parse_args(argv)
    commands = {
        "mu": cmd_mu,
        "solve": cmd_solve,
        "sweep": cmd_sweep,
        "verify": cmd_verify,
        "coercivity": cmd_coercivity,
    }
    try:
        cfg = _load_toml(args.config)
        return commands[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IndefiniteSystemError as exc:
        print(f"indefinite system: {exc}", file=sys.stderr)
        return EXIT_INDEFINITE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
