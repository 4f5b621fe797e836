import math

import numpy as np
import pytest

from striphom.concentration import canonical_family, v0_constant
from striphom.geometry import build_uniform_mesh
from striphom.oscillation import constant_profile, periodic_profile
from striphom.solver import ProblemSpec, make_nonlinearity
from striphom.study import (
    SweepConfig,
    Table,
    check_lemma_table,
    errors_vs_exact,
    manufactured_limit_problem,
    parse_csv,
    restrict_to,
    run_eps_sweep,
    run_lemma_suite,
    run_mesh_refinement,
    write_csv,
)

ZERO = make_nonlinearity("zero")


def zero_data_spec(profile=None, V0=0.0, eps=0.2):
    profile = profile or constant_profile(1.0)
    fam = canonical_family(v0_constant(V0), profile)
    return ProblemSpec(lam=2.0, f0=ZERO, f1=ZERO, R=2.0, profile=profile, family=fam,
                       mode="eps", eps=eps)


# ---------------------------------------------------------------------------
# tables and CSV


def test_table_roundtrip(tmp_path):
    t = Table(("a", "b"), [[1.0, math.pi], [1e-300, -2.5e17]])
    path = tmp_path / "t.csv"
    write_csv(t, path)
    back = parse_csv(path)
    assert back == t


def test_empty_table_header_only(tmp_path):
    t = Table(("x", "y", "z"), [])
    path = tmp_path / "empty.csv"
    write_csv(t, path)
    text = path.read_text()
    assert text == "x,y,z\n"
    assert parse_csv(path) == t


def test_csv_line_count(tmp_path):
    t = Table(("a",), [[float(k)] for k in range(4)])
    path = tmp_path / "four.csv"
    write_csv(t, path)
    assert len(path.read_text().splitlines()) == 5


def test_write_csv_io_error(tmp_path):
    t = Table(("a",), [[1.0]])
    with pytest.raises(OSError, match="no/such"):
        write_csv(t, tmp_path / "no/such/dir.csv")


def test_table_column_and_drop():
    t = Table(("a", "b", "c"), [[1.0, 2.0, 3.0]])
    assert t.column("b")[0] == 2.0
    d = t.drop("b")
    assert d.columns == ("a", "c")
    assert d.data.shape == (1, 2)


# ---------------------------------------------------------------------------
# eps sweep


def test_sweep_zero_data_rows_are_zero():
    cfg = SweepConfig(eps_list=(0.2, 0.1), spec=zero_data_spec(), c_mesh=8.0)
    result = run_eps_sweep(cfg)
    assert len(result) == 2
    assert np.all(result.column("h1_error") == 0.0)
    assert np.all(result.column("l2_error") == 0.0)
    assert np.all(result.column("picard_iters") > 0)


def test_sweep_exact_identity_configuration():
    # constant profile, no boundary data at all: the strip and limit systems
    # coincide, so the same-mesh difference vanishes identically
    prof = constant_profile(1.0)
    fam = canonical_family(v0_constant(0.0), prof)
    spec = ProblemSpec(lam=2.0, f0=ZERO, f1=make_nonlinearity("linear", (0.0, 2.0)),
                       R=2.0, profile=prof, family=fam, mode="eps", eps=0.2)
    cfg = SweepConfig(eps_list=(0.2,), spec=spec, c_mesh=8.0)
    result = run_eps_sweep(cfg)
    assert result.column("h1_error")[0] < 1e-6


def test_sweep_mesh_rule_and_columns():
    cfg = SweepConfig(eps_list=(0.2, 0.1), spec=zero_data_spec(), c_mesh=8.0)
    result = run_eps_sweep(cfg)
    assert list(result.column("n")) == [40.0, 80.0]
    assert result.columns[:3] == ("eps", "n", "h")
    assert np.all(np.isfinite(result.data))


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(eps_list=(), spec=zero_data_spec())
    with pytest.raises(ValueError):
        SweepConfig(eps_list=(0.1, 0.2), spec=zero_data_spec())  # not decreasing
    with pytest.raises(ValueError):
        SweepConfig(eps_list=(0.2, 0.1), spec=zero_data_spec(), c_mesh=4.0)
    prof = periodic_profile(2.0, 1.0, period=1.0)
    with pytest.raises(ValueError):
        SweepConfig(eps_list=(0.4, 0.2), spec=zero_data_spec(profile=prof))  # eps*G1 >= 1


def test_sweep_deterministic_across_threads():
    prof = periodic_profile(2.0, 1.0, period=1.0)
    fam = canonical_family(v0_constant(1.0), prof)
    spec = ProblemSpec(lam=5.0, f0=make_nonlinearity("saturating", (1.0,), R=2.0),
                       f1=make_nonlinearity("linear", (0.0, 1.0)), R=2.0,
                       profile=prof, family=fam, mode="eps", eps=0.2)
    cfg = SweepConfig(eps_list=(0.25, 0.2), spec=spec, c_mesh=8.0)
    a = run_eps_sweep(cfg, threads=1).drop("wall_time")
    b = run_eps_sweep(cfg, threads=2).drop("wall_time")
    assert a == b  # bitwise equality of all numeric columns


# ---------------------------------------------------------------------------
# mesh refinement


def test_manufactured_orders():
    spec, exact, exact_grad = manufactured_limit_problem()
    table = run_mesh_refinement(spec, [16, 32, 64], exact=exact, exact_grad=exact_grad)
    h1_orders = table.column("h1_order")[1:]
    l2_orders = table.column("l2_order")[1:]
    assert np.all(np.abs(h1_orders - 1.0) <= 0.2)
    assert np.all(np.abs(l2_orders - 2.0) <= 0.3)


def test_constant_solution_zero_error_on_all_meshes():
    lam, c = 2.0, 1.5
    spec = ProblemSpec(lam=lam, f0=ZERO, f1=make_nonlinearity("linear", (0.0, lam * c)),
                       R=2.0, profile=constant_profile(1.0),
                       family=canonical_family(v0_constant(0.0), constant_profile(1.0)),
                       mode="limit")
    exact = lambda x, y: np.full_like(x, c)
    exact_grad = lambda x, y: (np.zeros_like(x), np.zeros_like(y))
    table = run_mesh_refinement(spec, [8, 16], exact=exact, exact_grad=exact_grad)
    assert np.all(table.column("h1_error") < 1e-9)


def test_refinement_against_finest_mesh():
    spec, _, _ = manufactured_limit_problem()
    table = run_mesh_refinement(spec, [8, 16, 32, 64])
    errs = table.column("h1_error")
    assert len(errs) == 3  # finest row consumed as the reference
    assert np.all(np.diff(errs) < 0.0)


def test_restrict_to_nested_meshes():
    fine = build_uniform_mesh(8)
    coarse = build_uniform_mesh(4)
    from striphom.fields import FEField

    f = FEField.from_callable(fine, lambda x, y: x + 2.0 * y)
    r = restrict_to(coarse, f)
    expected = FEField.from_callable(coarse, lambda x, y: x + 2.0 * y)
    assert np.allclose(r.coeffs, expected.coeffs, atol=1e-15)
    with pytest.raises(ValueError):
        restrict_to(build_uniform_mesh(3), f)


def test_errors_vs_exact_on_interpolant():
    # error of the exact solution's interpolant: L2 part O(h^2), H1 part O(h)
    mesh = build_uniform_mesh(32)
    from striphom.fields import FEField

    u = FEField.from_callable(mesh, lambda x, y: np.sin(np.pi * x) * y)
    exact = lambda x, y: np.sin(np.pi * x) * y
    grad = lambda x, y: (np.pi * np.cos(np.pi * x) * y, np.sin(np.pi * x) * np.ones_like(y))
    h1e, l2e = errors_vs_exact(u, exact, grad)
    assert l2e < 2e-3
    assert h1e < 0.2


# ---------------------------------------------------------------------------
# lemma suite


def test_lemma_suite_passes_for_catalog():
    prof = periodic_profile(2.0, 1.0, period=1.0)
    fam = canonical_family(v0_constant(1.0), prof)
    eps_list = [0.1 * 2.0**-k for k in range(5)]
    table = run_lemma_suite(prof, fam, eps_list, ref_n=32)
    assert check_lemma_table(table, prof.G1) == []


def test_lemma_suite_negative_control_fails():
    prof = periodic_profile(2.0, 1.0, period=1.0)
    fam = canonical_family(v0_constant(1.0), prof)
    eps_list = [0.1 * 2.0**-k for k in range(4)]
    table = run_lemma_suite(prof, fam, eps_list, mu_scale=2.0, ref_n=32)
    failures = check_lemma_table(table, prof.G1)
    assert any("concentration_gap" in f or "weak_star" in f for f in failures)


def test_lemma_suite_deterministic_given_seed():
    prof = periodic_profile(2.0, 1.0, period=1.0)
    fam = canonical_family(v0_constant(1.0), prof)
    a = run_lemma_suite(prof, fam, [0.1, 0.05], ref_n=16, seed=5)
    b = run_lemma_suite(prof, fam, [0.1, 0.05], ref_n=16, seed=5)
    assert a == b
