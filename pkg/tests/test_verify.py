import json

import numpy as np
import pytest

from helmscat.fields import FarFieldPattern, far_field
from helmscat.geom import discretize, make_sphere
from helmscat.mathfn import direction_angles, sh_count, sph_harm_all
from helmscat.solver import BoundaryCondition
from helmscat.verify import (
    SUITE,
    IdentityReport,
    cap_grid,
    check_continuation,
    check_green_symmetry,
    check_point_source_limit,
    check_two_obstacle_identity,
    check_boundary_trace,
    check_reciprocity,
    decay_exponent,
    format_table,
    load_profiles,
    obstacle_relation,
    resolve_profile,
    run_suite,
)

D = BoundaryCondition.dirichlet()
ALPHA = np.array([0.0, 0.0, 1.0])
ACCEPTANCE_TOL = {
    "oracle_dirichlet": 1e-3, "oracle_neumann": 5e-3, "oracle_impedance": 5e-3,
    "reciprocity_sphere": 5e-3, "reciprocity_spheroid": 5e-2,
    "point_source_sphere": 1e-2, "point_source_sphere_offset": 1e-2, "point_source_spheroid": 1e-2,
    "two_obstacle_disjoint": 5e-2, "two_obstacle_nested": 5e-2, "two_obstacle_identical": 1e-6,
    "boundary_trace_constant": 5e-2, "boundary_trace_y11": 5e-2, "continuation_cap60": 1e-4, "flux_limit": 1e-2,
    "optical_theorem_oracle": 1e-10, "optical_theorem_bie": 1e-2,
}


def test_report_pass_logic_and_json():
    r = IdentityReport("x", 0.1, 0.2, conditions={"c": True}, metadata={"a": np.arange(3), "z": 1 + 2j})
    assert r.passed
    assert not IdentityReport("x", 0.1, 0.2, conditions={"c": False}).passed
    assert not IdentityReport("x", 0.3, 0.2).passed
    json.dumps(r.to_dict())


def test_decay_exponent_of_power_law():
    r = np.array([25.0, 50.0, 100.0])
    assert decay_exponent(r, 3.0 * r**-2.0) == pytest.approx(-2.0, abs=1e-12)


def test_reciprocity_passes_on_sphere(coarse_dirichlet_solver):
    rep = check_reciprocity(coarse_dirichlet_solver)
    assert rep.passed and rep.residual < 1e-6


def test_reciprocity_trivial_pairs_are_exact(coarse_dirichlet_solver):
    a = np.array([0.3, -0.4, np.sqrt(0.75)])
    rep = check_reciprocity(coarse_dirichlet_solver, pairs=[(a, -a), (ALPHA, -ALPHA)])
    assert rep.residual < 1e-10


def test_green_symmetry_swap_invariant(coarse_dirichlet_solver):
    pairs = [((2.0, 0.0, 0.0), (0.0, 2.5, 0.3)), ((0.0, 0.0, -3.0), (1.0, 1.0, 1.5))]
    r1 = check_green_symmetry(coarse_dirichlet_solver, pairs=pairs)
    r2 = check_green_symmetry(coarse_dirichlet_solver, pairs=[(y, x) for x, y in pairs])
    assert r1.residual == r2.residual
    assert r1.passed


def test_point_source_remainder_decays(coarse_dirichlet_solver):
    rep = check_point_source_limit(coarse_dirichlet_solver)
    assert rep.metadata["decay_exponent"] <= -1.8
    errs = rep.metadata["renormalized_errors"]
    assert errs[0] > errs[1] > errs[2]


def test_point_source_small_obstacle():
    # for a tiny sphere u is close to the plane wave and the point-source field
    # renormalizes to it with a small remainder
    rep = check_point_source_limit(make_sphere(0.05), D, 1.0, dims=(8, 16), probes=np.array([[0.3, 0.0, 0.0], [0.0, 0.2, 0.1]]))
    assert rep.residual < 1e-2
    assert rep.conditions["decay_exponent<=-1.8"]


def test_point_source_rejects_oblique_offset(coarse_dirichlet_solver):
    with pytest.raises(ValueError):
        check_point_source_limit(coarse_dirichlet_solver, eta=(0.0, 0.0, 1.0))


def test_obstacle_relation():
    d = (12, 24)
    a = discretize(make_sphere(1.0), *d)
    assert obstacle_relation(a, discretize(make_sphere(1.0), *d)) == "identical"
    assert obstacle_relation(a, discretize(make_sphere(1.0, center=(3, 0, 0)), *d)) == "disjoint"
    assert obstacle_relation(discretize(make_sphere(0.5), *d), a) == "inside"
    assert obstacle_relation(a, discretize(make_sphere(0.5), *d)) == "contains"
    assert obstacle_relation(a, discretize(make_sphere(1.0, center=(1, 0, 0)), *d)) == "intersecting"


def test_two_obstacle_identical_and_intersecting():
    betas = np.array([[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]])
    rep = check_two_obstacle_identity(make_sphere(1.0), make_sphere(1.0), 1.0, ALPHA, betas, dims=(12, 24))
    assert rep.residual < 1e-6 and rep.metadata["absolute"]
    with pytest.raises(ValueError):
        check_two_obstacle_identity(make_sphere(1.0), make_sphere(1.0, center=(1, 0, 0)), 1.0, ALPHA, betas, dims=(12, 24))


def test_two_obstacle_nested_coarse():
    betas = np.array([[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.0, 0.0, -1.0]])
    rep = check_two_obstacle_identity(make_sphere(0.5), make_sphere(1.0), 1.0, ALPHA, betas, dims=(16, 32))
    assert rep.metadata["relation"] == "inside"
    assert rep.passed


def test_boundary_trace_validation(coarse_dirichlet_solver):
    with pytest.raises(ValueError):
        check_boundary_trace(None, 1.0, np.ones(3), solver=coarse_dirichlet_solver)
    q = coarse_dirichlet_solver.surface
    t = q.nodes[0]
    with pytest.raises(ValueError):
        check_boundary_trace(None, 1.0, lambda x: np.ones(len(x)), node_index=0, direction=-q.normals[0],
                           solver=coarse_dirichlet_solver)
    assert t.shape == (3,)


def test_boundary_trace_constant_coarse(coarse_dirichlet_solver):
    rep = check_boundary_trace(None, 1.0, lambda x: np.ones(len(x)), solver=coarse_dirichlet_solver)
    assert rep.passed
    assert rep.conditions["approaches_boundary_value"]


def test_cap_grid_measure():
    for angle, center in ((np.pi / 3, (0, 0, 1)), (np.pi / 4, (1, 1, 0))):
        d, w = cap_grid(angle, 10, 20, center)
        assert w.sum() == pytest.approx(2 * np.pi * (1 - np.cos(angle)), rel=1e-13)
        c = np.asarray(center, float) / np.linalg.norm(center)
        assert np.all(d @ c >= np.cos(angle) - 1e-12)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-14)


def _poly_pattern(dirs, L, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(sh_count(L)) + 1j * rng.standard_normal(sh_count(L))
    th, ph = direction_angles(dirs)
    return c @ sph_harm_all(L, th, ph)


def test_continuation_exact_for_band_limited_data():
    from helmscat.mathfn import sphere_grid

    dirs, w = cap_grid(np.pi / 3, 12, 24)
    g = sphere_grid(12, 24)
    cap = FarFieldPattern(1.0, dirs, _poly_pattern(dirs, 4), ALPHA, w)
    full = FarFieldPattern(1.0, g.directions, _poly_pattern(g.directions, 4), ALPHA, g.weights)
    rep = check_continuation(cap, full, 4)
    assert rep.passed and rep.residual < 1e-8


def test_continuation_small_cap_flagged(dirichlet_solution):
    from helmscat.fields import far_field_values

    full = far_field(dirichlet_solution)
    dirs, w = cap_grid(np.radians(10.0), 16, 32)
    cap = FarFieldPattern(1.0, dirs, far_field_values(dirichlet_solution, dirs), ALPHA, w)
    rep = check_continuation(cap, full, 8)
    assert not rep.conditions["trustworthy"]
    assert not rep.passed


def test_profiles():
    prof = load_profiles()
    assert set(prof) == {"fast", "slow"}
    fast, slow = prof["fast"]["tolerances"], prof["slow"]["tolerances"]
    for name, tol in ACCEPTANCE_TOL.items():
        assert fast[name] == tol
        assert slow[name] <= fast[name]
    assert prof["fast"]["default_tolerance"] == 5e-2
    assert prof["slow"]["default_tolerance"] == 5e-3
    assert set(fast) <= set(SUITE)


def test_resolve_profile_overrides():
    p = resolve_profile("fast", {"grid": [16, 32], "tolerances": {"flux_limit": 0.5}})
    assert p["grid"] == [16, 32] and p["tolerances"]["flux_limit"] == 0.5
    assert load_profiles()["fast"]["tolerances"]["flux_limit"] == 1e-2
    with pytest.raises(KeyError):
        resolve_profile("medium")


def test_run_suite_deterministic_and_sorted():
    names = ["optical_theorem_oracle", "flux_limit"]
    over = {"grid": [16, 32]}
    a = run_suite("fast", names, over, threads=1)
    b = run_suite("fast", names, over, threads=2)
    assert [r.name for r in a] == sorted(names)
    assert [r.residual for r in a] == [r.residual for r in b]
    table = format_table(a)
    assert "flux_limit" in table and "optical_theorem_oracle" in table
    with pytest.raises(KeyError):
        run_suite("fast", ["no_such_identity"])
