import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.algorithms.minimax import (
    DiscretePath,
    SolverSettings,
    certify_point,
    certify_report,
    init_path,
    mountain_pass_solve,
    path_max,
    refine_path,
    relax_step,
    reparametrize,
    symmetry_projector,
)
from src.algorithms.oracle import OracleSettings, catalog_match, multistart, newton_refine, residual
from src.discrete_system.config import DESK_DIRECTION, DESK_LEVEL
from src.discrete_system.errors import CertificateError, GeometryError, PathError
from src.discrete_system.functional import find_ray_geometry, phi_eval, phi_grad, phi_values
from src.discrete_system.models import FunctionalKind, FunctionalSpec, MountainGeometry, PeriodicSequence
from src.discrete_system.potentials import cosine_half_potential, cosine_mu_potential

ALTERNATING = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])


@pytest.fixture(scope="module")
def desk():
    potential = cosine_mu_potential(a=2.5, mu=1.0, K=1.0, period=6)
    f = FunctionalSpec(FunctionalKind.STANDARD, potential)
    geometry = find_ray_geometry(f, PeriodicSequence(DESK_DIRECTION), DESK_LEVEL)
    return potential, f, geometry


@pytest.fixture(scope="module")
def desk_report(desk):
    _, f, geometry = desk
    return mountain_pass_solve(f, geometry, 0.01, SolverSettings(ensemble=2), seed=0)


@pytest.fixture(scope="module")
def full_space_report(desk):
    _, f, geometry = desk
    settings = SolverSettings(ensemble=3, max_iterations=100, symmetry="none")
    return mountain_pass_solve(f, geometry, 0.01, settings, seed=0)


# the base path pushed off the ray along the lambda = 4 mode, pins untouched
def bent_path(geometry, n=64, amplitude=0.3):
    base = init_path(geometry, n)
    bump = amplitude * np.abs(np.sin(2 * np.pi * np.arange(n + 1) / n))
    knots = base.knots + bump[:, None] * ALTERNATING
    for k in base.pinned:
        knots[k] = base.knots[k]
    return DiscretePath(knots)


# the running estimate never increases inside the coarse or the refined pass
def assert_passes_non_increasing(report):
    for part in (report.history[:report.refine_start], report.history[report.refine_start:]):
        assert all(b <= a for a, b in zip(part, part[1:]))


def test_init_path(desk):
    _, _, geometry = desk
    path = init_path(geometry, 16)
    assert path.n_segments == 16
    assert path.pinned == (0, 8, 16)
    assert np.array_equal(path.knots[0], np.zeros(6))
    assert np.array_equal(path.knots[8], geometry.e1.values)
    assert np.array_equal(path.knots[16], geometry.e.values)
    spacing = path.spacing()
    assert_allclose(spacing[:8], spacing[0])
    assert_allclose(spacing[8:], spacing[8])


@pytest.mark.parametrize("n", [6, 7, 15])
def test_init_path_rejects_bad_knot_counts(desk, n):
    with pytest.raises(PathError):
        init_path(desk[2], n)


def test_relax_keeps_pins_bitwise(desk):
    _, f, geometry = desk
    path = bent_path(geometry)
    result = relax_step(path, f)
    assert not result.stalled
    assert result.moved > 0
    for k in path.pinned:
        assert np.array_equal(result.path.knots[k], path.knots[k])


def test_relax_stalls_on_the_ray(desk):
    _, f, geometry = desk
    path = init_path(geometry, 32)
    projector = symmetry_projector(f, geometry)
    result = relax_step(path, f, projector=projector)
    assert result.stalled
    assert result.path is path


def test_relax_lowers_a_bent_path(desk):
    _, f, geometry = desk
    path = bent_path(geometry)
    start = path_max(path, f)[1]
    assert start > phi_eval(f, PeriodicSequence(1.13 * np.array(DESK_DIRECTION)))
    for _ in range(50):
        result = relax_step(path, f)
        if result.stalled:
            break
        path = result.path
    assert path_max(path, f)[1] < start - 1e-3


def test_reparametrize_equalizes_spacing(desk):
    _, _, geometry = desk
    path = bent_path(geometry, n=32)
    knots = reparametrize(path.knots)
    spacing = np.linalg.norm(np.diff(knots, axis=0), axis=1)
    # chords across corners come out slightly shorter than the arc increments
    assert np.ptp(spacing[:16]) <= 0.05 * spacing[:16].mean()
    assert np.array_equal(knots[16], path.knots[16])


def test_isotropy_projector(desk):
    _, f, geometry = desk
    P = symmetry_projector(f, geometry)
    assert np.trace(P) == pytest.approx(1.0)
    assert_allclose(P @ P, P, atol=1e-12)
    assert_allclose(P, P.T, atol=1e-12)
    d = np.array(DESK_DIRECTION)
    assert_allclose(P @ d, d, atol=1e-12)
    assert_allclose(symmetry_projector(f, geometry, "none"), np.eye(6))
    with pytest.raises(PathError):
        symmetry_projector(f, geometry, "mirror")


def test_refine_path_keeps_old_knots(desk):
    path = init_path(desk[2], 8)
    fine = refine_path(path)
    assert fine.n_segments == 16
    assert np.array_equal(fine.knots[0::2], path.knots)
    assert fine.pinned == (0, 8, 16)
    assert np.array_equal(fine.knots[8], desk[2].e1.values)


def test_desk_solve(desk, desk_report):
    _, f, _ = desk
    report = desk_report
    ray_top = -4 * 1.1311 ** 2 + 10 * (1 - np.cos(1.1311))
    assert 0.60 < report.c_hat < 0.64
    assert report.c_hat <= ray_top + 1e-4
    assert report.certified
    assert report.case == "case_1"
    assert report.c1 == pytest.approx(DESK_LEVEL, abs=1e-10)
    assert report.e1_level == pytest.approx(DESK_LEVEL, abs=1e-10)
    assert report.knots == 128
    assert report.fixed_dimension == 1
    assert report.phi_u_hat == pytest.approx(report.c_hat, abs=1e-12)
    assert report.grad_norm < 2 * report.eps
    assert 1 <= report.refine_start < len(report.history)
    assert_passes_non_increasing(report)
    assert report.history[0] == report.coarse_c_hat
    assert report.history[-1] == report.c_hat
    assert len(report.member_values) == 2


def test_desk_solve_is_below_the_ray_top(desk, desk_report, desk_solution):
    _, f, _ = desk
    assert desk_report.c_hat <= phi_eval(f, desk_solution) + 1e-12


def test_desk_certificates_at_coarser_eps(desk):
    _, f, geometry = desk
    report = mountain_pass_solve(f, geometry, 0.1, SolverSettings(ensemble=1), seed=3)
    assert report.certificate_i and report.certificate_ii


def test_solve_is_deterministic(desk, desk_report):
    _, f, geometry = desk
    again = mountain_pass_solve(f, geometry, 0.01, SolverSettings(ensemble=2), seed=0)
    assert again.to_dict() == desk_report.to_dict()


def test_newton_polishes_u_hat_to_the_ray_solution(desk, desk_report, desk_solution):
    potential = desk[0]
    refined = newton_refine(desk_report.u_hat, potential)
    assert refined.converged
    assert_allclose(refined.u.values, desk_solution.values, atol=1e-9)


def test_analytic_saddle():
    # phi(t d) = 12 (1 - cos t): the pass is at t = pi with value 24
    f = FunctionalSpec(FunctionalKind.STANDARD, cosine_half_potential(a=3.0, K=1.0, period=6))
    d = PeriodicSequence(DESK_DIRECTION)
    geometry = find_ray_geometry(f, d, 12.0)
    report = mountain_pass_solve(f, geometry, 0.01, SolverSettings(ensemble=1), seed=0)
    assert report.c_hat == pytest.approx(24.0, abs=1e-9)
    assert_allclose(report.u_hat.values, np.pi * d.values, atol=1e-9)
    assert report.grad_norm <= 1e-9
    assert report.certified


def test_full_space_search_never_exceeds_isotropy(desk_report, full_space_report):
    report = full_space_report
    assert report.fixed_dimension == 6
    assert report.c_hat <= desk_report.c_hat + 1e-12
    assert report.c_hat >= DESK_LEVEL - 1e-9


def test_history_spans_both_passes(full_space_report):
    # perturbed members start off the ray and take real steps in the coarse pass
    report = full_space_report
    assert report.refine_start > 1
    assert len(report.history) > report.refine_start
    assert_passes_non_increasing(report)
    assert report.history[report.refine_start - 1] == report.coarse_c_hat
    # refined knots contain the coarse ones, so the refined pass starts at or above the coarse value
    assert report.history[report.refine_start] >= report.coarse_c_hat
    assert report.history[-1] == report.c_hat
    assert report.to_dict()["refine_start"] == report.refine_start


def test_history_without_refinement(desk):
    _, f, geometry = desk
    settings = SolverSettings(ensemble=2, max_iterations=30, symmetry="none", refine=False)
    report = mountain_pass_solve(f, geometry, 0.01, settings, seed=1)
    assert report.refine_start == len(report.history)
    assert report.knots == 64
    assert report.c_hat == report.coarse_c_hat == report.history[-1]
    assert_passes_non_increasing(report)


def test_perturbed_point_fails_gradient_certificate(desk, desk_solution):
    _, f, _ = desk
    u = desk_solution + PeriodicSequence([0.0, 0.0, 0.1, 0.0, 0.0, 0.0])
    record = certify_point(f, u, phi_eval(f, desk_solution), 0.01)
    assert record.certificate_i
    assert not record.certificate_ii
    assert not record.passed
    assert record.grad_norm == pytest.approx(0.15, abs=0.02)


def test_certify_report_detects_tampering(desk, desk_report):
    _, f, _ = desk
    assert certify_report(desk_report, f).passed
    with pytest.raises(CertificateError):
        certify_report(dataclasses.replace(desk_report, certificate_ii=False), f)
    with pytest.raises(CertificateError):
        certify_report(dataclasses.replace(desk_report, phi_u_hat=desk_report.phi_u_hat + 1e-6), f)


def test_solver_rejects_bad_input(desk):
    _, f, geometry = desk
    with pytest.raises(PathError):
        mountain_pass_solve(f, geometry, 0.0)
    with pytest.raises(PathError):
        mountain_pass_solve(f, geometry, 0.01, SolverSettings(ensemble=0))
    d = np.array(DESK_DIRECTION)
    e1, e = 0.5921 * d, 1.4 * d
    skewed = MountainGeometry(e=PeriodicSequence(e), e1=PeriodicSequence(e1),
                              r=float(np.sqrt(np.linalg.norm(e1) * np.linalg.norm(e))), level=DESK_LEVEL)
    with pytest.raises(GeometryError):
        mountain_pass_solve(f, skewed, 0.01)


def test_path_frame(desk):
    _, f, geometry = desk
    frame = init_path(geometry, 8).to_frame(f)
    assert list(frame.columns) == ["knot", "u1", "u2", "u3", "u4", "u5", "u6", "phi"]
    assert_allclose(frame["phi"], phi_values(f, init_path(geometry, 8).knots))


@pytest.mark.slow
def test_end_to_end_at_full_size(desk, desk_solution):
    potential, f, geometry = desk
    report = mountain_pass_solve(f, geometry, 0.01, SolverSettings(ensemble=8), seed=0)
    assert len(report.member_values) == 8
    assert report.certified

    refined = newton_refine(report.u_hat, potential)
    assert refined.converged
    assert phi_grad(f, refined.u).norm() <= 1e-8
    assert residual(refined.u, potential) <= 1e-8
    assert phi_eval(f, refined.u) > 0.0

    catalog = multistart(potential, OracleSettings(starts=500), seed=0)
    assert catalog.starts == 48 + 500
    _, distance, matched = catalog_match(catalog, refined.u, potential)
    assert matched
    assert distance <= 1e-6
    assert_allclose(refined.u.values, desk_solution.values, atol=1e-9)
