import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.algorithms.oracle import residual
from src.discrete_system.config import DESK_A3, DESK_LEVEL
from src.discrete_system.errors import ConditionError, FunctionalError, GeometryError, PeriodMismatchError
from src.discrete_system.functional import (
    build_penalty_geometry,
    claimed_gradient_mismatch,
    coercivity_check,
    constant_sequence_check,
    estimate_c0,
    find_ray_geometry,
    phi_eval,
    phi_grad,
    phi_gradients,
    phi_values,
    ps_bound_check,
    ray_profile,
)
from src.discrete_system.models import (
    ConditionGrid,
    ConditionId,
    FunctionalKind,
    FunctionalSpec,
    PenaltyReading,
    PeriodicSequence,
)
from src.discrete_system.potentials import (
    check_condition,
    cosine_half_potential,
    cosine_mu_potential,
    custom_potential,
    zero_profile,
)
from src.discrete_system.utils import central_difference_gradient, random_ball_samples, relative_error


def penalized(potential, w3=2.4, reading=PenaltyReading.WEIGHTED, n_star=3):
    return FunctionalSpec(FunctionalKind.PENALIZED, potential, n_star=n_star, w3=w3, penalty=reading)


@pytest.fixture
def desk_a3(desk_potential):
    return check_condition(desk_potential, ConditionId.A3,
                           ConditionGrid(w1=DESK_A3["w1"], w2=DESK_A3["w2"], w3=DESK_A3["w3"]))


def test_standard_value_on_the_ray(desk_functional, desk_solution, desk_amplitude):
    A = desk_amplitude
    assert phi_eval(desk_functional, desk_solution) == pytest.approx(-4 * A ** 2 + 10 * (1 - np.cos(A)), abs=1e-12)
    assert 0.60 < phi_eval(desk_functional, desk_solution) < 0.64


def test_gradient_vanishes_at_the_ray_solution(desk_functional, desk_solution):
    assert phi_grad(desk_functional, desk_solution).norm() <= 1e-10


def test_origin_is_stationary(desk_potential, desk_functional):
    zero = PeriodicSequence.zeros(6)
    for f in (desk_functional, penalized(desk_potential)):
        assert phi_eval(f, zero) == 0.0
        assert_allclose(phi_grad(f, zero).values, 0.0)


@pytest.mark.parametrize("instance", [
    dict(a=2.5, mu=1.0, K=1.0),
    dict(a=3.0, mu=0.75, K=2.0),
    dict(a=4.0, mu=2.0, K=0.5),
])
def test_gradient_matches_finite_differences(instance, rng):
    p = cosine_mu_potential(period=6, **instance)
    functionals = [FunctionalSpec(FunctionalKind.STANDARD, p), penalized(p),
                   penalized(p, reading=PenaltyReading.UNIT)]
    for f in functionals:
        for x in rng.uniform(-3, 3, size=(100, 6)):
            fd = central_difference_gradient(lambda v: float(phi_values(f, v)), x)
            assert relative_error(phi_gradients(f, x), fd) <= 1e-6


def test_vectorized_evaluation_matches_pointwise(desk_functional, rng):
    points = rng.normal(size=(4, 5, 6))
    values = phi_values(desk_functional, points)
    assert values.shape == (4, 5)
    assert values[2, 3] == pytest.approx(phi_eval(desk_functional, PeriodicSequence(points[2, 3])))


def test_period_mismatch(desk_functional):
    with pytest.raises(PeriodMismatchError):
        phi_values(desk_functional, np.zeros(5))


def test_penalized_needs_large_w3(desk_potential):
    with pytest.raises(FunctionalError):
        penalized(desk_potential, w3=1.9)


def test_claimed_gradient_is_off_by_a_sign(desk_potential, desk_functional, rng):
    u = PeriodicSequence(rng.normal(size=6))
    # literal gradient B u - f(u) against the claimed -B u + f(u)
    assert claimed_gradient_mismatch(desk_functional, u) == pytest.approx(2 * residual(u, desk_potential))
    assert claimed_gradient_mismatch(penalized(desk_potential), u) > 0


@pytest.mark.parametrize("kind", ["standard", "penalized"])
def test_constant_sequences_are_nonpositive(desk_potential, kind):
    f = FunctionalSpec(FunctionalKind.STANDARD, desk_potential) if kind == "standard" else penalized(desk_potential)
    constants = np.random.default_rng(3).uniform(-10, 10, 100)
    assert constant_sequence_check(f, constants) <= 0.0


def test_penalty_geometry_identities(desk_potential):
    rng = np.random.default_rng(11)
    for w3, w4 in zip(rng.uniform(2.05, 6.0, 10), rng.uniform(0.1, 2.0, 10)):
        f = penalized(desk_potential, w3=w3, reading=PenaltyReading.UNIT)
        geometry = build_penalty_geometry(f, w4)
        level = w3 * w4 ** 2
        assert phi_eval(f, geometry.e) == pytest.approx(level, abs=1e-10 * max(1, level))
        assert phi_eval(f, geometry.e1) == pytest.approx(level, abs=1e-10 * max(1, level))
        assert phi_eval(f, PeriodicSequence.zeros(6)) == 0.0
        assert geometry.e1.norm() == pytest.approx(np.sqrt(2 * w3) * w4, abs=1e-10)
        assert geometry.e.norm() == pytest.approx(np.sqrt(3 * w3) * w4, abs=1e-10)
        assert geometry.e1.norm() < geometry.r < geometry.e.norm()


def test_penalty_geometry_fails_under_weighted_reading(desk_potential):
    with pytest.raises(GeometryError):
        build_penalty_geometry(penalized(desk_potential, w3=2.5), 1.0)


def test_penalty_geometry_needs_penalized_kind(desk_functional):
    with pytest.raises(GeometryError):
        build_penalty_geometry(desk_functional, 1.0)


def test_coercivity_and_ps_bounds_on_desk(desk_functional, desk_a3):
    samples = random_ball_samples(6, 10_000, 10.0, np.random.default_rng(5))
    coercivity = coercivity_check(desk_functional, samples, desk_a3)
    assert coercivity.holds
    assert coercivity.samples == 10_000
    assert coercivity.constants["coefficient"] == 2.4
    ps = ps_bound_check(desk_functional, 10.0, samples, desk_a3)
    assert ps.holds
    assert ps.constants["printed_radius_sq"] < ps.constants["radius_sq"]


def test_bounds_for_weighted_penalty(desk_potential, desk_a3):
    f = penalized(desk_potential, w3=2.4)
    samples = random_ball_samples(6, 2000, 10.0, np.random.default_rng(6))
    assert coercivity_check(f, samples, desk_a3).holds
    assert ps_bound_check(f, 10.0, samples, desk_a3).holds


def test_unit_penalty_bound_is_vacuous(desk_potential, desk_a3):
    f = penalized(desk_potential, reading=PenaltyReading.UNIT)
    with pytest.raises(ConditionError):
        coercivity_check(f, np.zeros((1, 6)), desk_a3)


def test_bounds_need_a_holding_a3(desk_functional, desk_potential):
    a2 = check_condition(desk_potential, ConditionId.A2)
    with pytest.raises(ConditionError):
        coercivity_check(desk_functional, np.zeros((1, 6)), a2)


def test_ray_geometry_on_desk(desk_functional, desk_geometry):
    assert desk_geometry.params["t1"] == pytest.approx(0.5921, abs=1e-3)
    assert desk_geometry.params["t2"] == pytest.approx(1.4967, abs=1e-3)
    assert phi_eval(desk_functional, desk_geometry.e1) == pytest.approx(DESK_LEVEL, abs=1e-10)
    assert phi_eval(desk_functional, desk_geometry.e) == pytest.approx(DESK_LEVEL, abs=1e-10)
    assert desk_geometry.source == "ray"


def test_ray_profile_closed_form(desk_functional, desk_direction):
    t = np.linspace(0, 3, 7)
    assert_allclose(ray_profile(desk_functional, desk_direction, t), -4 * t ** 2 + 10 * (1 - np.cos(t)), atol=1e-12)


def test_ray_geometry_errors(desk_functional, desk_direction):
    with pytest.raises(GeometryError):
        find_ray_geometry(desk_functional, desk_direction, 1.0)
    with pytest.raises(GeometryError):
        find_ray_geometry(desk_functional, desk_direction, -0.5)


def test_analytic_saddle_geometry():
    f = FunctionalSpec(FunctionalKind.STANDARD, cosine_half_potential(a=3.0, K=1.0, period=6))
    direction = PeriodicSequence([1, -1, 0, 1, -1, 0])
    # phi(t d) = 12 (1 - cos t)
    geometry = find_ray_geometry(f, direction, 12.0)
    assert geometry.params["t1"] == pytest.approx(np.pi / 2, abs=1e-12)
    assert geometry.params["t2"] == pytest.approx(3 * np.pi / 2, abs=1e-12)


def test_c0_estimate_is_deterministic(desk_functional, desk_geometry):
    first = estimate_c0(desk_functional, desk_geometry.r, 3, seed=7)
    assert np.isfinite(first)
    assert first == estimate_c0(desk_functional, desk_geometry.r, 3, seed=7)
    with pytest.raises(FunctionalError):
        estimate_c0(desk_functional, 0.0, 3, seed=7)


def test_c0_estimate_does_not_increase_with_restarts(desk_functional, desk_geometry):
    # restart i draws from the i-th spawned child whatever the restart count
    one = estimate_c0(desk_functional, desk_geometry.r, 1, seed=7)
    many = estimate_c0(desk_functional, desk_geometry.r, 100, seed=7)
    assert many <= one


def test_c0_estimate_for_zero_potential():
    f = FunctionalSpec(FunctionalKind.STANDARD, custom_potential(zero_profile(), K=1.0, period=6))
    estimate = estimate_c0(f, 1.5, 5, seed=3)
    # constants attain min of 1/2 u^T B u on the sphere
    assert estimate >= -1e-12
    assert estimate == pytest.approx(0.0, abs=1e-6)
