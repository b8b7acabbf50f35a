"""
Action functionals on E_M and the geometry around them.

Two kinds are supported:

- standard: phi(u) = 1/2 sum (Delta u_s)^2 - sum_s F(s, u_s), whose critical
  points are exactly the M-periodic solutions of
  Delta^2 u_{n-1} + f(n, u_n) = 0;
- penalized: phi(u) = 1/2 sum (Delta u_s)^2 - F(n*, u_{n*}) - g sum_{s != n*} u_s^2
  with a distinguished index n* and penalty weight g (w3, or 1 under the
  unit reading).

Array helpers (`phi_values`, `phi_gradients`) evaluate many points at once
along the last axis and are what the solvers call in their inner loops.
"""

import logging
from typing import Dict, Tuple

import numpy as np
from scipy import optimize

from .config import (
    BOUND_TOL,
    C0_MAX_ITER,
    GEOMETRY_TOL,
    ORIGIN_TOL,
    RAY_SCAN_POINTS,
    RAY_T_MAX,
    W_SCAN_POINTS,
)
from .core import apply_b, lambda_max
from .errors import ConditionError, FunctionalError, GeometryError, PeriodMismatchError
from .models import (
    BoundReport,
    ConditionId,
    ConditionReport,
    FunctionalKind,
    FunctionalSpec,
    MountainGeometry,
    PeriodicSequence,
)
from .potentials import potential_eval, potential_grad

logger = logging.getLogger(__name__)


def _indices(f: FunctionalSpec) -> np.ndarray:
    return np.arange(1, f.period + 1)


def _check(f: FunctionalSpec, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != f.period:
        raise PeriodMismatchError(f"expected sequences of period {f.period}, got {values.shape[-1]}")
    return values


def phi_values(f: FunctionalSpec, points) -> np.ndarray:
    U = _check(f, points)
    diff = np.roll(U, -1, axis=-1) - U
    quadratic = 0.5 * np.sum(diff * diff, axis=-1)
    if f.kind == FunctionalKind.STANDARD:
        return quadratic - np.sum(potential_eval(f.potential, _indices(f), U), axis=-1)

    star = f.n_star - 1
    others = np.ones(f.period, dtype=bool)
    others[star] = False
    penalty = f.penalty_weight * np.sum(U[..., others] ** 2, axis=-1)
    return quadratic - potential_eval(f.potential, f.n_star, U[..., star]) - penalty


def phi_gradients(f: FunctionalSpec, points) -> np.ndarray:
    U = _check(f, points)
    BU = apply_b(U)
    if f.kind == FunctionalKind.STANDARD:
        return BU - potential_grad(f.potential, _indices(f), U)

    star = f.n_star - 1
    grad = BU - 2.0 * f.penalty_weight * U
    grad[..., star] = BU[..., star] - potential_grad(f.potential, f.n_star, U[..., star])
    return grad


def phi_eval(f: FunctionalSpec, u: PeriodicSequence) -> float:
    return float(phi_values(f, u.values))


def phi_grad(f: FunctionalSpec, u: PeriodicSequence) -> PeriodicSequence:
    return PeriodicSequence(phi_gradients(f, u.values))


# literal gradient vs the gradient Delta^2 u_{n-1} + f(n, u_n) claimed for every n
def claimed_gradient_mismatch(f: FunctionalSpec, u: PeriodicSequence) -> float:
    literal = phi_gradients(f, u.values)
    claimed = -apply_b(u.values) + potential_grad(f.potential, _indices(f), u.values)
    return float(np.max(np.abs(literal - claimed)))


# max phi over constant sequences; <= 0 whenever F >= 0 and F(n, 0) = 0
def constant_sequence_check(f: FunctionalSpec, constants) -> float:
    constants = np.asarray(constants, dtype=float)
    points = np.repeat(constants[:, None], f.period, axis=1)
    return float(np.max(phi_values(f, points)))


def _a3_constants(a3: ConditionReport) -> Tuple[float, float, float]:
    if a3.condition != ConditionId.A3:
        raise ConditionError(f"expected an (A3) report, got {a3.condition.value}")
    if not a3.holds:
        raise ConditionError("(A3) constants are not certified on the sample")
    return a3.constants["w1"], a3.constants["w2"], a3.constants["w3"]


# w = max |F(n, x) - w3 x^2 + w2| over n in 1..M, |x| <= w1
def sup_deviation(f: FunctionalSpec, w1: float, w2: float, w3: float, points: int = W_SCAN_POINTS) -> float:
    x = np.linspace(-w1, w1, points)[None, :]
    n = _indices(f)[:, None]
    return float(np.max(np.abs(potential_eval(f.potential, n, x) - w3 * x ** 2 + w2)))


# leading coefficient and constant of the upper bound phi(u) <= (lambda_max/2 - c)|u|^2 + C
def _upper_bound_terms(f: FunctionalSpec, a3: ConditionReport, points: int) -> Dict[str, float]:
    w1, w2, w3 = _a3_constants(a3)
    w = sup_deviation(f, w1, w2, w3, points)
    w_prime = w + w2
    if f.kind == FunctionalKind.STANDARD:
        coefficient, constant = w3, f.period * w_prime
    else:
        coefficient, constant = min(w3, f.penalty_weight), w_prime
    half_max = 0.5 * lambda_max(f.period)
    if coefficient <= half_max:
        raise ConditionError(
            f"bound is vacuous: effective w3 = {coefficient:.6g} does not exceed lambda_max/2 = {half_max:.6g}")
    return {"w1": w1, "w2": w2, "w3": w3, "w": w, "w_prime": w_prime,
            "coefficient": coefficient, "constant": constant, "half_lambda_max": half_max}


def coercivity_check(f: FunctionalSpec, samples, a3: ConditionReport, points: int = W_SCAN_POINTS) -> BoundReport:
    terms = _upper_bound_terms(f, a3, points)
    U = _check(f, np.atleast_2d(samples))
    values = phi_values(f, U)
    bound = (terms["half_lambda_max"] - terms["coefficient"]) * np.sum(U * U, axis=-1) + terms["constant"]
    slack = bound - values
    violations = int(np.sum(slack < -BOUND_TOL * (1.0 + np.abs(values))))
    logger.info("coercivity sweep: %d samples, %d violations", len(U), violations)
    return BoundReport("coercivity", len(U), violations, float(slack.min()), float(slack.max()), terms)


def ps_bound_check(f: FunctionalSpec, m1: float, samples, a3: ConditionReport,
                   points: int = W_SCAN_POINTS) -> BoundReport:
    terms = _upper_bound_terms(f, a3, points)
    U = _check(f, np.atleast_2d(samples))
    values = phi_values(f, U)
    gap = terms["coefficient"] - terms["half_lambda_max"]
    radius_sq = (terms["constant"] + m1) / gap
    printed_radius_sq = (terms["w2"] + m1) / gap

    active = values >= -m1
    norms_sq = np.sum(U * U, axis=-1)
    slack = (radius_sq - norms_sq)[active]
    violations = int(np.sum(slack < -BOUND_TOL * (1.0 + radius_sq)))
    printed_violations = int(np.sum(norms_sq[active] > printed_radius_sq))

    terms.update({"m1": m1, "radius_sq": radius_sq, "printed_radius_sq": printed_radius_sq})
    notes = [f"{int(active.sum())} of {len(U)} samples have phi >= -M1"]
    if printed_radius_sq != radius_sq:
        notes.append(f"bound uses the full constant {terms['constant']:.6g} in place of w2 = {terms['w2']:.6g}; "
                     f"the w2 version is violated by {printed_violations} samples")
    if not active.any():
        slack = np.array([np.inf])
    logger.info("P.S. bound sweep: %d active samples, %d violations", int(active.sum()), violations)
    return BoundReport("ps_bound", len(U), violations, float(slack.min()), float(slack.max()), terms, notes)


def build_penalty_geometry(f: FunctionalSpec, w4: float) -> MountainGeometry:
    if f.kind != FunctionalKind.PENALIZED:
        raise GeometryError("the penalty geometry needs a penalized functional")
    if f.period < 6:
        raise GeometryError(f"the penalty geometry needs M >= 6, got M = {f.period}")
    if not w4 > 0:
        raise GeometryError(f"w4 must be positive, got {w4}")
    at_origin = np.abs(potential_eval(f.potential, _indices(f), np.zeros(f.period)))
    if np.max(at_origin) > ORIGIN_TOL:
        raise GeometryError(f"(W2) violated: max |F(n, 0)| = {np.max(at_origin):.3e}")

    s = np.sqrt(f.w3) * w4
    star = f.n_star - 1
    e = np.zeros(f.period)
    e1 = np.zeros(f.period)
    e[(star + 1) % f.period] = s
    e[(star - 1) % f.period] = s
    e[(star + 2) % f.period] = -s
    e1[(star + 1) % f.period] = s
    e1[(star + 2) % f.period] = -s

    level = f.w3 * w4 ** 2
    phi_e, phi_e1 = phi_values(f, np.stack([e, e1]))
    tol = GEOMETRY_TOL * max(1.0, level)
    if abs(phi_e - level) > tol or abs(phi_e1 - level) > tol:
        raise GeometryError(
            f"phi(e) = {phi_e:.12g}, phi(e1) = {phi_e1:.12g} differ from w3 w4^2 = {level:.12g} "
            f"under the {f.penalty.value} penalty reading")

    r = float(np.sqrt(np.linalg.norm(e1) * np.linalg.norm(e)))
    return MountainGeometry(e=PeriodicSequence(e), e1=PeriodicSequence(e1), r=r, level=level,
                            source="penalty", w4=w4, params={"w3": float(f.w3), "n_star": f.n_star})


def ray_profile(f: FunctionalSpec, direction: PeriodicSequence, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return phi_values(f, t[..., None] * direction.values)


def find_ray_geometry(f: FunctionalSpec, direction: PeriodicSequence, level: float,
                      t_max: float = RAY_T_MAX, points: int = RAY_SCAN_POINTS) -> MountainGeometry:
    direction.require_period(f.period)
    if direction.norm() == 0:
        raise GeometryError("ray direction must be nonzero")
    if not phi_eval(f, PeriodicSequence.zeros(f.period)) < level:
        raise GeometryError(f"level {level} must exceed phi(0)")

    t = np.linspace(0.0, t_max, points + 1)
    above = ray_profile(f, direction, t) > level
    if not above.any():
        raise GeometryError(f"no mountain on this ray: profile stays below {level} on (0, {t_max}]")
    rise = int(np.argmax(above))
    falls = np.flatnonzero(~above[rise:])
    if falls.size == 0:
        raise GeometryError(f"bisection bracket not found: profile stays above {level} up to t = {t_max}")
    fall = rise + int(falls[0])

    def g(s):
        return float(ray_profile(f, direction, s)) - level

    t1 = optimize.brentq(g, t[rise - 1], t[rise], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    t2 = optimize.brentq(g, t[fall - 1], t[fall], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    e1 = t1 * direction
    e = t2 * direction
    r = float(np.sqrt(e1.norm() * e.norm()))
    logger.info("ray geometry at level %.6g: t1=%.10f, t2=%.10f", level, t1, t2)
    return MountainGeometry(e=e, e1=e1, r=r, level=float(level), source="ray",
                            params={"t1": float(t1), "t2": float(t2)})


# best phi on the sphere |u| = r from BFGS restarts; an upper bound on the infimum
def estimate_c0(f: FunctionalSpec, r: float, restarts: int, seed: int) -> float:
    if not r > 0:
        raise FunctionalError(f"sphere radius must be positive, got {r}")
    if restarts < 1:
        raise FunctionalError(f"need at least one restart, got {restarts}")

    def on_sphere(x):
        return r * x / np.linalg.norm(x)

    def objective(x):
        return float(phi_values(f, on_sphere(x)))

    best = np.inf
    for child in np.random.SeedSequence(seed).spawn(restarts):
        x0 = np.random.default_rng(child).standard_normal(f.period)
        result = optimize.minimize(objective, x0, method="BFGS", options={"maxiter": C0_MAX_ITER})
        best = min(best, float(result.fun), objective(x0))
    logger.info("c0 estimate on |u| = %.6g over %d restarts: %.10g", r, restarts, best)
    return best
