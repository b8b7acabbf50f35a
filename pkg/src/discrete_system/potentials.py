"""
Potential families F(n, x) = a g(x) (rho(n) + K) with analytic derivatives,
and sampling-based checks of conditions (A1)-(A3), (W1), (W2).

Checks sample a grid; a verdict of "holds-on-sample" is not a proof.
"""

import logging
from typing import Dict, Optional

import numpy as np

from .config import (
    A2_PROBE_POINTS,
    DEFAULT_A3_W1,
    NONNEGATIVITY_TOL,
    ORIGIN_TOL,
    PERIODICITY_TOL,
)
from .errors import ConditionError
from .models import (
    ConditionGrid,
    ConditionId,
    ConditionReport,
    PotentialKind,
    PotentialSpec,
    ScalarProfile,
    Verdict,
    WeightFunction,
    WeightKind,
    lambda_max_of,
)

logger = logging.getLogger(__name__)


# g(x) = x^2/2 + cos x - 1
def cosine_half_profile() -> ScalarProfile:
    return ScalarProfile(
        name="cosine_half",
        g=lambda x: 0.5 * x ** 2 + np.cos(x) - 1.0,
        dg=lambda x: x - np.sin(x),
        d2g=lambda x: 1.0 - np.cos(x),
        even=True,
    )


# g(x) = mu x^2 + cos x - 1
def cosine_mu_profile(mu: float) -> ScalarProfile:
    return ScalarProfile(
        name="cosine_mu",
        g=lambda x: mu * x ** 2 + np.cos(x) - 1.0,
        dg=lambda x: 2.0 * mu * x - np.sin(x),
        d2g=lambda x: 2.0 * mu - np.cos(x),
        even=True,
        params={"mu": mu},
    )


def zero_profile() -> ScalarProfile:
    return ScalarProfile(
        name="zero",
        g=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        dg=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        d2g=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        even=True,
    )


# g(x) = c x^2
def quadratic_profile(coefficient: float) -> ScalarProfile:
    return ScalarProfile(
        name="quadratic",
        g=lambda x: coefficient * np.asarray(x, dtype=float) ** 2,
        dg=lambda x: 2.0 * coefficient * np.asarray(x, dtype=float),
        d2g=lambda x: np.full(np.shape(x), 2.0 * coefficient),
        even=True,
        params={"coefficient": coefficient},
    )


def make_weight(period: int, kind: str = "constant", amplitude: float = 0.0) -> WeightFunction:
    return WeightFunction(kind=WeightKind(kind), amplitude=float(amplitude), period=period)


def cosine_half_potential(a: float, K: float, period: int, weight: Optional[WeightFunction] = None) -> PotentialSpec:
    weight = weight or make_weight(period)
    return PotentialSpec(PotentialKind.COSINE_HALF, a=a, K=K, weight=weight, profile=cosine_half_profile())


def cosine_mu_potential(a: float, mu: float, K: float, period: int,
                       weight: Optional[WeightFunction] = None) -> PotentialSpec:
    weight = weight or make_weight(period)
    return PotentialSpec(PotentialKind.COSINE_MU, a=a, K=K, weight=weight, profile=cosine_mu_profile(mu), mu=mu)


# custom profiles are applied as F = a g(x) (rho + K); a = 1 gives g(x) (rho + K)
def custom_potential(profile: ScalarProfile, K: float, period: int, a: float = 1.0,
                     weight: Optional[WeightFunction] = None) -> PotentialSpec:
    weight = weight or make_weight(period)
    return PotentialSpec(PotentialKind.CUSTOM_PROFILE, a=a, K=K, weight=weight, profile=profile)


def _factor(p: PotentialSpec, n):
    return p.a * (p.weight.value(n) + p.K)


def potential_eval(p: PotentialSpec, n, x):
    return _factor(p, n) * p.profile.g(x)


def potential_grad(p: PotentialSpec, n, x):
    return _factor(p, n) * p.profile.dg(x)


def potential_hess(p: PotentialSpec, n, x):
    return _factor(p, n) * p.profile.d2g(x)


def is_autonomous(p: PotentialSpec) -> bool:
    return p.weight.is_constant


def is_even(p: PotentialSpec) -> bool:
    return p.profile.even


def _grid(grid: ConditionGrid, x_max: Optional[float] = None) -> np.ndarray:
    if grid.points < 2:
        raise ConditionError(f"sampling grid needs at least 2 points, got {grid.points}")
    x_max = grid.x_max if x_max is None else x_max
    return np.linspace(-x_max, x_max, grid.points)


def _witness(p: PotentialSpec, n: int, x: float, **extra) -> Dict[str, float]:
    witness = {"n": int(n), "x": float(x), "value": float(potential_eval(p, n, x))}
    witness.update({k: float(v) for k, v in extra.items()})
    return witness


def _check_nonnegative(p: PotentialSpec, grid: ConditionGrid):
    n = np.arange(1, p.period + 1)[:, None]
    x = _grid(grid)[None, :]
    values = potential_eval(p, n, x)
    i, j = np.unravel_index(np.argmin(values), values.shape)
    return float(values[i, j]), int(n[i, 0]), float(x[0, j])


def _check_w1(p: PotentialSpec, grid: ConditionGrid) -> ConditionReport:
    lowest, n, x = _check_nonnegative(p, grid)
    verdict = Verdict.HOLDS_ON_SAMPLE if lowest >= -NONNEGATIVITY_TOL else Verdict.FAILS
    return ConditionReport(ConditionId.W1, verdict, _witness(p, n, x),
                           constants={"min_F": lowest, "x_max": grid.x_max})


def _check_w2(p: PotentialSpec, grid: ConditionGrid) -> ConditionReport:
    n = np.arange(1, p.period + 1)
    at_origin = np.abs(potential_eval(p, n, np.zeros(p.period)))
    worst = int(np.argmax(at_origin))
    verdict = Verdict.HOLDS_ON_SAMPLE if at_origin[worst] <= ORIGIN_TOL else Verdict.FAILS
    return ConditionReport(ConditionId.W2, verdict, _witness(p, n[worst], 0.0),
                           constants={"max_abs_F0": float(at_origin[worst])})


# (A1): M-periodic in n, and F >= 0
def _check_a1(p: PotentialSpec, grid: ConditionGrid) -> ConditionReport:
    n = np.arange(1, p.period + 1)[:, None]
    x = _grid(grid)[None, :]
    drift = np.abs(potential_eval(p, n + p.period, x) - potential_eval(p, n, x))
    i, j = np.unravel_index(np.argmax(drift), drift.shape)
    lowest, n_low, x_low = _check_nonnegative(p, grid)

    constants = {"max_periodicity_drift": float(drift[i, j]), "min_F": lowest}
    if drift[i, j] > PERIODICITY_TOL:
        return ConditionReport(ConditionId.A1, Verdict.FAILS, _witness(p, n[i, 0], x[0, j], drift=drift[i, j]),
                               constants, note="F is not M-periodic in n")
    if lowest < -NONNEGATIVITY_TOL:
        return ConditionReport(ConditionId.A1, Verdict.FAILS, _witness(p, n_low, x_low), constants,
                               note="F takes negative values")
    return ConditionReport(ConditionId.A1, Verdict.HOLDS_ON_SAMPLE, _witness(p, n_low, x_low), constants)


# (A2): F(n, x) <= alpha x^2 on |x| <= delta with alpha < 1 - cos(2 pi / M)
def _check_a2(p: PotentialSpec, grid: ConditionGrid) -> ConditionReport:
    if grid.delta <= 0:
        raise ConditionError(f"(A2) neighbourhood must be positive, got delta = {grid.delta}")
    bound = 1.0 - float(np.cos(2.0 * np.pi / p.period))

    positive = np.linspace(grid.delta / grid.points, grid.delta, grid.points)
    probes = [t for t in A2_PROBE_POINTS if t <= grid.delta]
    xs = np.concatenate([positive, probes, -positive, [-t for t in probes]])
    n = np.arange(1, p.period + 1)[:, None]
    ratio = potential_eval(p, n, xs[None, :]) / xs[None, :] ** 2
    i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
    sup_ratio = float(ratio[i, j])

    # F/x^2 -> F''(n, 0)/2 as x -> 0
    taylor = float(np.max(0.5 * potential_hess(p, np.arange(1, p.period + 1), np.zeros(p.period))))
    probe_ratios = {f"ratio_at_{t:g}": float(np.max(potential_eval(p, n[:, 0], t) / t ** 2))
                    for t in probes}

    if grid.alpha is None:
        alpha = sup_ratio
        holds = sup_ratio < bound
    else:
        alpha = grid.alpha
        holds = sup_ratio <= alpha and 0.0 < alpha < bound
    constants = {"alpha": alpha, "delta": grid.delta, "sup_ratio": sup_ratio,
                 "taylor_limit": taylor, "bound": bound}
    constants.update(probe_ratios)
    verdict = Verdict.HOLDS_ON_SAMPLE if holds else Verdict.FAILS
    note = "" if holds else f"sup F/x^2 = {sup_ratio:.6g} is not below 1 - cos(2pi/M) = {bound:.6g}"
    return ConditionReport(ConditionId.A2, verdict, _witness(p, n[i, 0], xs[j], ratio=sup_ratio), constants, note)


def _default_w2(p: PotentialSpec, w1: float, grid: ConditionGrid) -> float:
    if p.kind in (PotentialKind.COSINE_HALF, PotentialKind.COSINE_MU):
        # cos x - 1 >= -2
        return float(2.0 * p.a * (p.K + p.weight.sup_abs))
    n = np.arange(1, p.period + 1)[:, None]
    x = _grid(grid)[None, :]
    return float(max(0.0, -np.min(potential_eval(p, n, x)))) + grid.margin


# (A3): F(n, x) >= w3 x^2 - w2 for |x| >= w1
def _check_a3(p: PotentialSpec, grid: ConditionGrid) -> ConditionReport:
    half_max = 0.5 * lambda_max_of(p.period)
    if grid.w3 is not None and grid.w3 <= half_max:
        raise ConditionError(
            f"(A3) requested with w3 = {grid.w3} <= lambda_max/2 = {half_max:.6g}; coercivity would fail")
    w1 = grid.w1 if grid.w1 is not None else DEFAULT_A3_W1
    if w1 <= 0 or w1 >= grid.x_max:
        raise ConditionError(f"(A3) needs 0 < w1 < x_max, got w1 = {w1}")
    w2 = grid.w2 if grid.w2 is not None else _default_w2(p, w1, grid)

    magnitudes = np.linspace(w1, grid.x_max, grid.points)
    xs = np.concatenate([magnitudes, -magnitudes])
    n = np.arange(1, p.period + 1)[:, None]
    values = potential_eval(p, n, xs[None, :])

    if grid.w3 is None:
        fitted = (values + w2) / xs[None, :] ** 2
        i, j = np.unravel_index(np.argmin(fitted), fitted.shape)
        w3 = float(fitted[i, j]) - grid.margin
        constants = {"w1": w1, "w2": w2, "w3": w3}
        if w3 <= half_max:
            return ConditionReport(ConditionId.A3, Verdict.FAILS, _witness(p, n[i, 0], xs[j]), constants,
                                   note=f"fitted w3 = {w3:.6g} does not exceed lambda_max/2 = {half_max:.6g}")
        return ConditionReport(ConditionId.A3, Verdict.HOLDS_ON_SAMPLE, _witness(p, n[i, 0], xs[j]), constants,
                               note="w3 fitted from the sample")

    slack = values - (grid.w3 * xs[None, :] ** 2 - w2)
    i, j = np.unravel_index(np.argmin(slack), slack.shape)
    constants = {"w1": w1, "w2": w2, "w3": float(grid.w3), "min_slack": float(slack[i, j])}
    verdict = Verdict.HOLDS_ON_SAMPLE if slack[i, j] >= -NONNEGATIVITY_TOL else Verdict.FAILS
    return ConditionReport(ConditionId.A3, verdict, _witness(p, n[i, 0], xs[j], slack=slack[i, j]), constants)


_CHECKS = {
    ConditionId.A1: _check_a1,
    ConditionId.A2: _check_a2,
    ConditionId.A3: _check_a3,
    ConditionId.W1: _check_w1,
    ConditionId.W2: _check_w2,
}


def check_condition(p: PotentialSpec, condition: ConditionId, grid: Optional[ConditionGrid] = None) -> ConditionReport:
    grid = grid or ConditionGrid()
    report = _CHECKS[ConditionId(condition)](p, grid)
    logger.info("condition %s: %s", report.condition.value, report.verdict.value)
    return report


def check_all_conditions(p: PotentialSpec, grid: Optional[ConditionGrid] = None) -> Dict[str, ConditionReport]:
    return {c.value: check_condition(p, c, grid) for c in ConditionId}
