"""
Periodic Solution Oracle

Independent ground truth for Delta^2 u_{n-1} + f(n, u_n) = 0 on E_M, where
f(n, x) = dF/dx(n, x).

Key Points:
- residual: max-norm of -B u + f(n, u_n)
- newton_refine: damped Newton on the residual map with the analytic Jacobian
  -B + diag(d2F/dx2), backtracking on the euclidean residual norm
- multistart: Newton from structured starts (B eigenvector modes at several
  amplitudes, both signs) followed by seeded random starts in a box; converged
  points are deduplicated by orbit under the symmetries of the system
- ray_critical_scan: on a B-eigenvector ray with entries in {0, +-1} and an odd
  nonlinearity the system collapses to lambda t = a (rho + K) g'(t), solved by
  sign-change bracketing and Brent's method
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from src.discrete_system.config import (
    CONDITION_LIMIT,
    DEDUP_TOL,
    DEFAULT_BOX,
    DEFAULT_STARTS,
    EIGENVECTOR_TOL,
    NEWTON_MAX_ITER,
    NEWTON_TOL,
    RAY_ROOT_POINTS,
    RAY_T_MAX,
    STRUCTURED_AMPLITUDES,
)
from src.discrete_system.core import apply_b, apply_action, b_eigenvectors, dihedral_actions
from src.discrete_system.errors import DivergenceError, OracleError, SingularJacobianError
from src.discrete_system.functional import phi_values
from src.discrete_system.models import FunctionalKind, FunctionalSpec, PeriodicSequence, PotentialSpec
from src.discrete_system.potentials import is_autonomous, is_even, potential_grad, potential_hess

logger = logging.getLogger(__name__)

MIN_DAMPING = 2.0 ** -20


@dataclass
class NewtonResult:
    u: PeriodicSequence
    residual: float
    iterations: int
    converged: bool
    history: List[float]            # max-norm residual per iterate, starting point first
    condition: float = 1.0          # condition number of the last Jacobian used

    def to_dict(self) -> Dict:
        return {
            "u": self.u.to_list(),
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "history": list(self.history),
            "condition": self.condition,
        }


@dataclass
class OracleSettings:
    box: float = DEFAULT_BOX
    starts: int = DEFAULT_STARTS
    tol: float = 1e-10
    dedup_tol: float = DEDUP_TOL
    max_iter: int = NEWTON_MAX_ITER


@dataclass
class CatalogEntry:
    u: PeriodicSequence
    residual: float
    phi: float                      # standard functional at u
    classification: str             # trivial-zero, constant or nontrivial

    def to_dict(self) -> Dict:
        return {
            "u": self.u.to_list(),
            "residual": self.residual,
            "phi": self.phi,
            "classification": self.classification,
        }


@dataclass
class SolutionCatalog:
    period: int
    potential: Dict
    entries: List[CatalogEntry]
    tol: float
    dedup_tol: float
    seed: int
    starts: int = 0
    converged: int = 0
    dropped: int = 0

    def by_class(self, classification: str) -> List[CatalogEntry]:
        return [e for e in self.entries if e.classification == classification]

    def to_dict(self) -> Dict:
        return {
            "period": self.period,
            "potential": dict(self.potential),
            "tol": self.tol,
            "dedup_tol": self.dedup_tol,
            "seed": self.seed,
            "starts": self.starts,
            "converged": self.converged,
            "dropped": self.dropped,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for i, entry in enumerate(self.entries):
            row = {"entry": i, "classification": entry.classification,
                   "residual": entry.residual, "phi": entry.phi}
            row.update({f"u{k + 1}": value for k, value in enumerate(entry.u.values)})
            rows.append(row)
        return pd.DataFrame(rows)


def _indices(p: PotentialSpec) -> np.ndarray:
    return np.arange(1, p.period + 1)


def _residual_vector(values: np.ndarray, p: PotentialSpec) -> np.ndarray:
    return -apply_b(values) + potential_grad(p, _indices(p), values)


def _jacobian(values: np.ndarray, p: PotentialSpec) -> np.ndarray:
    M = p.period
    J = -2.0 * np.eye(M) + np.eye(M, k=1) + np.eye(M, k=-1)
    J[0, M - 1] += 1.0
    J[M - 1, 0] += 1.0
    return J + np.diag(potential_hess(p, _indices(p), values))


def residual(u: PeriodicSequence, p: PotentialSpec) -> float:
    u.require_period(p.period)
    return float(np.max(np.abs(_residual_vector(u.values, p))))


def newton_refine(u0: PeriodicSequence, p: PotentialSpec, tol: float = NEWTON_TOL,
                  max_iter: int = NEWTON_MAX_ITER, singular: str = "raise") -> NewtonResult:
    """
    Damped Newton polishing of an approximate solution.

    Args:
        u0: Starting sequence
        p: Potential defining the system
        tol: Target max-norm residual
        max_iter: Newton step budget
        singular: "raise" to stop at an ill-conditioned Jacobian, "lstsq" to take
            the least-squares step instead

    Returns:
        NewtonResult; converged is False when the budget runs out first

    Raises:
        SingularJacobianError: Jacobian condition number above the limit (singular="raise")
        DivergenceError: no damping factor decreases the residual, or the iterate blows up
    """
    u0.require_period(p.period)
    if singular not in ("raise", "lstsq"):
        raise OracleError(f"unknown singular-Jacobian policy {singular!r}")

    u = np.array(u0.values, dtype=float)
    R = _residual_vector(u, p)
    history = [float(np.max(np.abs(R)))]
    condition = 1.0
    iterations = 0

    while history[-1] > tol and iterations < max_iter:
        J = _jacobian(u, p)
        condition = float(np.linalg.cond(J))
        if not condition <= CONDITION_LIMIT:
            if singular == "raise":
                raise SingularJacobianError(
                    f"singular Jacobian at iterate {iterations}: condition number {condition:.3e}", condition)
            step = np.linalg.lstsq(J, -R, rcond=None)[0]
        else:
            step = np.linalg.solve(J, -R)

        # Backtrack on the euclidean residual norm
        current = np.linalg.norm(R)
        alpha = 1.0
        while alpha >= MIN_DAMPING:
            trial = u + alpha * step
            trial_R = _residual_vector(trial, p)
            if np.all(np.isfinite(trial_R)) and np.linalg.norm(trial_R) < current:
                break
            alpha *= 0.5
        else:
            raise DivergenceError(
                f"damped Newton stalled at residual {history[-1]:.3e} after {iterations} iterations")

        u, R = trial, trial_R
        iterations += 1
        history.append(float(np.max(np.abs(R))))
        logger.debug("newton iteration %d: residual %.3e, damping %.3g", iterations, history[-1], alpha)

    return NewtonResult(PeriodicSequence(u), history[-1], iterations, history[-1] <= tol, history, condition)


def _orbit_actions(p: PotentialSpec) -> List[Tuple[np.ndarray, float]]:
    return dihedral_actions(p.period, shifts=is_autonomous(p), reflections=False, sign=is_even(p))


# distance from v to the nearest image of u under cyclic shift and sign flip
def orbit_distance(p: PotentialSpec, u: PeriodicSequence, v: PeriodicSequence) -> float:
    images = np.stack([apply_action(action, u.values) for action in _orbit_actions(p)])
    return float(np.min(np.linalg.norm(images - v.values, axis=1)))


def classify(u: PeriodicSequence, tol: float = DEDUP_TOL) -> str:
    if np.max(np.abs(u.values)) <= tol:
        return "trivial-zero"
    if np.ptp(u.values) <= tol:
        return "constant"
    return "nontrivial"


def structured_starts(period: int) -> List[np.ndarray]:
    starts = []
    for _, mode in b_eigenvectors(period):
        for amplitude in STRUCTURED_AMPLITUDES:
            for sign in (1.0, -1.0):
                starts.append(sign * amplitude * mode.values)
    return starts


def multistart(p: PotentialSpec, settings: Optional[OracleSettings] = None, seed: int = 0) -> SolutionCatalog:
    """
    Catalog the solutions reachable by Newton from structured and random starts.

    Starts that fail to converge, stall or blow up are dropped and counted.
    Admission runs in start order, so the catalog is a deterministic function of the seed.
    """
    settings = settings or OracleSettings()
    rng = np.random.default_rng(seed)
    starts = structured_starts(p.period)
    starts.extend(rng.uniform(-settings.box, settings.box, size=(settings.starts, p.period)))
    standard = FunctionalSpec(FunctionalKind.STANDARD, p)
    actions = _orbit_actions(p)

    entries: List[CatalogEntry] = []
    images: List[np.ndarray] = []
    converged = dropped = 0
    logger.info("running Newton from %d starts (M=%d, box=%.3g)", len(starts), p.period, settings.box)
    for start in starts:
        try:
            result = newton_refine(PeriodicSequence(start), p, settings.tol, settings.max_iter, singular="lstsq")
        except OracleError as exc:
            logger.debug("start dropped: %s", exc)
            dropped += 1
            continue
        if not result.converged:
            dropped += 1
            continue
        converged += 1
        u = result.u.values
        if any(np.min(np.linalg.norm(orbit - u, axis=1)) <= settings.dedup_tol for orbit in images):
            continue
        images.append(np.stack([apply_action(action, u) for action in actions]))
        entries.append(CatalogEntry(result.u, result.residual, float(phi_values(standard, u)),
                                    classify(result.u, settings.dedup_tol)))

    logger.info("catalog: %d distinct solutions from %d converged starts, %d dropped",
                len(entries), converged, dropped)
    return SolutionCatalog(period=p.period, potential=p.to_dict(), entries=entries, tol=settings.tol,
                           dedup_tol=settings.dedup_tol, seed=seed, starts=len(starts),
                           converged=converged, dropped=dropped)


def ray_eigenvalue(direction: PeriodicSequence) -> float:
    d = direction.values
    if not np.dot(d, d) > 0:
        raise OracleError("ray direction must be nonzero")
    eigenvalue = float(np.dot(d, apply_b(d)) / np.dot(d, d))
    gap = float(np.linalg.norm(apply_b(d) - eigenvalue * d))
    if gap > EIGENVECTOR_TOL:
        raise OracleError(f"direction is not an eigenvector of B: |B d - lambda d| = {gap:.3e}")
    return eigenvalue


def ray_critical_scan(p: PotentialSpec, direction: PeriodicSequence, t_max: float = RAY_T_MAX,
                      points: int = RAY_ROOT_POINTS) -> List[float]:
    """
    Critical amplitudes t >= 0 of the system restricted to the ray t * direction.

    Args:
        p: Autonomous potential with an odd derivative
        direction: B eigenvector with entries in {0, +-1}
        t_max: Right end of the scanned range [0, t_max]
        points: Scan grid size

    Returns:
        Sorted roots of lambda t = a (rho + K) g'(t), 0 included
    """
    direction.require_period(p.period)
    if not np.all(np.isin(direction.values, (-1.0, 0.0, 1.0))):
        raise OracleError("ray direction must have entries in {0, +1, -1}")
    if not is_autonomous(p):
        raise OracleError("ray reduction needs a constant weight")
    if not is_even(p):
        raise OracleError("ray reduction needs an odd nonlinearity")
    eigenvalue = ray_eigenvalue(direction)
    factor = p.a * (float(p.weight.value(1)) + p.K)

    def h(t):
        return eigenvalue * t - factor * p.profile.dg(t)

    t = np.linspace(0.0, t_max, points)
    values = h(t)
    roots = [float(x) for x in t[values == 0.0]]
    for i in np.flatnonzero(values[:-1] * values[1:] < 0):
        roots.append(float(optimize.brentq(h, t[i], t[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)))
    roots = sorted(roots)
    logger.info("ray scan (lambda=%.6g): roots %s", eigenvalue, ["%.10f" % r for r in roots])
    return roots


def embed_ray(direction: PeriodicSequence, t: float) -> PeriodicSequence:
    return t * direction


def catalog_match(catalog: SolutionCatalog, u: PeriodicSequence, p: PotentialSpec,
                  tol: float = DEDUP_TOL) -> Tuple[int, float, bool]:
    """Nearest catalog entry to u up to symmetry: (entry index, distance, distance <= tol)."""
    if not catalog.entries:
        raise OracleError("cannot match against an empty catalog")
    distances = [orbit_distance(p, entry.u, u) for entry in catalog.entries]
    best = int(np.argmin(distances))
    return best, distances[best], distances[best] <= tol
