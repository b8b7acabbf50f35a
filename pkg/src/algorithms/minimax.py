"""
Constrained Mountain-Pass Search

Relaxes discretized paths that start at 0, pass through e1 at the middle knot and
end at e, and reads off the minimax value c_hat = inf over paths of max phi along
the path together with a near-critical point u_hat at the top of the best path.

Key Points:
- Knots 0, N/2 and N are pinned bitwise; the others move along -grad(phi) with
  the component tangent to the path removed, under an Armijo line search
- Each half of the path is reparametrized by arc length after every step
- An ensemble of seeded, transversally perturbed paths is relaxed; every member
  keeps its best-so-far path, so the running c_hat never increases within a pass
- The refined pass samples the coarse polyline at twice the knots, so its first
  value can sit above the coarse c_hat; the report keeps both passes in history
- Isotropy mode restricts perturbations and descent to the fixed subspace of
  the symmetries of phi that fix e1 and e; critical points found there are
  critical points of phi
- The reported certificates are c_hat - 2 eps <= phi(u_hat) <= c_hat + 2 eps
  and |grad(phi)(u_hat)| < 2 eps
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.discrete_system.config import (
    ARMIJO,
    CASE_TOL,
    CERTIFICATE_TOL,
    DEFAULT_ENSEMBLE,
    DEFAULT_KNOTS,
    DEFAULT_MAX_DISPLACEMENT,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_PERTURBATION,
    DEFAULT_STEP,
    GEOMETRY_TOL,
    GRADIENT_FLOOR,
    MAX_BACKTRACKS,
    MINIMAX_DISPLACEMENT_TOL,
    MINIMAX_VALUE_TOL,
)
from src.discrete_system.core import action_matrix, apply_action, dihedral_actions
from src.discrete_system.errors import CertificateError, GeometryError, PathError
from src.discrete_system.functional import phi_eval, phi_grad, phi_gradients, phi_values
from src.discrete_system.models import FunctionalSpec, MountainGeometry, PeriodicSequence

logger = logging.getLogger(__name__)


@dataclass
class DiscretePath:
    knots: np.ndarray       # (N + 1, M); knot 0 = 0, knot N/2 = e1, knot N = e

    @property
    def n_segments(self) -> int:
        return len(self.knots) - 1

    @property
    def pinned(self) -> Tuple[int, int, int]:
        return 0, self.n_segments // 2, self.n_segments

    def spacing(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.knots, axis=0), axis=1)

    def to_frame(self, f: FunctionalSpec) -> pd.DataFrame:
        frame = pd.DataFrame(self.knots, columns=[f"u{i + 1}" for i in range(self.knots.shape[1])])
        frame.insert(0, "knot", np.arange(len(self.knots)))
        frame["phi"] = phi_values(f, self.knots)
        return frame


@dataclass
class StepPolicy:
    step: float = DEFAULT_STEP
    max_displacement: float = DEFAULT_MAX_DISPLACEMENT
    backtracks: int = MAX_BACKTRACKS
    armijo: float = ARMIJO
    gradient_floor: float = GRADIENT_FLOOR


@dataclass
class RelaxResult:
    path: DiscretePath
    stalled: bool
    max_before: float
    max_after: float
    moved: int = 0


@dataclass
class SolverSettings:
    knots: int = DEFAULT_KNOTS
    ensemble: int = DEFAULT_ENSEMBLE
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    value_tol: float = MINIMAX_VALUE_TOL
    displacement_tol: float = MINIMAX_DISPLACEMENT_TOL
    symmetry: str = "isotropy"
    perturbation: float = DEFAULT_PERTURBATION
    refine: bool = True
    policy: StepPolicy = field(default_factory=StepPolicy)


@dataclass
class CertificateRecord:
    c_hat: float
    eps: float
    phi_u_hat: float
    grad_norm: float
    certificate_i: bool       # c_hat - 2 eps <= phi(u_hat) <= c_hat + 2 eps
    certificate_ii: bool      # |grad(phi)(u_hat)| < 2 eps

    @property
    def passed(self) -> bool:
        return self.certificate_i and self.certificate_ii

    def to_dict(self) -> Dict:
        return {
            "c_hat": self.c_hat,
            "eps": self.eps,
            "phi_u_hat": self.phi_u_hat,
            "grad_norm": self.grad_norm,
            "certificate_i": self.certificate_i,
            "certificate_ii": self.certificate_ii,
        }


@dataclass
class MemberRun:
    index: int
    best_value: float
    best_path: DiscretePath
    coarse_value: float
    iterations: int
    stalled: bool
    history: List[float]      # coarse pass, then the refined pass
    refine_start: int         # index of the first refined-pass entry; len(history) without refinement


@dataclass
class MinimaxReport:
    c_hat: float
    u_hat: PeriodicSequence
    grad_norm: float
    phi_u_hat: float
    iterations: int
    eps: float
    certificate_i: bool
    certificate_ii: bool
    c1: float                 # max(phi(0), phi(e))
    e1_level: float           # phi(e1)
    case: str                 # case_1: phi(e1) < c_hat; case_2: c_hat = phi(e1)
    knots: int
    symmetry: str
    fixed_dimension: int
    seed: int
    best_member: int
    member_values: List[float]
    coarse_c_hat: float
    history: List[float]
    refine_start: int
    stalled: List[bool]
    best_path: DiscretePath = field(repr=False)

    @property
    def certified(self) -> bool:
        return self.certificate_i and self.certificate_ii

    def to_dict(self) -> Dict:
        return {
            "c_hat": self.c_hat,
            "u_hat": self.u_hat.to_list(),
            "grad_norm": self.grad_norm,
            "phi_u_hat": self.phi_u_hat,
            "iterations": self.iterations,
            "eps": self.eps,
            "certificate_i": self.certificate_i,
            "certificate_ii": self.certificate_ii,
            "c1": self.c1,
            "e1_level": self.e1_level,
            "case": self.case,
            "knots": self.knots,
            "symmetry": self.symmetry,
            "fixed_dimension": self.fixed_dimension,
            "seed": self.seed,
            "best_member": self.best_member,
            "member_values": list(self.member_values),
            "coarse_c_hat": self.coarse_c_hat,
            "history": list(self.history),
            "refine_start": self.refine_start,
            "stalled": list(self.stalled),
        }


def init_path(geometry: MountainGeometry, n: int) -> DiscretePath:
    """
    Piecewise-linear seed path 0 -> e1 -> e with e1 at knot N/2.

    Args:
        geometry: Mountain geometry providing e1 and e
        n: Number of segments N (even, at least 8)

    Returns:
        DiscretePath with N + 1 knots
    """
    if n % 2 or n < 8:
        raise PathError(f"knot count N must be even and >= 8, got {n}")
    e1, e = geometry.e1.values, geometry.e.values
    if np.allclose(e1, e, rtol=0.0, atol=0.0):
        raise PathError("degenerate geometry: e1 = e")
    half = n // 2
    s = np.linspace(0.0, 1.0, half + 1)[:, None]
    knots = np.vstack([s * e1, e1 + s[1:] * (e - e1)])
    knots[0] = 0.0
    knots[half] = e1
    knots[n] = e
    return DiscretePath(knots)


# knot index and value of the largest phi along the path; ties go to the lowest index
def path_max(path: DiscretePath, f: FunctionalSpec) -> Tuple[int, float]:
    values = phi_values(f, path.knots)
    index = int(np.argmax(values))
    return index, float(values[index])


def _tangents(knots: np.ndarray) -> np.ndarray:
    tangents = np.zeros_like(knots)
    tangents[1:-1] = knots[2:] - knots[:-2]
    norms = np.linalg.norm(tangents, axis=1)
    nonzero = norms > 0
    tangents[nonzero] /= norms[nonzero, None]
    return tangents


def reparametrize(knots: np.ndarray) -> np.ndarray:
    """Equal arc-length spacing on each half, pinned knots untouched."""
    knots = np.array(knots, dtype=float)
    n = len(knots) - 1
    for a, b in ((0, n // 2), (n // 2, n)):
        segment = knots[a:b + 1]
        arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(segment, axis=0), axis=1))])
        if arc[-1] == 0.0:
            continue
        targets = np.linspace(0.0, arc[-1], b - a + 1)[1:-1]
        inner = np.column_stack([np.interp(targets, arc, segment[:, j]) for j in range(segment.shape[1])])
        knots[a + 1:b] = inner
    return knots


def relax_step(path: DiscretePath, f: FunctionalSpec, policy: Optional[StepPolicy] = None,
               projector: Optional[np.ndarray] = None) -> RelaxResult:
    """
    One string-method step: move unpinned knots downhill, then reparametrize.

    Args:
        path: Current path
        f: Functional to descend
        policy: Line-search parameters
        projector: Optional orthogonal projector applied to the gradients

    Returns:
        RelaxResult; stalled=True with the input path when no knot can move
    """
    policy = policy or StepPolicy()
    X = path.knots
    values = phi_values(f, X)
    before = float(values.max())

    grads = phi_gradients(f, X)
    if projector is not None:
        grads = grads @ projector
    tangents = _tangents(X)
    transverse = grads - np.sum(grads * tangents, axis=1)[:, None] * tangents
    norms = np.linalg.norm(transverse, axis=1)

    movable = np.ones(len(X), dtype=bool)
    movable[list(path.pinned)] = False
    idx = np.flatnonzero(movable & (norms > policy.gradient_floor))
    if idx.size == 0:
        return RelaxResult(path, True, before, before)

    # Vectorized Armijo backtracking, one step length per knot
    alpha = np.minimum(policy.step, policy.max_displacement / norms[idx])
    accepted = np.zeros(idx.size, dtype=bool)
    moved = X[idx].copy()
    pending = np.arange(idx.size)
    for _ in range(policy.backtracks):
        k = idx[pending]
        trial = X[k] - alpha[pending, None] * transverse[k]
        ok = phi_values(f, trial) <= values[k] - policy.armijo * alpha[pending] * norms[k] ** 2
        moved[pending[ok]] = trial[ok]
        accepted[pending[ok]] = True
        alpha[pending[~ok]] *= 0.5
        pending = pending[~ok]
        if pending.size == 0:
            break
    if not accepted.any():
        return RelaxResult(path, True, before, before)

    knots = X.copy()
    knots[idx[accepted]] = moved[accepted]
    new_path = DiscretePath(reparametrize(knots))
    return RelaxResult(new_path, False, before, path_max(new_path, f)[1], int(accepted.sum()))


def symmetry_projector(f: FunctionalSpec, geometry: MountainGeometry, mode: str = "isotropy") -> np.ndarray:
    """
    Orthogonal projector onto the vectors fixed by every symmetry of phi that fixes e1 and e.

    Candidate symmetries are the cyclic shifts, index reflections and sign flip;
    a candidate is kept when it fixes e1 and e and leaves phi unchanged on probe points.
    """
    period = f.period
    if mode == "none":
        return np.eye(period)
    if mode != "isotropy":
        raise PathError(f"unknown symmetry mode {mode!r}")

    probes = np.random.default_rng(0).standard_normal((4, period))
    base = phi_values(f, probes)
    e1, e = geometry.e1.values, geometry.e.values
    kept = []
    for action in dihedral_actions(period):
        if not (np.allclose(apply_action(action, e1), e1, rtol=0.0, atol=1e-12)
                and np.allclose(apply_action(action, e), e, rtol=0.0, atol=1e-12)):
            continue
        moved = phi_values(f, apply_action(action, probes))
        if np.all(np.abs(moved - base) <= 1e-9 * (1.0 + np.abs(base))):
            kept.append(action_matrix(action))
    projector = np.mean(kept, axis=0)
    logger.info("isotropy group of order %d, fixed subspace of dimension %d",
                len(kept), int(round(np.trace(projector))))
    return projector


def refine_path(path: DiscretePath) -> DiscretePath:
    """Insert midpoints; N doubles and the old knots (pins included) keep their positions."""
    X = path.knots
    fine = np.empty((2 * len(X) - 1, X.shape[1]))
    fine[0::2] = X
    fine[1::2] = 0.5 * (X[:-1] + X[1:])
    return DiscretePath(fine)


def _perturb(path: DiscretePath, amplitude: float, rng: np.random.Generator,
             projector: np.ndarray) -> DiscretePath:
    X = path.knots.copy()
    n = path.n_segments
    noise = rng.standard_normal(X.shape) @ projector
    tangents = _tangents(X)
    noise -= np.sum(noise * tangents, axis=1)[:, None] * tangents
    bump = np.abs(np.sin(2.0 * np.pi * np.arange(n + 1) / n))[:, None]
    X += amplitude * bump * noise
    for k in path.pinned:
        X[k] = path.knots[k]
    return DiscretePath(reparametrize(X))


def _relax(path: DiscretePath, f: FunctionalSpec, settings: SolverSettings,
           projector: np.ndarray) -> Tuple[DiscretePath, float, int, bool, List[float]]:
    best_path = path
    best_value = path_max(path, f)[1]
    history = [best_value]
    stalled = False
    iterations = 0
    for iterations in range(1, settings.max_iterations + 1):
        result = relax_step(path, f, settings.policy, projector)
        if result.stalled:
            stalled = True
            break
        shift = float(np.max(np.abs(result.path.knots - path.knots)))
        path = result.path
        if result.max_after < best_value:
            best_value, best_path = result.max_after, path
        history.append(best_value)
        if abs(result.max_after - result.max_before) <= settings.value_tol and shift <= settings.displacement_tol:
            break
    return best_path, best_value, iterations, stalled, history


# per-iteration ensemble minimum; members that stopped early keep their last value
def _running_min(histories: List[List[float]]) -> List[float]:
    length = max(len(h) for h in histories)
    padded = np.array([h + [h[-1]] * (length - len(h)) for h in histories])
    return np.min(padded, axis=0).tolist()


def _check_geometry(f: FunctionalSpec, geometry: MountainGeometry) -> Tuple[float, float, float]:
    geometry.e.require_period(f.period)
    phi_zero = phi_eval(f, PeriodicSequence.zeros(f.period))
    phi_e = phi_eval(f, geometry.e)
    phi_e1 = phi_eval(f, geometry.e1)
    if abs(phi_e - phi_e1) > 10 * GEOMETRY_TOL * max(1.0, abs(phi_e1)):
        raise GeometryError(f"invalid geometry: phi(e) = {phi_e!r} differs from phi(e1) = {phi_e1!r}")
    if not phi_zero < phi_e1:
        raise GeometryError(f"invalid geometry: phi(0) = {phi_zero!r} is not below phi(e1) = {phi_e1!r}")
    return phi_zero, phi_e, phi_e1


def certify_point(f: FunctionalSpec, u: PeriodicSequence, c_hat: float, eps: float) -> CertificateRecord:
    value = phi_eval(f, u)
    grad_norm = phi_grad(f, u).norm()
    return CertificateRecord(
        c_hat=c_hat,
        eps=eps,
        phi_u_hat=value,
        grad_norm=grad_norm,
        certificate_i=bool(c_hat - 2 * eps <= value <= c_hat + 2 * eps),
        certificate_ii=bool(grad_norm < 2 * eps),
    )


def mountain_pass_solve(f: FunctionalSpec, geometry: MountainGeometry, eps: float,
                        settings: Optional[SolverSettings] = None, seed: int = 0) -> MinimaxReport:
    """
    Estimate the minimax value over paths through 0, e1 and e and a near-critical point.

    Args:
        f: Functional to search
        geometry: Mountain geometry (phi(0) < phi(e) = phi(e1))
        eps: Certificate tolerance
        settings: Knot count, ensemble size, budgets and symmetry mode
        seed: Root seed; member i uses the i-th child of SeedSequence(seed)

    Returns:
        MinimaxReport with c_hat, u_hat and both certificates (failed ones included)
    """
    settings = settings or SolverSettings()
    if not eps > 0:
        raise PathError(f"eps must be positive, got {eps}")
    if settings.ensemble < 1:
        raise PathError(f"ensemble needs at least one member, got {settings.ensemble}")
    phi_zero, phi_e, phi_e1 = _check_geometry(f, geometry)

    projector = symmetry_projector(f, geometry, settings.symmetry)
    base = init_path(geometry, settings.knots)
    logger.info("relaxing %d paths with N=%d knots, symmetry=%s", settings.ensemble, settings.knots,
                settings.symmetry)

    members: List[MemberRun] = []
    for index, child in enumerate(np.random.SeedSequence(seed).spawn(settings.ensemble)):
        rng = np.random.default_rng(child)
        start = base if index == 0 else _perturb(base, settings.perturbation, rng, projector)
        path, value, iterations, stalled, history = _relax(start, f, settings, projector)
        coarse_value = value
        refine_start = len(history)
        if settings.refine:
            # the refined knots are a superset of the coarse ones, so its first max is >= coarse_value
            path, value, more, stalled, fine_history = _relax(refine_path(path), f, settings, projector)
            iterations += more
            history = history + fine_history
        members.append(MemberRun(index, value, path, coarse_value, iterations, stalled, history, refine_start))
        logger.debug("member %d: best path max %.12g after %d iterations", index, value, iterations)

    coarse = _running_min([m.history[:m.refine_start] for m in members])
    fine = _running_min([m.history[m.refine_start:] for m in members]) if settings.refine else []
    history = coarse + fine

    best = min(members, key=lambda m: (m.best_value, m.index))
    top, c_hat = path_max(best.best_path, f)
    u_hat = PeriodicSequence(best.best_path.knots[top])
    record = certify_point(f, u_hat, c_hat, eps)
    case = "case_1" if phi_e1 < c_hat - CASE_TOL * max(1.0, abs(c_hat)) else "case_2"

    report = MinimaxReport(
        c_hat=c_hat,
        u_hat=u_hat,
        grad_norm=record.grad_norm,
        phi_u_hat=record.phi_u_hat,
        iterations=sum(m.iterations for m in members),
        eps=eps,
        certificate_i=record.certificate_i,
        certificate_ii=record.certificate_ii,
        c1=max(phi_zero, phi_e),
        e1_level=phi_e1,
        case=case,
        knots=best.best_path.n_segments,
        symmetry=settings.symmetry,
        fixed_dimension=int(round(np.trace(projector))),
        seed=seed,
        best_member=best.index,
        member_values=[m.best_value for m in members],
        coarse_c_hat=min(m.coarse_value for m in members),
        history=history,
        refine_start=len(coarse),
        stalled=[m.stalled for m in members],
        best_path=best.best_path,
    )
    logger.info("c_hat = %.10g, |grad phi(u_hat)| = %.3e, certificates (i)=%s (ii)=%s, %s",
                c_hat, record.grad_norm, record.certificate_i, record.certificate_ii, case)
    return report


def certify_report(report: MinimaxReport, f: FunctionalSpec) -> CertificateRecord:
    """
    Recompute both certificates from (u_hat, c_hat, eps) alone.

    Raises:
        CertificateError: the stored values or flags disagree with the recomputation
    """
    record = certify_point(f, report.u_hat, report.c_hat, report.eps)
    value_gap = abs(record.phi_u_hat - report.phi_u_hat)
    grad_gap = abs(record.grad_norm - report.grad_norm)
    if value_gap > CERTIFICATE_TOL * max(1.0, abs(record.phi_u_hat)) \
            or grad_gap > CERTIFICATE_TOL * max(1.0, record.grad_norm):
        raise CertificateError(f"stored phi(u_hat)/gradient differ from recomputation by {value_gap:.3e}/{grad_gap:.3e}")
    if (record.certificate_i, record.certificate_ii) != (report.certificate_i, report.certificate_ii):
        raise CertificateError(
            f"stored certificates ({report.certificate_i}, {report.certificate_ii}) disagree with "
            f"recomputed ({record.certificate_i}, {record.certificate_ii})")
    return record
