"""
The space E_M of M-periodic sequences: difference operators, inner product
and norms, and the second-difference matrix B with its spectrum.

Indices are 1-based at the interface (u_1..u_M, u_0 = u_M, u_{M+1} = u_1)
and stored 0-based, so u_n lives at values[(n - 1) % M].
"""

import logging
from typing import List, Tuple

import networkx as nx
import numpy as np
from scipy import linalg

from .config import (
    QUADRATIC_FORM_TOL,
    SPECTRUM_TOL,
    ZERO_EIGENVALUE_TOL,
)
from .errors import DiscreteSystemError, IndexOutOfRangeError, PeriodMismatchError
from .models import PeriodicSequence, Spectrum, lambda_max_of

logger = logging.getLogger(__name__)


def _require_period(period: int) -> None:
    if period < 3:
        raise DiscreteSystemError(f"period must be at least 3, got {period}")


def _same_period(x: PeriodicSequence, y: PeriodicSequence) -> None:
    if x.period != y.period:
        raise PeriodMismatchError(f"periods differ: {x.period} vs {y.period}")


# (B U)_s = 2 u_s - u_{s+1} - u_{s-1}, along the last axis of any array
def apply_b(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return 2.0 * values - np.roll(values, -1, axis=-1) - np.roll(values, 1, axis=-1)


def forward_difference(u: PeriodicSequence) -> PeriodicSequence:
    return PeriodicSequence(np.roll(u.values, -1) - u.values)


# Delta^2 u_{n-1} = u_{n+1} - 2 u_n + u_{n-1}
def second_difference(u: PeriodicSequence, n: int) -> float:
    if not 1 <= n <= u.period:
        raise IndexOutOfRangeError(f"index {n} outside 1..{u.period}")
    return u.at(n + 1) - 2.0 * u.at(n) + u.at(n - 1)


def inner_product(x: PeriodicSequence, y: PeriodicSequence) -> float:
    _same_period(x, y)
    return float(np.dot(x.values, y.values))


def norm(x: PeriodicSequence) -> float:
    return float(np.sqrt(inner_product(x, x)))


def beta_norm(x: PeriodicSequence, beta: float) -> float:
    if beta < 1:
        raise DiscreteSystemError(f"beta must be >= 1, got {beta}")
    return float(np.sum(np.abs(x.values) ** beta) ** (1.0 / beta))


# sharp C1, C2 with C1 |x| <= |x|_beta <= C2 |x| on R^M
def norm_equivalence_constants(period: int, beta: float) -> Tuple[float, float]:
    if beta < 1:
        raise DiscreteSystemError(f"beta must be >= 1, got {beta}")
    scale = period ** (1.0 / beta - 0.5)
    if beta >= 2:
        return scale, 1.0
    return 1.0, scale


# B as the graph Laplacian of the M-cycle
def b_matrix(period: int) -> np.ndarray:
    _require_period(period)
    ring = nx.cycle_graph(period)
    return nx.laplacian_matrix(ring, nodelist=range(period)).toarray().astype(float)


# sum of squared forward differences, cross-checked against u^T B u
def b_quadratic_form(u: PeriodicSequence) -> float:
    diff = np.roll(u.values, -1) - u.values
    by_differences = float(np.dot(diff, diff))
    by_matrix = float(u.values @ b_matrix(u.period) @ u.values) if u.period >= 3 else by_differences
    if abs(by_differences - by_matrix) > QUADRATIC_FORM_TOL * (1.0 + np.dot(u.values, u.values)):
        raise DiscreteSystemError(
            f"quadratic form mismatch: {by_differences!r} vs {by_matrix!r}")
    return by_differences


def b_eigenvalue(period: int, j: int) -> float:
    return 2.0 - 2.0 * float(np.cos(2.0 * np.pi * j / period))


def lambda_min_nonzero(period: int) -> float:
    return 2.0 * (1.0 - float(np.cos(2.0 * np.pi / period)))


def lambda_max(period: int) -> float:
    return lambda_max_of(period)


def b_spectrum(period: int) -> Spectrum:
    _require_period(period)
    closed = np.sort([b_eigenvalue(period, j) for j in range(period)])
    dense = np.sort(linalg.eigh(b_matrix(period), eigvals_only=True))

    gap = float(np.max(np.abs(closed - dense)))
    if gap > SPECTRUM_TOL:
        raise DiscreteSystemError(f"closed-form and dense spectra of B differ by {gap:.3e} for M = {period}")
    if abs(closed[0]) > ZERO_EIGENVALUE_TOL:
        raise DiscreteSystemError(f"smallest eigenvalue {closed[0]!r} is not zero")

    spectrum = Spectrum(
        period=period,
        eigenvalues=tuple(float(v) for v in closed),
        dense_eigenvalues=tuple(float(v) for v in dense),
        lambda_min_nonzero=lambda_min_nonzero(period),
        lambda_max=lambda_max(period),
    )
    logger.debug("spectrum of B for M=%d: %s", period, spectrum.eigenvalues)
    return spectrum


# real Fourier modes of B: (eigenvalue, mode scaled to max |entry| = 1)
def b_eigenvectors(period: int) -> List[Tuple[float, PeriodicSequence]]:
    _require_period(period)
    n = np.arange(1, period + 1)
    modes = []
    for j in range(period // 2 + 1):
        eigenvalue = b_eigenvalue(period, j)
        angle = 2.0 * np.pi * j * n / period
        candidates = [np.cos(angle)]
        if 0 < j and 2 * j != period:
            candidates.append(np.sin(angle))
        for vec in candidates:
            vec = np.where(np.abs(vec) < 1e-14, 0.0, vec)
            modes.append((eigenvalue, PeriodicSequence(vec / np.max(np.abs(vec)))))
    return modes


# signed permutations (perm, sign) with (g u)_i = sign * u[perm[i]], identity first
def dihedral_actions(period: int, shifts: bool = True, reflections: bool = True,
                     sign: bool = True) -> List[Tuple[np.ndarray, float]]:
    idx = np.arange(period)
    offsets = range(period) if shifts else [0]
    directions = (1, -1) if reflections else (1,)
    signs = (1.0, -1.0) if sign else (1.0,)
    actions = []
    for s in signs:
        for r in directions:
            for k in offsets:
                actions.append(((r * idx + k) % period, s))
    return actions


def apply_action(action: Tuple[np.ndarray, float], values: np.ndarray) -> np.ndarray:
    perm, s = action
    return s * np.asarray(values)[..., perm]


def action_matrix(action: Tuple[np.ndarray, float]) -> np.ndarray:
    perm, s = action
    matrix = np.zeros((perm.size, perm.size))
    matrix[np.arange(perm.size), perm] = s
    return matrix
