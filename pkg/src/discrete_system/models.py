from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import (
    ConditionError,
    FunctionalError,
    GeometryError,
    IndexOutOfRangeError,
    InvalidSequenceError,
    PeriodMismatchError,
)


# kinds of potential the toolkit knows how to build
class PotentialKind(Enum):
    COSINE_HALF = "cosine_half"    # g = x^2/2 + cos x - 1
    COSINE_MU = "cosine_mu"        # g = mu x^2 + cos x - 1
    CUSTOM_PROFILE = "custom_profile"


class WeightKind(Enum):
    CONSTANT = "constant"
    COSINE = "cosine"


class ConditionId(Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    W1 = "W1"
    W2 = "W2"


class Verdict(Enum):
    HOLDS_ON_SAMPLE = "holds-on-sample"
    FAILS = "fails"


class FunctionalKind(Enum):
    PENALIZED = "penalized"        # distinguished index n* plus quadratic penalty elsewhere
    STANDARD = "standard"          # 1/2 u^T B u - sum F(n, u_n)


# which weight the penalty term of the penalized functional carries
class PenaltyReading(Enum):
    WEIGHTED = "weighted"          # weight w3
    UNIT = "unit"                  # weight 1


# one element of E_M, addressed 1..M from the outside with wraparound
@dataclass(frozen=True, eq=False)
class PeriodicSequence:
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise InvalidSequenceError(f"expected a non-empty 1-d array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidSequenceError("sequence entries must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, period: int) -> "PeriodicSequence":
        return cls(np.zeros(period))

    @classmethod
    def constant(cls, period: int, value: float) -> "PeriodicSequence":
        return cls(np.full(period, float(value)))

    @property
    def period(self) -> int:
        return int(self.values.size)

    # u_n with u_{n+M} = u_n, so at(0) == at(M)
    def at(self, n: int) -> float:
        return float(self.values[(n - 1) % self.period])

    def require_period(self, period: int) -> "PeriodicSequence":
        if self.period != period:
            raise PeriodMismatchError(f"sequence has period {self.period}, expected {period}")
        return self

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_list(self) -> List[float]:
        return [float(x) for x in self.values]

    def __add__(self, other: "PeriodicSequence") -> "PeriodicSequence":
        other.require_period(self.period)
        return PeriodicSequence(self.values + other.values)

    def __sub__(self, other: "PeriodicSequence") -> "PeriodicSequence":
        other.require_period(self.period)
        return PeriodicSequence(self.values - other.values)

    def __neg__(self) -> "PeriodicSequence":
        return PeriodicSequence(-self.values)

    def __mul__(self, scalar: float) -> "PeriodicSequence":
        return PeriodicSequence(float(scalar) * self.values)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"PeriodicSequence({self.to_list()})"


# spectrum of B, closed form next to a dense eigensolve
@dataclass(frozen=True)
class Spectrum:
    period: int
    eigenvalues: Tuple[float, ...]          # closed form, ascending
    dense_eigenvalues: Tuple[float, ...]    # scipy.linalg.eigh, ascending
    lambda_min_nonzero: float
    lambda_max: float

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(np.abs(np.subtract(self.eigenvalues, self.dense_eigenvalues))))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "period": self.period,
            "eigenvalues": list(self.eigenvalues),
            "dense_eigenvalues": list(self.dense_eigenvalues),
            "lambda_min_nonzero": self.lambda_min_nonzero,
            "lambda_max": self.lambda_max,
            "max_discrepancy": self.max_discrepancy,
        }


# weight rho(t): constant, or amplitude * cos(2 pi t / M)
@dataclass(frozen=True)
class WeightFunction:
    kind: WeightKind
    amplitude: float
    period: int

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == WeightKind.CONSTANT:
            return np.full(t.shape, float(self.amplitude)) if t.ndim else float(self.amplitude)
        return self.amplitude * np.cos(2.0 * np.pi * np.mod(t, self.period) / self.period)

    @property
    def sup_abs(self) -> float:
        return abs(float(self.amplitude))

    @property
    def is_constant(self) -> bool:
        return self.kind == WeightKind.CONSTANT or self.amplitude == 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "amplitude": self.amplitude}


# scalar profile g with its first two derivatives, all numpy-vectorized
@dataclass(frozen=True)
class ScalarProfile:
    name: str
    g: Callable[[np.ndarray], np.ndarray]
    dg: Callable[[np.ndarray], np.ndarray]
    d2g: Callable[[np.ndarray], np.ndarray]
    even: bool                      # g(-x) = g(x)
    params: Dict[str, float] = field(default_factory=dict)


# F(n, x) = a g(x) (rho(n) + K)
@dataclass(frozen=True)
class PotentialSpec:
    kind: PotentialKind
    a: float
    K: float
    weight: WeightFunction
    profile: ScalarProfile
    mu: Optional[float] = None

    def __post_init__(self):
        if self.weight.period < 3:
            raise ConditionError(f"period must be at least 3, got {self.weight.period}")
        if self.K <= 0:
            raise ConditionError(f"K must be positive, got {self.K}")
        if not self.weight.sup_abs < self.K:
            raise ConditionError(
                f"weight must satisfy |rho| < K, got sup|rho| = {self.weight.sup_abs} with K = {self.K}")
        if self.kind == PotentialKind.CUSTOM_PROFILE:
            return
        threshold = self.a_threshold(self.weight.period)
        if not self.a > threshold:
            raise ConditionError(f"{self.kind.value} needs a > {threshold:.6g} for M = {self.period}, got a = {self.a}")
        if self.kind == PotentialKind.COSINE_MU:
            if self.mu is None or not self.mu > 0.5:
                raise ConditionError(f"cosine_mu needs mu > 1/2, got mu = {self.mu}")
            if self.period < 6:
                raise ConditionError(f"cosine_mu needs M >= 6, got M = {self.period}")

    # a > 2 for even M, a > 2(1 + cos(pi/M)) for odd M
    @staticmethod
    def a_threshold(period: int) -> float:
        if period % 2 == 0:
            return 2.0
        return 2.0 * (1.0 + np.cos(np.pi / period))

    @property
    def period(self) -> int:
        return self.weight.period

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "profile": self.profile.name,
            "profile_params": dict(self.profile.params),
            "a": self.a,
            "mu": self.mu,
            "K": self.K,
            "period": self.period,
            "weight": self.weight.to_dict(),
        }


# sampling grid and constants for a condition check
@dataclass(frozen=True)
class ConditionGrid:
    x_max: float = 100.0
    points: int = 4001
    delta: float = 0.5              # (A2) neighbourhood
    alpha: Optional[float] = None   # (A2) constant to certify; fitted when None
    w1: Optional[float] = None      # (A3) constants; fitted when None
    w2: Optional[float] = None
    w3: Optional[float] = None
    margin: float = 1e-3


# outcome of checking one condition on a sampled grid
@dataclass
class ConditionReport:
    condition: ConditionId
    verdict: Verdict
    witness: Dict[str, float]           # tightest or violating sample (n, x, value, ...)
    constants: Dict[str, float] = field(default_factory=dict)
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == Verdict.HOLDS_ON_SAMPLE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "condition": self.condition.value,
            "verdict": self.verdict.value,
            "witness": dict(self.witness),
            "constants": dict(self.constants),
            "note": self.note,
        }


@dataclass(frozen=True)
class FunctionalSpec:
    kind: FunctionalKind
    potential: PotentialSpec
    n_star: Optional[int] = None
    w3: Optional[float] = None
    penalty: PenaltyReading = PenaltyReading.WEIGHTED

    def __post_init__(self):
        if self.kind != FunctionalKind.PENALIZED:
            return
        if self.n_star is None or not 1 <= self.n_star <= self.period:
            raise IndexOutOfRangeError(f"n_star must lie in 1..{self.period}, got {self.n_star}")
        half_max = 0.5 * lambda_max_of(self.period)
        if self.w3 is None or not self.w3 > half_max:
            raise FunctionalError(f"penalized functional needs w3 > lambda_max/2 = {half_max:.6g}, got {self.w3}")

    @property
    def period(self) -> int:
        return self.potential.period

    # coefficient of the sum of u_n^2 over n != n*
    @property
    def penalty_weight(self) -> float:
        if self.kind != FunctionalKind.PENALIZED:
            return 0.0
        return float(self.w3) if self.penalty == PenaltyReading.WEIGHTED else 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "n_star": self.n_star,
            "w3": self.w3,
            "penalty": self.penalty.value if self.kind == FunctionalKind.PENALIZED else None,
            "potential": self.potential.to_dict(),
        }


# the data the minimax principle needs: 0, e1 inside the ball, e outside it
@dataclass(frozen=True)
class MountainGeometry:
    e: PeriodicSequence
    e1: PeriodicSequence
    r: float
    level: float
    source: str = "penalty"
    w4: Optional[float] = None
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.e1.require_period(self.e.period)
        if not 0.0 < self.e1.norm() < self.r < self.e.norm():
            raise GeometryError(
                f"need 0 < |e1| < r < |e|, got |e1| = {self.e1.norm():.6g}, r = {self.r:.6g}, |e| = {self.e.norm():.6g}")

    @property
    def period(self) -> int:
        return self.e.period

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "e": self.e.to_list(),
            "e1": self.e1.to_list(),
            "r": self.r,
            "level": self.level,
            "w4": self.w4,
            "params": dict(self.params),
        }


# outcome of a coercivity or P.S.-bound sweep
@dataclass
class BoundReport:
    kind: str
    samples: int
    violations: int
    min_slack: float
    max_slack: float
    constants: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "samples": self.samples,
            "violations": self.violations,
            "min_slack": self.min_slack,
            "max_slack": self.max_slack,
            "constants": dict(self.constants),
            "notes": list(self.notes),
        }


def lambda_max_of(period: int) -> float:
    if period % 2 == 0:
        return 4.0
    return 2.0 * (1.0 + float(np.cos(np.pi / period)))
