import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError

# tolerances
TELESCOPE_TOL = 1e-12            # sum of forward differences
QUADRATIC_FORM_TOL = 1e-12       # sum of squared differences vs u^T B u (relative to 1+|u|^2)
SPECTRUM_TOL = 1e-10             # closed-form vs dense eigenvalues
ZERO_EIGENVALUE_TOL = 1e-12      # smallest eigenvalue of B
PERIODICITY_TOL = 1e-12          # F(n+M, x) vs F(n, x)
NONNEGATIVITY_TOL = 1e-12        # (W1) F >= -tol
ORIGIN_TOL = 1e-12               # (W2) |F(n, 0)| <= tol
GEOMETRY_TOL = 1e-10             # phi(e) = phi(e1) = level
BOUND_TOL = 1e-9                 # slack allowed in coercivity / P.S. bound sweeps
CERTIFICATE_TOL = 1e-12          # stored vs recomputed certificate values
PSI_DENOMINATOR_FLOOR = 1e-14    # psi := 0 below this denominator
EIGENVECTOR_TOL = 1e-10          # ray directions must satisfy |B d - lambda d| <= tol

# finite-difference gradient checks
FD_STEP = 1e-5
FD_RELATIVE_TOL = 1e-6

# potentials
DEFAULT_X_MAX = 100.0            # half-width of the condition sampling grid
DEFAULT_GRID_POINTS = 4001
DEFAULT_A2_DELTA = 0.5
A2_PROBE_POINTS: Tuple[float, ...] = (1e-3, 1e-2)   # fine probes near x = 0 for (A2)
DEFAULT_A3_W1 = 1.0
DEFAULT_A3_MARGIN = 1e-3
W_SCAN_POINTS = 10_000           # grid for w = max |F - w3 x^2 + w2| on |x| <= w1

# functional
RAY_SCAN_POINTS = 2000
RAY_T_MAX = 10.0
C0_MAX_ITER = 500

# deformation
FLOW_ATOL = 1e-9
FLOW_RTOL = 1e-9
FLOW_SAMPLES = 201               # dense-output points stored per trace
VERDICT_TOL = 1e-6

# minimax
DEFAULT_KNOTS = 64
DEFAULT_ENSEMBLE = 8
DEFAULT_MAX_ITERATIONS = 500
DEFAULT_PERTURBATION = 0.05
DEFAULT_STEP = 0.1
DEFAULT_MAX_DISPLACEMENT = 0.1
MINIMAX_VALUE_TOL = 1e-10
MINIMAX_DISPLACEMENT_TOL = 1e-8
CASE_TOL = 1e-8                  # phi(e1) = c_hat within this (relative) tolerance is case 2
GRADIENT_FLOOR = 1e-12           # knots with smaller transverse gradient are stationary
ARMIJO = 1e-4
MAX_BACKTRACKS = 30

# oracle
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
CONDITION_LIMIT = 1e12           # Jacobians above this condition number count as singular
DEDUP_TOL = 1e-6
STRUCTURED_AMPLITUDES: Tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
DEFAULT_BOX = 3.0
DEFAULT_STARTS = 500
RAY_ROOT_POINTS = 10_000
RAY_ROOT_TOL = 1e-12

# reports
REPORT_SCHEMA_VERSION = "1.0"

# the desk instance: quadratic-plus-cosine profile with a=2.5, mu=1, K=1, rho = 0, M=6
DESK_INSTANCE: Dict[str, float] = {
    "period": 6,
    "a": 2.5,
    "mu": 1.0,
    "K": 1.0,
    "weight_amplitude": 0.0,
}
DESK_DIRECTION: List[float] = [1.0, -1.0, 0.0, 1.0, -1.0, 0.0]   # B-eigenvector, eigenvalue 3
DESK_LEVEL = 0.3
DESK_A3: Dict[str, float] = {"w1": 3.0, "w2": 5.0, "w3": 2.4}
DESK_N_STAR = 3

# bound sweeps
DEFAULT_BOUND_SAMPLES = 10_000
DEFAULT_BOUND_RADIUS = 10.0
DEFAULT_PS_LEVEL = 10.0          # M1


# problem config, parsed from JSON

@dataclass
class WeightConfig:
    kind: str = "constant"
    amplitude: float = 0.0


@dataclass
class PotentialConfig:
    kind: str = "cosine_mu"
    a: float = 2.5
    mu: Optional[float] = 1.0
    K: float = 1.0
    profile: Optional[str] = None       # custom_profile only: "zero" or "quadratic"
    coefficient: float = 1.0            # c in g(x) = c x^2
    weight: WeightConfig = field(default_factory=WeightConfig)


@dataclass
class GeometryConfig:
    kind: str = "ray"                   # "ray" (standard kind) or "penalty" (penalized kind)
    direction: Optional[List[float]] = None
    level: Optional[float] = DESK_LEVEL
    t_max: float = RAY_T_MAX
    w4: Optional[float] = None


@dataclass
class FunctionalConfig:
    kind: str = "standard"
    n_star: Optional[int] = None
    w3: Optional[float] = None
    penalty: str = "weighted"
    geometry: GeometryConfig = field(default_factory=GeometryConfig)


@dataclass
class ConditionConfig:
    x_max: float = DEFAULT_X_MAX
    points: int = DEFAULT_GRID_POINTS
    delta: float = DEFAULT_A2_DELTA
    alpha: Optional[float] = None
    w1: Optional[float] = None
    w2: Optional[float] = None
    w3: Optional[float] = None
    margin: float = DEFAULT_A3_MARGIN
    samples: int = DEFAULT_BOUND_SAMPLES
    radius: float = DEFAULT_BOUND_RADIUS
    m1: float = DEFAULT_PS_LEVEL


@dataclass
class SolverConfig:
    knots: int = DEFAULT_KNOTS
    ensemble: int = DEFAULT_ENSEMBLE
    eps: float = 0.01
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    tol: float = MINIMAX_VALUE_TOL
    symmetry: str = "isotropy"
    perturbation: float = DEFAULT_PERTURBATION
    refine: bool = True
    c0_restarts: int = 0                # 0 skips the c0 diagnostic


@dataclass
class OracleConfig:
    box: float = DEFAULT_BOX
    starts: int = DEFAULT_STARTS
    tol: float = 1e-10
    dedup_tol: float = DEDUP_TOL
    max_iter: int = NEWTON_MAX_ITER


@dataclass
class DeformationConfig:
    landscape: str = "linear"
    dimension: int = 2
    h: float = 0.0
    eps: float = 0.1
    fixed_sets: List[Dict[str, Any]] = field(default_factory=lambda: [
        {"kind": "empty"},
        {"kind": "slab", "lo": -0.02, "hi": 0.02},
        {"kind": "level", "value": 0.0},
    ])
    samples: int = 50
    descent_c: Optional[float] = None   # defaults to h


@dataclass
class OutputConfig:
    dir: str = "results"
    csv: bool = True


@dataclass
class ProblemConfig:
    seed: int
    period: int = 6
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    functional: FunctionalConfig = field(default_factory=FunctionalConfig)
    conditions: ConditionConfig = field(default_factory=ConditionConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    deformation: DeformationConfig = field(default_factory=DeformationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_NESTED = {
    (PotentialConfig, "weight"): WeightConfig,
    (FunctionalConfig, "geometry"): GeometryConfig,
    (ProblemConfig, "potential"): PotentialConfig,
    (ProblemConfig, "functional"): FunctionalConfig,
    (ProblemConfig, "conditions"): ConditionConfig,
    (ProblemConfig, "solver"): SolverConfig,
    (ProblemConfig, "oracle"): OracleConfig,
    (ProblemConfig, "deformation"): DeformationConfig,
    (ProblemConfig, "output"): OutputConfig,
}

_CHOICES = {
    "config.potential.kind": ("cosine_half", "cosine_mu", "custom_profile"),
    "config.potential.weight.kind": ("constant", "cosine"),
    "config.functional.kind": ("standard", "penalized"),
    "config.functional.penalty": ("weighted", "unit"),
    "config.functional.geometry.kind": ("ray", "penalty"),
    "config.solver.symmetry": ("isotropy", "none"),
    "config.deformation.landscape": ("linear", "saddle"),
}


def _build(cls, raw: Any, path: str):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown field")
    kwargs = {}
    for name, value in raw.items():
        nested = _NESTED.get((cls, name))
        kwargs[name] = _build(nested, value, f"{path}.{name}") if nested else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(path, str(exc)) from exc


def _number(value: Any, path: str, positive: bool = False, optional: bool = False) -> None:
    if value is None and optional:
        return
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"must be a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(path, f"must be positive, got {value!r}")


def _integer(value: Any, path: str, minimum: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(path, f"must be at least {minimum}, got {value}")


def _validate(config: ProblemConfig) -> ProblemConfig:
    _integer(config.seed, "config.seed", 0)
    _integer(config.period, "config.period", 3)
    for path, allowed in _CHOICES.items():
        obj = config
        for part in path.split(".")[1:]:
            obj = getattr(obj, part)
        if obj not in allowed:
            raise ConfigError(path, f"must be one of {list(allowed)}, got {obj!r}")

    p = config.potential
    _number(p.a, "config.potential.a")
    _number(p.K, "config.potential.K", positive=True)
    _number(p.mu, "config.potential.mu", optional=True)
    _number(p.weight.amplitude, "config.potential.weight.amplitude")
    if p.kind == "custom_profile" and p.profile not in ("zero", "quadratic"):
        raise ConfigError("config.potential.profile", f"must be 'zero' or 'quadratic', got {p.profile!r}")

    g = config.functional.geometry
    if g.direction is not None:
        if not isinstance(g.direction, list) or len(g.direction) != config.period:
            raise ConfigError("config.functional.geometry.direction", f"must be a list of {config.period} numbers")
        for i, value in enumerate(g.direction):
            _number(value, f"config.functional.geometry.direction[{i}]")
    _number(g.level, "config.functional.geometry.level", optional=True)
    _number(g.t_max, "config.functional.geometry.t_max", positive=True)
    _number(g.w4, "config.functional.geometry.w4", positive=True, optional=True)
    if config.functional.kind == "penalized":
        _integer(config.functional.n_star, "config.functional.n_star", 1)
        _number(config.functional.w3, "config.functional.w3", positive=True)

    c = config.conditions
    for name in ("x_max", "delta", "margin", "radius"):
        _number(getattr(c, name), f"config.conditions.{name}", positive=True)
    for name in ("alpha", "w1", "w2", "w3"):
        _number(getattr(c, name), f"config.conditions.{name}", positive=True, optional=True)
    _number(c.m1, "config.conditions.m1")
    _integer(c.points, "config.conditions.points", 2)
    _integer(c.samples, "config.conditions.samples", 1)

    s = config.solver
    _integer(s.knots, "config.solver.knots", 8)
    if s.knots % 2:
        raise ConfigError("config.solver.knots", f"must be even, got {s.knots}")
    _integer(s.ensemble, "config.solver.ensemble", 1)
    _integer(s.max_iterations, "config.solver.max_iterations", 1)
    _integer(s.c0_restarts, "config.solver.c0_restarts", 0)
    _number(s.eps, "config.solver.eps", positive=True)
    _number(s.tol, "config.solver.tol", positive=True)
    _number(s.perturbation, "config.solver.perturbation")

    o = config.oracle
    _number(o.box, "config.oracle.box", positive=True)
    _number(o.tol, "config.oracle.tol", positive=True)
    _number(o.dedup_tol, "config.oracle.dedup_tol", positive=True)
    _integer(o.starts, "config.oracle.starts", 0)
    _integer(o.max_iter, "config.oracle.max_iter", 1)

    d = config.deformation
    _integer(d.dimension, "config.deformation.dimension", 1)
    _number(d.h, "config.deformation.h")
    _number(d.eps, "config.deformation.eps", positive=True)
    _integer(d.samples, "config.deformation.samples", 1)
    _number(d.descent_c, "config.deformation.descent_c", optional=True)
    return config


def parse_problem_config(raw: Dict[str, Any]) -> ProblemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "expected an object")
    if "seed" not in raw:
        raise ConfigError("config.seed", "required")
    return _validate(_build(ProblemConfig, raw, "config"))


def load_problem_config(path) -> ProblemConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
    return parse_problem_config(raw)


# config overrides from command-line flags; None leaves a value unchanged
def apply_overrides(config: ProblemConfig, seed: Optional[int] = None, ensemble: Optional[int] = None,
                    eps: Optional[float] = None, out: Optional[str] = None) -> ProblemConfig:
    config = replace(config)
    if seed is not None:
        config.seed = seed
    if ensemble is not None:
        config.solver = replace(config.solver, ensemble=ensemble)
    if eps is not None:
        config.solver = replace(config.solver, eps=eps)
    if out is not None:
        config.output = replace(config.output, dir=out)
    return _validate(config)


# the desk instance as a ready-made config
def desk_problem_config(seed: int = 0) -> ProblemConfig:
    return ProblemConfig(
        seed=seed,
        period=int(DESK_INSTANCE["period"]),
        potential=PotentialConfig(kind="cosine_mu", a=DESK_INSTANCE["a"], mu=DESK_INSTANCE["mu"],
                                  K=DESK_INSTANCE["K"],
                                  weight=WeightConfig("constant", DESK_INSTANCE["weight_amplitude"])),
        functional=FunctionalConfig(kind="standard",
                                    geometry=GeometryConfig(kind="ray", direction=list(DESK_DIRECTION),
                                                            level=DESK_LEVEL)),
        conditions=ConditionConfig(w1=DESK_A3["w1"], w2=DESK_A3["w2"], w3=DESK_A3["w3"]),
    )
