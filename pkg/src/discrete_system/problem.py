import logging
from typing import Optional

from .config import DESK_DIRECTION, ProblemConfig
from .errors import ConfigError
from .functional import build_penalty_geometry, find_ray_geometry
from .models import (
    ConditionGrid,
    FunctionalKind,
    FunctionalSpec,
    MountainGeometry,
    PenaltyReading,
    PeriodicSequence,
    PotentialSpec,
)
from .potentials import (
    cosine_half_potential,
    cosine_mu_potential,
    custom_potential,
    make_weight,
    quadratic_profile,
    zero_profile,
)

logger = logging.getLogger(__name__)


# turns a parsed ProblemConfig into potentials, functionals and geometry
class ProblemBuilder:

    def __init__(self, config: ProblemConfig):
        self.config = config
        self._potential: Optional[PotentialSpec] = None
        self._functional: Optional[FunctionalSpec] = None
        self._geometry: Optional[MountainGeometry] = None

    # potential F(n, x) = a g(x) (rho(n) + K) from the potential block
    def potential(self) -> PotentialSpec:
        if self._potential is not None:
            return self._potential
        p = self.config.potential
        period = self.config.period
        weight = make_weight(period, p.weight.kind, p.weight.amplitude)
        if p.kind == "cosine_half":
            spec = cosine_half_potential(p.a, p.K, period, weight)
        elif p.kind == "cosine_mu":
            if p.mu is None:
                raise ConfigError("config.potential.mu", "required for cosine_mu")
            spec = cosine_mu_potential(p.a, p.mu, p.K, period, weight)
        else:
            profile = zero_profile() if p.profile == "zero" else quadratic_profile(p.coefficient)
            spec = custom_potential(profile, p.K, period, p.a, weight)
        logger.info("built %s potential for M=%d", spec.kind.value, period)
        self._potential = spec
        return spec

    def functional(self) -> FunctionalSpec:
        if self._functional is not None:
            return self._functional
        fc = self.config.functional
        if fc.kind == "standard":
            self._functional = FunctionalSpec(FunctionalKind.STANDARD, self.potential())
        else:
            self._functional = FunctionalSpec(FunctionalKind.PENALIZED, self.potential(), n_star=fc.n_star, w3=fc.w3,
                                              penalty=PenaltyReading(fc.penalty))
        return self._functional

    # ray direction from the config, or the desk direction when M = 6
    def direction(self) -> PeriodicSequence:
        g = self.config.functional.geometry
        if g.direction is not None:
            return PeriodicSequence(g.direction)
        if self.config.period == len(DESK_DIRECTION):
            return PeriodicSequence(DESK_DIRECTION)
        raise ConfigError("config.functional.geometry.direction", f"required for M = {self.config.period}")

    # cached for the builder's own functional; an explicit other functional is always rebuilt
    def geometry(self, functional: Optional[FunctionalSpec] = None) -> MountainGeometry:
        own = functional is None or functional is self._functional
        if own and self._geometry is not None:
            return self._geometry
        functional = functional or self.functional()
        geometry = self._build_geometry(functional)
        if own:
            self._geometry = geometry
        return geometry

    def _build_geometry(self, functional: FunctionalSpec) -> MountainGeometry:
        g = self.config.functional.geometry
        if g.kind == "penalty":
            if g.w4 is None:
                raise ConfigError("config.functional.geometry.w4", "required for the penalty geometry")
            return build_penalty_geometry(functional, g.w4)
        if g.level is None:
            raise ConfigError("config.functional.geometry.level", "required for the ray geometry")
        return find_ray_geometry(functional, self.direction(), g.level, g.t_max)

    def condition_grid(self) -> ConditionGrid:
        c = self.config.conditions
        return ConditionGrid(x_max=c.x_max, points=c.points, delta=c.delta, alpha=c.alpha,
                             w1=c.w1, w2=c.w2, w3=c.w3, margin=c.margin)
