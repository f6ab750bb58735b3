"""Classical Schottky groups, Poincare-series differentials, periods and their variations."""

__version__ = "0.1.0"

from ._kernels import backend, set_threads
from .fd import FDConfig, FDResult, fd_directional
from .group import (
    Disk,
    DiskPair,
    GroupValidationError,
    SchottkyGroup,
    ValidationReport,
    cosets_mod_cyclic,
    words_up_to,
)
from .integrals import IntegrationPath, PeriodMatrix, a_periods, integrate, period_matrix, plan_path
from .moebius import INF, MoebiusMap, fixed_points, from_fixed_points
from .series import HolomorphicDifferential, ThirdKindDifferential, holomorphic_basis
from .solver import (
    FixedPointParameterization,
    FreeParameter,
    IntegralTarget,
    ModuliProblem,
    PeriodTarget,
    newton_solve,
)
from .variational import (
    PerturbationDirection,
    PeriodVariation,
    gauge_conjugation_direction,
    vary_integral,
    vary_period_matrix,
)

__all__ = [
    "INF",
    "Disk",
    "DiskPair",
    "FDConfig",
    "FDResult",
    "FixedPointParameterization",
    "FreeParameter",
    "GroupValidationError",
    "HolomorphicDifferential",
    "IntegralTarget",
    "IntegrationPath",
    "ModuliProblem",
    "MoebiusMap",
    "PeriodMatrix",
    "PeriodTarget",
    "PeriodVariation",
    "PerturbationDirection",
    "SchottkyGroup",
    "ThirdKindDifferential",
    "ValidationReport",
    "a_periods",
    "backend",
    "cosets_mod_cyclic",
    "fd_directional",
    "fixed_points",
    "from_fixed_points",
    "gauge_conjugation_direction",
    "holomorphic_basis",
    "integrate",
    "newton_solve",
    "period_matrix",
    "plan_path",
    "set_threads",
    "vary_integral",
    "vary_period_matrix",
    "words_up_to",
]
