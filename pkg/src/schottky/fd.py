"""Finite-difference directional derivatives with respect to generator matrices.

Used as the independent check of the boundary-integral variations: it only
ever evaluates the target function on perturbed groups, never the variational
formula.  Truncation length and quadrature settings are whatever ``f`` closes
over, so they stay fixed between the + and - evaluations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .group import SchottkyGroup, StructuralError
from .moebius import MoebiusError
from .variational import PerturbationDirection

MIN_STEP = 1e-9
MAX_SHRINK = 30


class FDError(RuntimeError):
    pass


@dataclass(frozen=True)
class FDConfig:
    base_step: float = 1e-4
    scheme: str = "central"
    richardson_levels: int = 2

    def __post_init__(self):
        if not self.base_step > MIN_STEP:
            raise ValueError(f"base_step must exceed {MIN_STEP}")
        if self.scheme != "central":
            raise ValueError("only central differences are implemented")
        if self.richardson_levels < 0:
            raise ValueError("richardson_levels must be >= 0")


@dataclass
class FDResult:
    value: complex | np.ndarray
    error: float
    step: float
    level_errors: list[float] = field(default_factory=list)
    warning: str | None = None


def _perturbed(group: SchottkyGroup, direction: PerturbationDirection, t: float):
    try:
        g = group.perturbed(direction.deltas, t)
    except (StructuralError, MoebiusError):
        return None
    return g if g.validate().usable else None


def _step_scale(group: SchottkyGroup, direction: PerturbationDirection) -> float:
    gen_norm = np.sqrt(sum(np.sum(np.abs(g.as_array()) ** 2) for g in group.generators))
    dn = direction.frobenius()
    return float(gen_norm / dn) if dn > 0 else 1.0


def fd_directional(
    f: Callable[[SchottkyGroup], complex | np.ndarray],
    group: SchottkyGroup,
    direction: PerturbationDirection,
    cfg: FDConfig = FDConfig(),
) -> FDResult:
    """Richardson-extrapolated central difference of f along ``direction``.

    The first step is base_step * |S| / |dS| so the perturbation has the same
    relative size in every direction; it is halved until both perturbed
    groups still validate.
    """
    h = cfg.base_step * _step_scale(group, direction)
    levels = cfg.richardson_levels
    smallest = h / 2**levels
    for _ in range(MAX_SHRINK):
        if _perturbed(group, direction, smallest) and _perturbed(group, direction, -smallest) \
                and _perturbed(group, direction, h) and _perturbed(group, direction, -h):
            break
        h /= 2
        smallest = h / 2**levels
    else:
        raise FDError("perturbed groups fail validation even at the smallest step")

    table: list[list] = []
    fscale = 0.0
    for i in range(levels + 1):
        hi = h / 2**i
        fp = np.asarray(f(group.perturbed(direction.deltas, hi)))
        fm = np.asarray(f(group.perturbed(direction.deltas, -hi)))
        fscale = max(fscale, float(np.max(np.abs(fp))), float(np.max(np.abs(fm))))
        d = (fp - fm) / (2 * hi)
        row = [d]
        for k in range(1, i + 1):
            row.append(row[k - 1] + (row[k - 1] - table[i - 1][k - 1]) / (4**k - 1))
        table.append(row)
    diag = [table[i][i] for i in range(levels + 1)]
    errs = [float(np.max(np.abs(diag[i] - diag[i - 1]))) for i in range(1, len(diag))]
    error = errs[-1] if errs else float("nan")
    warn = None
    rounding = 1e3 * np.finfo(float).eps * fscale / (h / 2**levels)
    if len(errs) >= 2 and errs[-1] > errs[-2] and errs[-1] > rounding:
        warn = "Richardson corrections did not decrease; step may be in the rounding regime"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    value = diag[-1]
    if np.ndim(value) == 0:
        value = complex(value)
    return FDResult(value, error, h, errs, warn)
