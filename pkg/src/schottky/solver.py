"""Damped Newton iteration on Schottky moduli with the variational Jacobian."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fd import FDConfig, fd_directional
from .group import Disk, GroupValidationError, SchottkyGroup, StructuralError, disks_from_source
from .integrals import integrate, period_matrix, plan_path
from .moebius import MoebiusError, fixed_point_partials, from_fixed_points
from .series import ThirdKindDifferential, holomorphic_basis
from .variational import PerturbationDirection, PeriodVariation, vary_integral

log = logging.getLogger(__name__)

COND_LIMIT = 1e12
# variations are computed to ~1e-12; smaller singular values are noise
JAC_NOISE = 1e-10
MAX_HALVINGS = 20
PARAM_NAMES = ("attracting", "repelling", "multiplier")


class SolverError(RuntimeError):
    def __init__(self, msg: str, trace: "SolveTrace"):
        super().__init__(msg)
        self.trace = trace


class RankDeficientJacobian(SolverError):
    pass


class StepRejected(SolverError):
    pass


@dataclass(frozen=True)
class FreeParameter:
    generator: int
    which: str
    part: str = "re"

    def __post_init__(self):
        if self.which not in PARAM_NAMES:
            raise ValueError(f"unknown parameter {self.which!r}")
        if self.part not in ("re", "im"):
            raise ValueError("part must be 're' or 'im'")


@dataclass
class FixedPointParameterization:
    """Generators from (attracting, repelling, multiplier); some components free.

    With ``source_disks`` each D'_k stays put and D_k is its image under S_k;
    otherwise the Apollonius disks of each generator are used.
    """

    attracting: list[complex]
    repelling: list[complex]
    multipliers: list[complex]
    free: list[FreeParameter]
    source_disks: list[Disk] | None = None

    @property
    def genus(self) -> int:
        return len(self.attracting)

    def _values(self):
        return [list(map(complex, v)) for v in (self.attracting, self.repelling, self.multipliers)]

    def vector(self) -> np.ndarray:
        vals = self._values()
        out = []
        for p in self.free:
            v = vals[PARAM_NAMES.index(p.which)][p.generator]
            out.append(v.real if p.part == "re" else v.imag)
        return np.array(out, dtype=float)

    def triples(self, x: np.ndarray):
        vals = self._values()
        for p, xi in zip(self.free, x):
            row = vals[PARAM_NAMES.index(p.which)]
            v = row[p.generator]
            row[p.generator] = complex(xi, v.imag) if p.part == "re" else complex(v.real, xi)
        return vals

    def group(self, x: np.ndarray) -> SchottkyGroup:
        a, b, mu = self.triples(x)
        if self.source_disks is None:
            return SchottkyGroup.from_fixed_points(a, b, mu)
        gens = [from_fixed_points(*t) for t in zip(a, b, mu)]
        disks = [disks_from_source(g, d) for g, d in zip(gens, self.source_disks)]
        return SchottkyGroup(tuple(gens), tuple(disks))

    def directions(self, x: np.ndarray) -> list[PerturbationDirection]:
        """dS for a unit step in each free real coordinate (same representative)."""
        a, b, mu = self.triples(x)
        out = []
        for p in self.free:
            k = p.generator
            part = fixed_point_partials(a[k], b[k], mu[k])[PARAM_NAMES.index(p.which)]
            ds = [np.zeros((2, 2), dtype=complex) for _ in range(self.genus)]
            ds[k] = part if p.part == "re" else 1j * part
            out.append(PerturbationDirection(tuple(ds)))
        return out


@dataclass(frozen=True)
class PeriodTarget:
    j: int
    s: int
    value: complex


@dataclass(frozen=True)
class IntegralTarget:
    """Integral of d zeta_k from z to z' (straight or planned path)."""

    k: int
    z: complex
    zprime: complex
    value: complex


@dataclass
class ModuliProblem:
    parameterization: FixedPointParameterization
    targets: Sequence[PeriodTarget | IntegralTarget]
    max_word_len: int = 8
    nodes: int = 256
    base_point: complex | None = None

    def __post_init__(self):
        n = len(self.parameterization.free)
        m = 2 * len(self.targets)
        if n < m:
            raise ValueError(f"{n} free real parameters for {m} real residuals")

    def basis(self, group: SchottkyGroup):
        return holomorphic_basis(group, self.max_word_len, nodes=self.nodes)

    def computed(self, group: SchottkyGroup, basis=None) -> np.ndarray:
        basis = basis or self.basis(group)
        out = []
        pm = None
        for t in self.targets:
            if isinstance(t, PeriodTarget):
                if pm is None:
                    pm = period_matrix(group, basis, self.base_point).entries
                out.append(pm[t.j, t.s])
            else:
                out.append(integrate(basis[t.k], plan_path(group, t.z, t.zprime)))
        return np.array(out, dtype=complex)

    def residual(self, group: SchottkyGroup, basis=None) -> np.ndarray:
        """target - computed, complex."""
        return np.array([t.value for t in self.targets]) - self.computed(group, basis)

    def variations(self, group: SchottkyGroup, directions, basis=None) -> np.ndarray:
        """Complex matrix (targets x directions) of first-order variations."""
        basis = basis or self.basis(group)
        out = np.empty((len(self.targets), len(directions)), dtype=complex)
        pv = PeriodVariation(group, basis, self.nodes)
        slots = {}
        for c, d in enumerate(directions):
            dpm = None
            for r, t in enumerate(self.targets):
                if isinstance(t, PeriodTarget):
                    if dpm is None:
                        dpm = pv(d)
                    out[r, c] = dpm[t.j, t.s]
                else:
                    key = (t.z, t.zprime)
                    if key not in slots:
                        slots[key] = ThirdKindDifferential.build(group, t.z, t.zprime, self.max_word_len)
                    out[r, c] = vary_integral(basis[t.k], t.z, t.zprime, d, self.nodes,
                                              slot=slots[key]).value
        return out


def realify(v: np.ndarray) -> np.ndarray:
    """Complex (m, ...) -> real (2m, ...) with rows Re r_1, Im r_1, Re r_2, ..."""
    v = np.asarray(v)
    out = np.empty((2 * v.shape[0],) + v.shape[1:])
    out[0::2] = v.real
    out[1::2] = v.imag
    return out


def jacobian(problem: ModuliProblem, group: SchottkyGroup, x: np.ndarray | None = None,
             cross_check: bool = False, fd_cfg: FDConfig = FDConfig()):
    """d(residual)/d(free parameters), realified.

    Returns the matrix, or (matrix, fd matrix, max relative discrepancy) with
    ``cross_check``.
    """
    x = problem.parameterization.vector() if x is None else x
    dirs = problem.parameterization.directions(x)
    basis = problem.basis(group)
    jac = -realify(problem.variations(group, dirs, basis))
    if not cross_check:
        return jac
    cols = []
    for d in dirs:
        res = fd_directional(lambda g: problem.residual(g), group, d, fd_cfg)
        cols.append(realify(np.asarray(res.value)))
    jfd = np.array(cols).T
    # column-wise relative discrepancy; single entries may vanish by symmetry
    rel = np.linalg.norm(jac - jfd, axis=0) / np.linalg.norm(jfd, axis=0)
    return jac, jfd, float(np.max(rel))


@dataclass
class IterationRecord:
    params: list[float]
    residual_norm: float
    step_norm: float
    condition: float
    halvings: int


@dataclass
class SolveTrace:
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def residual_norms(self) -> list[float]:
        return [r.residual_norm for r in self.records]

    @property
    def iterations(self) -> int:
        return max(0, len(self.records) - 1)

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "records": [vars(r) for r in self.records],
        }


def convergence_exponent(norms: Sequence[float], upper: float = 1e-2, floor: float = 1e-11) -> float:
    """Least-squares slope of log r_{k+1} against log r_k in the local regime.

    Residuals are evaluated to about 1e-13, so pairs ending below ``floor``
    measure evaluation noise rather than the iteration and are skipped.
    """
    pairs = [(a, b) for a, b in zip(norms, norms[1:]) if a < upper and b > floor and a > floor]
    if len(pairs) < 1:
        return float("nan")
    la = np.log([p[0] for p in pairs])
    lb = np.log([p[1] for p in pairs])
    if len(pairs) == 1:
        # exponent against the previous step when only one pair qualifies
        i = list(norms).index(pairs[0][0])
        if i == 0:
            return float("nan")
        return float(np.log(norms[i + 1] / norms[i]) / np.log(norms[i] / norms[i - 1]))
    return float(np.polyfit(la, lb, 1)[0])


def jacobian_condition(jac: np.ndarray) -> float:
    """s_max / s_min, infinite when s_min is below the evaluation noise floor."""
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.size == 0 or sv[-1] <= JAC_NOISE:
        return float("inf")
    return float(sv[0] / sv[-1])


def _try_group(problem: ModuliProblem, x):
    try:
        g = problem.parameterization.group(x)
    except (StructuralError, MoebiusError, ValueError):
        return None
    return g if g.validate().usable else None


def newton_solve(problem: ModuliProblem, x0: np.ndarray | None = None, max_iter: int = 20,
                 tol: float = 1e-10) -> tuple[SchottkyGroup, SolveTrace]:
    """Damped Newton on the realified residual; returns (group, trace)."""
    param = problem.parameterization
    x = param.vector() if x0 is None else np.asarray(x0, dtype=float)
    group = _try_group(problem, x)
    if group is None:
        raise GroupValidationError(param.group(x).validate())
    trace = SolveTrace()
    basis = problem.basis(group)
    r = realify(problem.residual(group, basis))
    rn = float(np.linalg.norm(r))
    trace.records.append(IterationRecord(x.tolist(), rn, 0.0, float("nan"), 0))
    for it in range(max_iter):
        if rn < tol:
            break
        jac = -realify(problem.variations(group, param.directions(x), basis))
        cond = jacobian_condition(jac)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            trace.records[-1].condition = cond
            raise RankDeficientJacobian(
                f"Jacobian condition {cond:.3e} exceeds {COND_LIMIT:.0e}; free parameters "
                "probably include a gauge (conjugation) direction", trace)
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        t = 1.0
        for halvings in range(MAX_HALVINGS + 1):
            xn = x + t * step
            gn = _try_group(problem, xn)
            if gn is not None:
                bn = problem.basis(gn)
                rnew = realify(problem.residual(gn, bn))
                rnn = float(np.linalg.norm(rnew))
                if rnn < rn:
                    break
            t /= 2
        else:
            trace.records[-1].condition = cond
            raise StepRejected("no step along the Newton direction reduced the residual "
                               f"after {MAX_HALVINGS} halvings", trace)
        trace.records[-1].condition = cond
        x, group, basis, r, rn = xn, gn, bn, rnew, rnn
        trace.records.append(IterationRecord(x.tolist(), rn, float(np.linalg.norm(t * step)),
                                             float("nan"), halvings))
        log.info("newton %d: |r| = %.3e", it + 1, rn)
    trace.converged = rn < tol
    return group, trace
