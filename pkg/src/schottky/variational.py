"""First-order variation of Abelian integrals and periods under generator changes.

For a perturbation S_l -> S_l + dS_l the variation of an integral is a sum
over the boundary circles dD_l of contour integrals of

    eta'(u) * eta_slot'(u) * tr[M(u) dS_l S_l^{-1}],   M(u) = ((-u, u^2), (-1, u)),

where eta_slot is the third-kind differential with poles at the endpoints (or,
for periods, the pole-orbit differential 2 pi i d zeta_s).  M(u) has zero
trace and zero determinant, so pure rescalings dS_l = eps S_l drop out
pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import quadrature
from .group import SchottkyGroup
from .integrals import QuadratureError, a_periods
from .moebius import MoebiusMap, fixed_point_partials, fixed_points, from_fixed_points
from .series import HolomorphicDifferential, RationalDifferential, ThirdKindDifferential

#: Overall sign of the boundary-integral formula under the ORIENTATION
#: convention, pinned against central differences on the genus-1 closed form.
VARIATION_SIGN = -1

DEFAULT_NODES = 256
NODE_CAP = 4096
NODE_TOL = 1e-10
TWO_PI_I = 2j * np.pi


def hejhal_matrix(u: complex) -> np.ndarray:
    u = complex(u)
    return np.array([[-u, u * u], [-1, u]], dtype=complex)


def trace_weight(u, x: np.ndarray):
    """tr[M(u) X] = x21 u^2 + (x22 - x11) u - x12, vectorised in u."""
    return x[1, 0] * u * u + (x[1, 1] - x[0, 0]) * u - x[0, 1]


def true_inverse(m: MoebiusMap) -> np.ndarray:
    a = m.as_array()
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / m.det


@dataclass(frozen=True)
class PerturbationDirection:
    """One 2x2 complex matrix dS_l per generator.

    Each dS_l is measured against the stored representative of S_l: the
    perturbed generator is S_l + t dS_l with S_l exactly as held by the group.
    """

    deltas: tuple[np.ndarray, ...]

    def __post_init__(self):
        ds = tuple(np.array(d, dtype=complex).reshape(2, 2) for d in self.deltas)
        if not all(np.all(np.isfinite(d)) for d in ds):
            raise ValueError("direction has non-finite entries")
        object.__setattr__(self, "deltas", ds)

    @property
    def is_zero(self) -> bool:
        return not any(np.any(d != 0) for d in self.deltas)

    def __add__(self, other: "PerturbationDirection") -> "PerturbationDirection":
        return PerturbationDirection(tuple(a + b for a, b in zip(self.deltas, other.deltas)))

    def __mul__(self, c: complex) -> "PerturbationDirection":
        return PerturbationDirection(tuple(c * a for a in self.deltas))

    __rmul__ = __mul__

    def frobenius(self) -> float:
        return float(np.sqrt(sum(np.sum(np.abs(d) ** 2) for d in self.deltas)))

    @classmethod
    def zero(cls, genus: int) -> "PerturbationDirection":
        return cls(tuple(np.zeros((2, 2), dtype=complex) for _ in range(genus)))

    @classmethod
    def scaling(cls, group: SchottkyGroup, l: int, eps: complex = 1.0) -> "PerturbationDirection":
        ds = [np.zeros((2, 2), dtype=complex) for _ in range(group.genus)]
        ds[l] = eps * group.generators[l].as_array()
        return cls(tuple(ds))

    @classmethod
    def random(cls, group: SchottkyGroup, rng: np.random.Generator, scale: float = 1.0):
        """Random complex direction, each dS_l sized relative to |S_l|."""
        ds = []
        for g in group.generators:
            a = g.as_array()
            r = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            ds.append(scale * np.linalg.norm(a) * r / np.linalg.norm(r))
        return cls(tuple(ds))


def gauge_conjugation_direction(group: SchottkyGroup, x) -> PerturbationDirection:
    """dS_l = X S_l - S_l X: first-order effect of conjugating by I + eps X."""
    x = np.asarray(x, dtype=complex)
    return PerturbationDirection(
        tuple(x @ g.as_array() - g.as_array() @ x for g in group.generators)
    )


def multiplier_direction(group: SchottkyGroup, k: int, dmu: complex = 1.0) -> PerturbationDirection:
    """Chain rule from a change dmu of the multiplier of S_k (fixed points held)."""
    return fixed_point_direction(group, k, "multiplier", dmu)


def fixed_point_direction(group: SchottkyGroup, k: int, which: str, delta: complex = 1.0):
    """Direction for moving one of (attracting, repelling, multiplier) of S_k.

    The partials of the (A, B, mu) parameterisation are rescaled to the
    stored matrix representative of S_k.
    """
    fp = fixed_points(group.generators[k])
    ref = from_fixed_points(fp.attracting, fp.repelling, fp.multiplier).as_array()
    stored = group.generators[k].as_array()
    i = np.unravel_index(np.argmax(np.abs(stored)), (2, 2))
    lam = ref[i] / stored[i]
    parts = dict(zip(("attracting", "repelling", "multiplier"),
                     fixed_point_partials(fp.attracting, fp.repelling, fp.multiplier)))
    ds = [np.zeros((2, 2), dtype=complex) for _ in range(group.genus)]
    ds[k] = delta * parts[which] / lam
    return PerturbationDirection(tuple(ds))


@dataclass
class VariationResult:
    value: complex
    per_circle: list[complex]
    nodes: int
    history: list[tuple[int, complex]] = field(default_factory=list)


class BoundaryCache:
    """Differential coefficients at quadrature nodes on every dD_l, per N."""

    def __init__(self, group: SchottkyGroup, diffs: Sequence[RationalDifferential]):
        self.group = group
        self.diffs = list(diffs)
        self._data: dict[int, list[tuple[np.ndarray, np.ndarray, np.ndarray]]] = {}

    def at(self, n: int):
        """List over l of (nodes u, weights w, values array of shape (len(diffs), n))."""
        if n not in self._data:
            rows = []
            for pair in self.group.disks:
                u, w = quadrature.circle_rule(pair.D.center, pair.D.radius, n)
                vals = np.array([d(u) for d in self.diffs])
                rows.append((u, w, vals))
            self._data[n] = rows
        return self._data[n]


def _weights(group: SchottkyGroup, direction: PerturbationDirection):
    if len(direction.deltas) != group.genus:
        raise ValueError("direction length differs from genus")
    return [d @ true_inverse(g) for d, g in zip(direction.deltas, group.generators)]


def integrand_samples(cache: BoundaryCache, i: int, j: int, direction, n: int):
    """Per circle, eta_i' eta_j' tr[M dS S^-1] at the n nodes."""
    xs = _weights(cache.group, direction)
    return [vals[i] * vals[j] * trace_weight(u, x) for (u, _, vals), x in zip(cache.at(n), xs)]


def _contour_pairs(cache, pairs, xs, n):
    """Array (len(pairs), g) of circle integrals plus integrand L1 sizes."""
    rows = cache.at(n)
    out = np.empty((len(pairs), len(rows)), dtype=complex)
    l1 = np.zeros(len(pairs))
    for l, ((u, w, vals), x) in enumerate(zip(rows, xs)):
        tw = trace_weight(u, x) * w
        for p, (i, j) in enumerate(pairs):
            f = vals[i] * vals[j] * tw
            out[p, l] = np.sum(f)
            l1[p] += np.sum(np.abs(f))
    return out, l1


def _doubling(cache, pairs, xs, nodes, tol, cap):
    n = nodes
    cur, _ = _contour_pairs(cache, pairs, xs, n)
    history = [(n, cur.sum(axis=1))]
    while True:
        if 2 * n > cap:
            raise QuadratureError(f"variation did not settle to {tol} by {n} nodes")
        fine, l1 = _contour_pairs(cache, pairs, xs, 2 * n)
        history.append((2 * n, fine.sum(axis=1)))
        change = np.abs(fine.sum(axis=1) - cur.sum(axis=1))
        if np.all(change <= tol * np.maximum(l1, 1e-300)):
            return fine, 2 * n, history
        cur, n = fine, 2 * n


def _check_normalized(d: RationalDifferential, group: SchottkyGroup, tol: float = 1e-8) -> None:
    if isinstance(d, (HolomorphicDifferential, ThirdKindDifferential)):
        return
    per = a_periods(d, group, tol=None)
    if not np.all((np.abs(per) < tol) | (np.abs(per - 1) < tol)):
        raise ValueError("differential is not normalised over the cycles dD_k")


def vary_integral(
    d_eta: RationalDifferential,
    z,
    zprime,
    direction: PerturbationDirection,
    nodes: int = DEFAULT_NODES,
    group: SchottkyGroup | None = None,
    slot: ThirdKindDifferential | None = None,
    tol: float = NODE_TOL,
    cap: int = NODE_CAP,
) -> VariationResult:
    """First-order change of the integral of d_eta from z to z'."""
    group = group or d_eta.group
    _check_normalized(d_eta, group)
    if slot is None:
        slot = ThirdKindDifferential.build(group, z, zprime, d_eta.max_word_len)
    cache = BoundaryCache(group, [d_eta, slot])
    xs = _weights(group, direction)
    circ, n, hist = _doubling(cache, [(0, 1)], xs, nodes, tol, cap)
    factor = VARIATION_SIGN / TWO_PI_I
    per = [complex(factor * c) for c in circ[0]]
    return VariationResult(complex(sum(per)), per, n, [(k, complex(factor * v[0])) for k, v in hist])


class PeriodVariation:
    """Reusable evaluator of period-matrix variations for one group and basis."""

    def __init__(self, group: SchottkyGroup, basis: Sequence[HolomorphicDifferential],
                 nodes: int = DEFAULT_NODES, tol: float = NODE_TOL, cap: int = NODE_CAP):
        self.group = group
        self.basis = list(basis)
        self.cache = BoundaryCache(group, basis)
        self.nodes, self.tol, self.cap = nodes, tol, cap
        g = group.genus
        self.pairs = [(j, s) for j in range(g) for s in range(j, g)]
        self.last_nodes = nodes

    def __call__(self, direction: PerturbationDirection) -> np.ndarray:
        g = self.group.genus
        xs = _weights(self.group, direction)
        circ, n, _ = _doubling(self.cache, self.pairs, xs, self.nodes, self.tol, self.cap)
        self.last_nodes = n
        # slot differential for periods is 2 pi i d zeta_s
        vals = VARIATION_SIGN * circ.sum(axis=1)
        out = np.empty((g, g), dtype=complex)
        for (j, s), v in zip(self.pairs, vals):
            out[j, s] = out[s, j] = v
        return out

    def unsymmetrised(self, direction: PerturbationDirection) -> np.ndarray:
        """Both (j, s) and (s, j) evaluated separately; for symmetry checks."""
        g = self.group.genus
        pairs = [(j, s) for j in range(g) for s in range(g)]
        xs = _weights(self.group, direction)
        circ, _, _ = _doubling(self.cache, pairs, xs, self.nodes, self.tol, self.cap)
        # order the product as written: first factor j, second s
        return (VARIATION_SIGN * circ.sum(axis=1)).reshape(g, g)


def vary_period_matrix(
    group: SchottkyGroup,
    basis: Sequence[HolomorphicDifferential],
    direction: PerturbationDirection,
    nodes: int = DEFAULT_NODES,
) -> np.ndarray:
    return PeriodVariation(group, basis, nodes)(direction)
