"""Abelian integrals along disk-avoiding polylines, a-periods and period matrices.

Integrals of a pole series are summed term by term from the primitive
log((x - p)/(x - q)).  Along a straight segment the principal logarithm of
(x1 - p)/(x0 - p) is exact whenever the segment subtends an angle below pi
at p; segments are bisected for any pole whose argument change reaches pi/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from . import _kernels, quadrature
from .group import Disk, SchottkyGroup
from .moebius import apply
from .series import HolomorphicDifferential, RationalDifferential

MAX_BISECTIONS = 48
SEGMENT_TOL = 1e-9


class BranchTrackingError(RuntimeError):
    pass


class PathPlanningError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    pass


def _segment_disk_distance(a: complex, b: complex, c: complex) -> float:
    ab = b - a
    L2 = abs(ab) ** 2
    if L2 == 0:
        return abs(c - a)
    t = ((c - a) * np.conj(ab)).real / L2
    t = min(1.0, max(0.0, t))
    return abs(a + t * ab - c)


def segment_clear(a: complex, b: complex, disks: Sequence[Disk]) -> bool:
    return all(_segment_disk_distance(a, b, d.center) >= d.radius * (1 - SEGMENT_TOL) for d in disks)


@dataclass(frozen=True)
class IntegrationPath:
    waypoints: tuple[complex, ...]

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.waypoints)
        if len(pts) < 2:
            raise ValueError("a path needs at least two points")
        object.__setattr__(self, "waypoints", pts)

    @property
    def start(self) -> complex:
        return self.waypoints[0]

    @property
    def end(self) -> complex:
        return self.waypoints[-1]

    def reversed(self) -> "IntegrationPath":
        return IntegrationPath(self.waypoints[::-1])

    def __add__(self, other: "IntegrationPath") -> "IntegrationPath":
        if abs(self.end - other.start) > 1e-14 * max(1.0, abs(self.end)):
            raise ValueError("paths do not join")
        return IntegrationPath(self.waypoints + other.waypoints[1:])

    def check(self, group: SchottkyGroup) -> None:
        disks = [d for _, d in group.all_disks()]
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if not segment_clear(a, b, disks):
                raise PathPlanningError(f"segment {a} -> {b} crosses a disk")


def plan_path(
    group: SchottkyGroup,
    start: complex,
    end: complex,
    margin: float = 0.1,
    vertices: int = 16,
) -> IntegrationPath:
    """Shortest disk-avoiding polyline on a visibility graph.

    Graph nodes are the endpoints plus regular polygons circumscribing every
    disk inflated by ``margin``; the shortest route fixes the homotopy class
    and is stable under small changes of the geometry.
    """
    start, end = complex(start), complex(end)
    disks = [d for _, d in group.all_disks()]
    for p in (start, end):
        if any(d.contains(p) and abs(p - d.center) < d.radius * (1 - SEGMENT_TOL) for d in disks):
            raise PathPlanningError(f"endpoint {p} lies inside a disk")
    if segment_clear(start, end, disks):
        return IntegrationPath((start, end))
    ang = 2 * np.pi * (np.arange(vertices) + 0.5) / vertices
    nodes = [start, end]
    for d in disks:
        R = (1 + margin) * d.radius / np.cos(np.pi / vertices)
        for v in d.center + R * np.exp(1j * ang):
            if all(abs(v - e.center) > e.radius * (1 + 1e-6) for e in disks):
                nodes.append(complex(v))
    n = len(nodes)
    rows, cols, vals = [], [], []
    for i in range(n):
        for j in range(i + 1, n):
            if segment_clear(nodes[i], nodes[j], disks):
                w = abs(nodes[i] - nodes[j])
                rows += [i, j]
                cols += [j, i]
                vals += [w, w]
    graph = csr_matrix((vals, (rows, cols)), shape=(n, n))
    dist, pred = dijkstra(graph, indices=0, return_predecessors=True)
    if not np.isfinite(dist[1]):
        raise PathPlanningError(
            f"no disk-avoiding route from {start} to {end}; disks: "
            + ", ".join(f"({d.center}, r={d.radius})" for d in disks)
        )
    route = [1]
    while route[-1] != 0:
        route.append(pred[route[-1]])
    return IntegrationPath(tuple(nodes[i] for i in reversed(route)))


def _segment(x0, x1, poles, weights, depth):
    total, bad = _kernels.log_increments(x0, x1, poles, weights)
    if bad.any():
        if depth >= MAX_BISECTIONS:
            raise BranchTrackingError(
                f"argument jump >= pi/2 persists on segment {x0} -> {x1}; "
                "the path passes through a pole"
            )
        mid = 0.5 * (x0 + x1)
        p, w = poles[bad], weights[bad]
        total += _segment(x0, mid, p, w, depth + 1) + _segment(mid, x1, p, w, depth + 1)
    return total


def integrate(d: RationalDifferential, path: IntegrationPath) -> complex:
    """Integral of the series along the polyline, summed term by term."""
    total = 0j
    for a, b in zip(path.waypoints, path.waypoints[1:]):
        if a != b:
            total += _segment(a, b, d.poles, d.weights, 0)
    return complex(total)


def difference(d1: RationalDifferential, d2: RationalDifferential) -> RationalDifferential:
    """d1 - d2 as one pole series (layer structure is not kept)."""
    poles = np.concatenate([d1.poles, d2.poles])
    weights = np.concatenate([d1.weights, -d2.weights])
    return RationalDifferential(poles, weights, np.array([0, len(poles)], dtype=np.int64))


def circle_integral(d: RationalDifferential, disk: Disk, nodes: int) -> complex:
    u, w = quadrature.circle_rule(disk.center, disk.radius, nodes)
    return complex(np.sum(d(u) * w))


def a_periods(
    d: RationalDifferential,
    group: SchottkyGroup | None = None,
    nodes: int = quadrature.DEFAULT_NODES,
    tol: float | None = 1e-10,
) -> np.ndarray:
    """Contour integrals over dD_k (global orientation), N-node trapezoid rule.

    With ``tol`` set, the N-node value is compared with 2N nodes and a
    :class:`QuadratureError` raised when they differ by more than tol relative
    to the integrand's L1 size.
    """
    group = group or d.group
    out = np.empty(group.genus, dtype=complex)
    for k, pair in enumerate(group.disks):
        u, w = quadrature.circle_rule(pair.D.center, pair.D.radius, nodes)
        vals = d(u) * w
        out[k] = np.sum(vals)
        if tol is not None:
            fine = circle_integral(d, pair.D, 2 * nodes)
            scale = max(1.0, float(np.sum(np.abs(vals))))
            if abs(fine - out[k]) > tol * scale:
                raise QuadratureError(
                    f"a-period {k + 1} changed by {abs(fine - out[k]):.2e} under node doubling"
                )
    return out


def default_base_point(group: SchottkyGroup) -> complex:
    disks = [d for _, d in group.all_disks()]
    top = max(d.center.imag + d.radius for d in disks)
    span = max(d.center.real + d.radius for d in disks) - min(d.center.real - d.radius for d in disks)
    mid = np.mean([d.center.real for d in disks])
    return complex(mid, top + 0.25 * span + 0.5)


def cycle_anchor(group: SchottkyGroup, s: int) -> complex:
    """Canonical start of the b_s cycle: the top point of dD'_s."""
    dp = group.disks[s].Dprime
    return dp.center + 1j * dp.radius


@dataclass
class PeriodMatrix:
    entries: np.ndarray
    max_word_len: int
    base_point: complex
    symmetry_residual: float = field(init=False)

    def __post_init__(self):
        self.symmetry_residual = float(np.max(np.abs(self.entries - self.entries.T)))

    @property
    def imag_eigenvalues(self) -> np.ndarray:
        im = 0.5 * (self.entries.imag + self.entries.imag.T)
        return np.linalg.eigvalsh(im)


def b_period(
    d: HolomorphicDifferential,
    group: SchottkyGroup,
    s: int,
    base_point: complex | None = None,
) -> complex:
    """Integral of d from z0 to S_s z0.

    The path runs z0 -> q (top of dD'_s) -> S_s q through the fundamental
    domain and returns along S_s applied to the first leg; that last leg is
    integrated as the pulled-back series over the first leg itself.
    """
    z0 = default_base_point(group) if base_point is None else complex(base_point)
    gen = group.generators[s]
    q = cycle_anchor(group, s)
    sq = apply(gen, q)
    leg1 = plan_path(group, z0, q)
    leg2 = plan_path(group, q, sq)
    return integrate(difference(d, d.pullback(gen)), leg1) + integrate(d, leg2)


def period_matrix(
    group: SchottkyGroup,
    basis: Sequence[HolomorphicDifferential],
    base_point: complex | None = None,
) -> PeriodMatrix:
    g = group.genus
    z0 = default_base_point(group) if base_point is None else complex(base_point)
    if not group.in_fundamental_domain(z0):
        raise PathPlanningError(f"base point {z0} is not in the fundamental domain")
    b = np.empty((g, g), dtype=complex)
    for j in range(g):
        for s in range(g):
            b[j, s] = b_period(basis[j], group, s, z0)
    return PeriodMatrix(b, basis[0].max_word_len, z0)
