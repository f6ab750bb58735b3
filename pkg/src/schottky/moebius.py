"""Möbius transformations as 2x2 complex matrices acting on the Riemann sphere.

Matrices are never forced to unit determinant; every quantity derived here is
projectively invariant, so a matrix and any nonzero multiple of it describe the
same map.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

DET_TOL = 1e-300
MULTIPLIER_TIE_TOL = 1e-14


class PointAtInfinity:
    """The point at infinity of the extended complex plane (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (PointAtInfinity, ())


INF = PointAtInfinity()

Point = Union[complex, PointAtInfinity]


def is_infinite(p) -> bool:
    return p is INF


def as_point(p) -> Point:
    """Coerce numbers to ``complex``; ``INF`` passes through."""
    if p is INF:
        return INF
    z = complex(p)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError(f"finite point expected, got {p!r}; use INF for infinity")
    return z


class MoebiusError(ValueError):
    pass


@dataclass(frozen=True)
class MoebiusMap:
    """u -> (c11 u + c12) / (c21 u + c22)."""

    c11: complex
    c12: complex
    c21: complex
    c22: complex

    def __post_init__(self):
        for name in ("c11", "c12", "c21", "c22"):
            v = complex(getattr(self, name))
            if not (np.isfinite(v.real) and np.isfinite(v.imag)):
                raise MoebiusError(f"non-finite matrix entry {name}={v}")
            object.__setattr__(self, name, v)
        if abs(self.det) <= DET_TOL:
            raise MoebiusError("singular matrix: |det| <= 1e-300")

    @classmethod
    def from_array(cls, a) -> "MoebiusMap":
        a = np.asarray(a, dtype=complex)
        return cls(a[0, 0], a[0, 1], a[1, 0], a[1, 1])

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1, 0, 0, 1)

    @property
    def det(self) -> complex:
        return self.c11 * self.c22 - self.c12 * self.c21

    @property
    def trace(self) -> complex:
        return self.c11 + self.c22

    def as_array(self) -> np.ndarray:
        return np.array([[self.c11, self.c12], [self.c21, self.c22]], dtype=complex)

    def normalized(self) -> "MoebiusMap":
        """Projective representative whose largest entry has modulus one."""
        a = self.as_array()
        return MoebiusMap.from_array(a / a.flat[np.argmax(np.abs(a))])

    @property
    def pole(self) -> Point:
        """Preimage of infinity."""
        if self.c21 == 0:
            return INF
        return -self.c22 / self.c21

    def __call__(self, p) -> Point:
        return apply(self, p)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return compose(self, other)

    def derivative(self, u: complex) -> complex:
        """d/du of the action at a finite non-pole point."""
        d = self.c21 * u + self.c22
        return self.det / (d * d)


def apply(m: MoebiusMap, p) -> Point:
    if p is INF:
        if m.c21 == 0:
            return INF
        return m.c11 / m.c21
    p = complex(p)
    den = m.c21 * p + m.c22
    if den == 0:
        return INF
    return (m.c11 * p + m.c12) / den


def apply_array(m: MoebiusMap, u: np.ndarray) -> np.ndarray:
    """Vectorised action on finite points; poles map to complex('inf')."""
    u = np.asarray(u, dtype=complex)
    den = m.c21 * u + m.c22
    num = m.c11 * u + m.c12
    out = np.full(u.shape, complex(np.inf, 0.0))
    ok = den != 0
    out[ok] = num[ok] / den[ok]
    return out


def compose(a: MoebiusMap, b: MoebiusMap) -> MoebiusMap:
    """Matrix of a o b."""
    return MoebiusMap(
        a.c11 * b.c11 + a.c12 * b.c21,
        a.c11 * b.c12 + a.c12 * b.c22,
        a.c21 * b.c11 + a.c22 * b.c21,
        a.c21 * b.c12 + a.c22 * b.c22,
    )


def inverse(m: MoebiusMap) -> MoebiusMap:
    """True matrix inverse (adjugate divided by the determinant)."""
    d = m.det
    return MoebiusMap(m.c22 / d, -m.c12 / d, -m.c21 / d, m.c11 / d)


def projectively_equal(a: MoebiusMap, b: MoebiusMap, tol: float = 1e-12) -> bool:
    x = a.normalized().as_array()
    y = b.normalized().as_array()
    # align phases through the largest entry of x
    k = np.argmax(np.abs(x))
    if y.flat[k] == 0:
        return False
    y = y * (x.flat[k] / y.flat[k])
    return bool(np.max(np.abs(x - y)) <= tol)


class FixedPointKind(str, Enum):
    LOXODROMIC = "loxodromic"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"


@dataclass(frozen=True)
class FixedPoints:
    attracting: Point
    repelling: Point
    multiplier: complex
    kind: FixedPointKind


def _eigvec_point(m: MoebiusMap, lam: complex) -> Point:
    # Two candidate eigenvectors; keep the better conditioned one.
    x1, y1 = m.c12, lam - m.c11
    x2, y2 = lam - m.c22, m.c21
    if abs(x1) + abs(y1) >= abs(x2) + abs(y2):
        x, y = x1, y1
    else:
        x, y = x2, y2
    if y == 0:
        return INF
    return x / y


def fixed_points(m: MoebiusMap) -> FixedPoints:
    """Fixed points ordered (attracting, repelling) with multiplier |mu| <= 1.

    The multiplier is the eigenvalue ratio lambda_small / lambda_large, which is
    the derivative of the map at its attracting fixed point.
    """
    scale = max(abs(m.c11), abs(m.c12), abs(m.c21), abs(m.c22))
    if (
        abs(m.c12) <= 1e-15 * scale
        and abs(m.c21) <= 1e-15 * scale
        and abs(m.c11 - m.c22) <= 1e-15 * scale
    ):
        raise MoebiusError("map is the identity; fixed points undefined")
    t = m.trace
    disc = cmath.sqrt(t * t - 4 * m.det)
    l1 = (t + disc) / 2
    l2 = (t - disc) / 2
    if abs(l1) < abs(l2):
        l1, l2 = l2, l1
    if abs(disc) <= 1e-12 * max(abs(t), abs(cmath.sqrt(m.det))):
        # degenerate eigenvalue: parabolic
        lam = t / 2
        p = _eigvec_point(m, lam)
        return FixedPoints(p, p, complex(1.0), FixedPointKind.PARABOLIC)
    mu = l2 / l1
    att = _eigvec_point(m, l1)
    rep = _eigvec_point(m, l2)
    if abs(abs(mu) - 1.0) <= MULTIPLIER_TIE_TOL:
        kind = FixedPointKind.ELLIPTIC
    else:
        kind = FixedPointKind.LOXODROMIC
    return FixedPoints(att, rep, mu, kind)


def from_fixed_points(attracting: complex, repelling: complex, multiplier: complex) -> MoebiusMap:
    """Map with (S u - A)/(S u - B) = mu (u - A)/(u - B).

    The matrix is adj(W) diag(mu, 1) W with W = ((1, -A), (1, -B)); it is not
    normalised, and :func:`fixed_point_partials` differentiates exactly this
    representative.
    """
    a, b, mu = complex(attracting), complex(repelling), complex(multiplier)
    if a == b:
        raise MoebiusError("fixed points must be distinct")
    return MoebiusMap.from_array(_fp_matrix(a, b, mu))


def _fp_matrix(a: complex, b: complex, mu: complex) -> np.ndarray:
    adj_w = np.array([[-b, a], [-1, 1]], dtype=complex)
    d = np.diag([mu, 1.0]).astype(complex)
    w = np.array([[1, -a], [1, -b]], dtype=complex)
    return adj_w @ d @ w


def fixed_point_partials(attracting: complex, repelling: complex, multiplier: complex):
    """Partial derivatives (dS/dA, dS/dB, dS/dmu) of :func:`from_fixed_points`.

    The map is holomorphic in all three parameters, so these are complex
    derivatives of the stored matrix representative.
    """
    a, b, mu = complex(attracting), complex(repelling), complex(multiplier)
    adj_w = np.array([[-b, a], [-1, 1]], dtype=complex)
    d = np.diag([mu, 1.0]).astype(complex)
    w = np.array([[1, -a], [1, -b]], dtype=complex)
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    e11 = np.array([[1, 0], [0, 0]], dtype=complex)
    e22 = np.array([[0, 0], [0, 1]], dtype=complex)
    d_a = e12 @ d @ w + adj_w @ d @ (-e12)
    d_b = (-e11) @ d @ w + adj_w @ d @ (-e22)
    d_mu = adj_w @ e11 @ w
    return d_a, d_b, d_mu


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float


@dataclass(frozen=True)
class Line:
    """Line through ``point`` with unit ``direction``."""

    point: complex
    direction: complex


@dataclass(frozen=True)
class CircleImage:
    image: Union[Circle, Line]
    interior_to_interior: bool


def _reflect(q: Point, center: complex, radius: float) -> Point:
    """Inversion of q in the circle; infinity and the centre swap."""
    if q is INF:
        return center
    if q == center:
        return INF
    return center + radius * radius / np.conj(q - center)


def image_of_circle(m: MoebiusMap, center: complex, radius: float, tol: float = 1e-12) -> CircleImage:
    """Exact image of the circle |u - center| = radius.

    The image centre is m applied to the inversion of m's pole in the circle
    (symmetric points map to symmetric points, and the image of the pole is
    infinity, whose symmetric partner is the image centre).
    """
    center = complex(center)
    radius = float(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    pole = m.pole
    if pole is not INF and abs(abs(pole - center) - radius) <= tol * max(1.0, radius):
        # circle through the pole: image is a line
        p1 = apply(m, center + radius * cmath.exp(1j * np.angle(pole - center) + 2.0943951023931953j))
        p2 = apply(m, center + radius * cmath.exp(1j * np.angle(pole - center) - 2.0943951023931953j))
        direction = (p2 - p1) / abs(p2 - p1)
        inner = apply(m, center)
        return CircleImage(Line(p1, direction), _left_of(inner, p1, direction))
    new_center = apply(m, _reflect(pole, center, radius))
    new_radius = abs(apply(m, center + radius) - new_center)
    pole_inside = pole is not INF and abs(pole - center) < radius
    return CircleImage(Circle(new_center, float(new_radius)), not pole_inside)


def _left_of(p: complex, base: complex, direction: complex) -> bool:
    # for lines "interior" means the left half-plane w.r.t. direction
    return float(np.imag((p - base) * np.conj(direction))) > 0
