"""Linear Poincaré series for Abelian differentials.

Every differential here is a finite sum of simple-pole terms
``w_j / (u - p_j) du`` whose poles are orbit points S z of the Schottky group,
grouped by the word length of S.  Evaluation goes through the pole-sum kernel
and adds layers in order 0, 1, 2, ... with compensated summation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels, quadrature
from .group import SchottkyGroup, WordLayers
from .moebius import INF, MoebiusMap, inverse

log = logging.getLogger(__name__)

POLE_TOL = 1e-12
DEFAULT_MAX_LEN_CAP = 16


class PoleProximityError(ValueError):
    pass


class TruncationError(RuntimeError):
    pass


def _apply_layer(mats: np.ndarray, p) -> np.ndarray:
    if p is INF:
        num, den = mats[:, 0, 0], mats[:, 1, 0]
    else:
        num = mats[:, 0, 0] * p + mats[:, 0, 1]
        den = mats[:, 1, 0] * p + mats[:, 1, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den != 0, num / den, complex(np.inf))


@dataclass(frozen=True, eq=False)
class RationalDifferential:
    """sum_j weights[j] / (u - poles[j]) du, layered by ``offsets``."""

    poles: np.ndarray
    weights: np.ndarray
    offsets: np.ndarray

    @property
    def n_layers(self) -> int:
        return len(self.offsets) - 1

    def layer_sums(self, u, check_poles: bool = True) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        sums, mind = _kernels.pole_layer_sums(u, self.poles, self.weights, self.offsets)
        if check_poles and len(mind) and np.min(mind) < POLE_TOL:
            i = int(np.argmin(mind))
            raise PoleProximityError(
                f"evaluation point {u[i]} within {mind[i]:.2e} of a pole of the series"
            )
        return sums

    def __call__(self, u):
        """Coefficient d(differential)/du at u (scalar or array)."""
        scalar = np.ndim(u) == 0
        if scalar and u is INF:
            raise ValueError("coefficient at infinity is not defined in this chart")
        vals = _kernels.compensated_sum(self.layer_sums(u), axis=1)
        return complex(vals[0]) if scalar else vals

    def layer_norms(self, probes) -> np.ndarray:
        """Max over probe points of |layer-L contribution| for every L."""
        return np.max(np.abs(self.layer_sums(probes)), axis=0)

    def pullback(self, m: MoebiusMap) -> "RationalDifferential":
        """m^* of the differential: poles move to m^-1(p), weights unchanged.

        Exact for each term because (1/(u-p) - 1/(u-q)) du is the only
        differential on the sphere with those residues; terms whose pole goes
        to infinity drop out (their residue moves to infinity).
        """
        mi = inverse(m)
        p = self.poles
        with np.errstate(divide="ignore", invalid="ignore"):
            den = mi.c21 * p + mi.c22
            newp = (mi.c11 * p + mi.c12) / den
        keep = den != 0
        counts = np.diff(self.offsets)
        layer_id = np.repeat(np.arange(len(counts)), counts)
        new_counts = np.bincount(layer_id[keep], minlength=len(counts))
        offs = np.concatenate([[0], np.cumsum(new_counts)]).astype(np.int64)
        return RationalDifferential(newp[keep], self.weights[keep], offs)

    def scaled(self, c: complex) -> "RationalDifferential":
        return RationalDifferential(self.poles, self.weights * c, self.offsets)


def geometric_tail(norms: np.ndarray) -> float:
    """Tail beyond the last layer assuming the last ratio persists."""
    if len(norms) < 2 or norms[-2] == 0:
        return float(norms[-1]) if len(norms) else 0.0
    r = norms[-1] / norms[-2]
    if r >= 1:
        return float("inf")
    return float(norms[-1] * r / (1 - r))


def default_probes(group: SchottkyGroup, per_circle: int = 16) -> np.ndarray:
    pts = [d.boundary_points(per_circle) for _, d in group.all_disks()]
    return np.concatenate(pts)


def _orbit_arrays(layers: WordLayers, points, signs, word_filter=None):
    poles, weights, counts = [], [], []
    for L, (mats, letters) in enumerate(zip(layers.matrices, layers.letters)):
        if word_filter is not None:
            keep = word_filter(letters)
            mats = mats[keep]
        lp, lw = [], []
        for p, s in zip(points, signs):
            img = _apply_layer(mats, p)
            lp.append(img)
            lw.append(np.full(len(img), s, dtype=complex))
        # interleave per word: (S p0, S p1), (S' p0, S' p1), ...
        lp = np.stack(lp, axis=1).reshape(-1)
        lw = np.stack(lw, axis=1).reshape(-1)
        finite = np.isfinite(lp)
        poles.append(lp[finite])
        weights.append(lw[finite])
        counts.append(int(finite.sum()))
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return np.concatenate(poles), np.concatenate(weights), offsets


def _choose_length(build, group, max_word_len, tol, probes, cap):
    """Run ``build(L)`` for fixed L, or grow L until the geometric tail < tol."""
    if max_word_len is not None:
        if max_word_len < 0:
            raise ValueError("max_word_len must be nonnegative")
        return build(max_word_len)
    if tol is None:
        raise ValueError("give max_word_len or tol")
    probes = default_probes(group) if probes is None else probes
    for L in range(1, cap + 1):
        d = build(L)
        tail = geometric_tail(d.layer_norms(probes))
        if L >= 2 and tail < tol:
            return d
    raise TruncationError(f"geometric tail still >= {tol} at word length cap {cap}")


class ThirdKindDifferential(RationalDifferential):
    """d eta_{z z'}: simple poles at z (residue +1) and z' (residue -1)."""

    def __init__(self, group, z, zprime, poles, weights, offsets, max_word_len, tail_estimate):
        super().__init__(poles, weights, offsets)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "zprime", zprime)
        object.__setattr__(self, "max_word_len", max_word_len)
        object.__setattr__(self, "tail_estimate", tail_estimate)

    @classmethod
    def build(
        cls,
        group: SchottkyGroup,
        z,
        zprime,
        max_word_len: int | None = None,
        tol: float | None = None,
        probes=None,
        cap: int = DEFAULT_MAX_LEN_CAP,
        check: bool = True,
    ) -> "ThirdKindDifferential":
        if check:
            group.require_valid()
            if z == zprime:
                raise ValueError("poles must be distinct")
            for p in (z, zprime):
                if not group.in_fundamental_domain(p):
                    raise ValueError(f"pole {p} is not in the fundamental domain")
        z = z if z is INF else complex(z)
        zprime = zprime if zprime is INF else complex(zprime)
        probe_pts = default_probes(group) if probes is None else probes

        def make(L):
            layers = group.word_layers(L)
            poles, weights, offsets = _orbit_arrays(layers, (z, zprime), (1.0, -1.0))
            base = RationalDifferential(poles, weights, offsets)
            norms = base.layer_norms(probe_pts)
            return cls(group, z, zprime, poles, weights, offsets, L, float(norms[-1]))

        return _choose_length(make, group, max_word_len, tol, probe_pts, cap)


class HolomorphicDifferential(RationalDifferential):
    """Normalised holomorphic basis element d zeta_k (a-period over dD_k is 1).

    Poles T A_k (+c) and T B_k (-c) for coset representatives T of <S_k>,
    i.e. reduced words whose last letter is not S_k^{+-1}.
    """

    def __init__(self, group, k, poles, weights, offsets, max_word_len, normalization, tail_estimate):
        super().__init__(poles, weights, offsets)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "max_word_len", max_word_len)
        object.__setattr__(self, "normalization", normalization)
        object.__setattr__(self, "tail_estimate", tail_estimate)

    @classmethod
    def build(
        cls,
        group: SchottkyGroup,
        k: int,
        max_word_len: int | None = None,
        tol: float | None = None,
        nodes: int = quadrature.DEFAULT_NODES,
        probes=None,
        cap: int = DEFAULT_MAX_LEN_CAP,
        check: bool = True,
    ) -> "HolomorphicDifferential":
        if check:
            group.require_valid()
        if not 0 <= k < group.genus:
            raise IndexError(f"generator index {k} out of range")
        fp = group.fixed_points(k)
        probe_pts = default_probes(group) if probes is None else probes

        def keep(letters):
            if letters.shape[1] == 0:
                return np.ones(len(letters), dtype=bool)
            return letters[:, -1] // 2 != k

        def make(L):
            layers = group.word_layers(L)
            poles, weights, offsets = _orbit_arrays(
                layers, (fp.attracting, fp.repelling), (1.0, -1.0), keep
            )
            raw = RationalDifferential(poles, weights, offsets)
            disk = group.disks[k].D
            u, w = quadrature.circle_rule(disk.center, disk.radius, nodes)
            c = 1.0 / complex(np.sum(raw(u) * w))
            norms = raw.layer_norms(probe_pts) * abs(c)
            return cls(group, k, poles, weights * c, offsets, L, c, float(norms[-1]))

        return _choose_length(make, group, max_word_len, tol, probe_pts, cap)


def holomorphic_basis(group: SchottkyGroup, max_word_len: int | None = None, **kw):
    return [HolomorphicDifferential.build(group, k, max_word_len, **kw) for k in range(group.genus)]


def eval_third_kind(d: ThirdKindDifferential, u) -> complex:
    return d(u)


def eval_holomorphic(h: HolomorphicDifferential, u) -> complex:
    return h(u)


def layer_norms(d: RationalDifferential, probes) -> np.ndarray:
    return d.layer_norms(probes)


def automorphy_defect(d: RationalDifferential, group: SchottkyGroup, k: int, n: int = 64) -> float:
    """max |d(S_k u) S_k'(u) - d(u)| over u on dD'_k."""
    gen = group.generators[k]
    u = group.disks[k].Dprime.boundary_points(n)
    den = gen.c21 * u + gen.c22
    su = (gen.c11 * u + gen.c12) / den
    deriv = gen.det / den**2
    return float(np.max(np.abs(d(su) * deriv - d(u))))
