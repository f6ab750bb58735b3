"""Classical Schottky groups: disks, generators, validation and reduced words.

Letters are encoded as integers: ``2k`` is generator k and ``2k + 1`` its
inverse (generators are 0-based in the Python API), so ``letter ^ 1`` is the
inverse letter and sorting letters gives the lexicographic order
S_0 < S_0^-1 < S_1 < ...
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .moebius import (
    INF,
    Circle,
    FixedPointKind,
    MoebiusError,
    MoebiusMap,
    apply,
    compose,
    fixed_points,
    from_fixed_points,
    image_of_circle,
    inverse,
)

DISJOINT_TOL = 1e-12
BOUNDARY_TOL = 1e-10


class StructuralError(ValueError):
    """The group description is malformed (as opposed to geometrically invalid)."""


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise StructuralError(f"disk radius must be positive, got {self.radius}")

    def contains(self, p, strict: bool = True) -> bool:
        if p is INF:
            return False
        d = abs(complex(p) - self.center)
        return d < self.radius if strict else d <= self.radius

    def boundary_points(self, n: int) -> np.ndarray:
        t = 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * t)


@dataclass(frozen=True)
class DiskPair:
    """D (target, holds the attracting fixed point) and D' (source)."""

    D: Disk
    Dprime: Disk


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class ValidationReport:
    structural_errors: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)

    @property
    def structural_ok(self) -> bool:
        return not self.structural_errors

    @property
    def usable(self) -> bool:
        return self.structural_ok and all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def margin(self, prefix: str) -> float:
        vals = [c.margin for c in self.checks if c.name.startswith(prefix)]
        return min(vals) if vals else float("nan")

    def to_dict(self) -> dict:
        return {
            "usable": self.usable,
            "structural_errors": list(self.structural_errors),
            "checks": [
                {"name": c.name, "passed": c.passed, "margin": c.margin, "detail": c.detail}
                for c in self.checks
            ],
        }


class GroupValidationError(ValueError):
    def __init__(self, report: ValidationReport):
        msgs = report.structural_errors + [f"{c.name}: {c.detail}" for c in report.failures()]
        super().__init__("invalid Schottky group: " + "; ".join(msgs))
        self.report = report


@dataclass(frozen=True)
class GroupWord:
    letters: tuple[int, ...]
    matrix: MoebiusMap

    @property
    def length(self) -> int:
        return len(self.letters)

    def readable(self) -> str:
        if not self.letters:
            return "id"
        return " ".join(f"S{l // 2 + 1}" + ("^-1" if l & 1 else "") for l in self.letters)


@dataclass(frozen=True)
class WordLayers:
    """All reduced words up to a length, stored layer by layer.

    Within a layer words are in lexicographic order of their letter strings.
    ``matrices`` rows are projectively normalised (largest entry modulus one).
    """

    matrices: list[np.ndarray]  # layer L: (n_L, 2, 2)
    letters: list[np.ndarray]  # layer L: (n_L, L) int8

    @property
    def max_len(self) -> int:
        return len(self.matrices) - 1

    def count(self) -> int:
        return sum(len(m) for m in self.matrices)


def _normalise_rows(mats: np.ndarray) -> np.ndarray:
    flat = np.abs(mats.reshape(len(mats), 4))
    idx = np.argmax(flat, axis=1)
    piv = mats.reshape(len(mats), 4)[np.arange(len(mats)), idx]
    return mats / piv[:, None, None]


@dataclass(frozen=True, eq=False)
class SchottkyGroup:
    generators: tuple[MoebiusMap, ...]
    disks: tuple[DiskPair, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "disks", tuple(self.disks))
        object.__setattr__(self, "_layer_cache", {})

    @property
    def genus(self) -> int:
        return len(self.generators)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_fixed_points(
        cls,
        attracting: Sequence[complex],
        repelling: Sequence[complex],
        multipliers: Sequence[complex],
        source_radii: Sequence[float] | None = None,
    ) -> "SchottkyGroup":
        """Build generators from (A, B, mu) triples.

        Without ``source_radii`` the disks are the Apollonius circles
        |(u - A)/(u - B)| = sqrt|mu| (around A) and 1/sqrt|mu| (around B),
        which the generator maps onto each other.  With ``source_radii`` D' is
        the disk of that radius centred at the repelling point and D is its
        exact image.
        """
        if not (len(attracting) == len(repelling) == len(multipliers)):
            raise StructuralError("attracting/repelling/multipliers lengths differ")
        gens = [from_fixed_points(a, b, m) for a, b, m in zip(attracting, repelling, multipliers)]
        if source_radii is None:
            disks = [apollonius_disks(a, b, m) for a, b, m in zip(attracting, repelling, multipliers)]
        else:
            if len(source_radii) != len(gens):
                raise StructuralError("source_radii length differs from genus")
            disks = [
                disks_from_source(g, Disk(complex(b), r))
                for g, b, r in zip(gens, repelling, source_radii)
            ]
        return cls(tuple(gens), tuple(disks))

    def perturbed(self, deltas: Sequence[np.ndarray], t: complex = 1.0) -> "SchottkyGroup":
        """Group with matrices S_l + t*dS_l; D'_l kept, D_l re-imaged."""
        if len(deltas) != self.genus:
            raise StructuralError("direction length differs from genus")
        gens = []
        disks = []
        for g, d, pair in zip(self.generators, deltas, self.disks):
            ng = MoebiusMap.from_array(g.as_array() + t * np.asarray(d, dtype=complex))
            gens.append(ng)
            disks.append(disks_from_source(ng, pair.Dprime))
        return SchottkyGroup(tuple(gens), tuple(disks))

    def conjugated(self, c: MoebiusMap) -> "SchottkyGroup":
        """Group C S_k C^-1 with disks C(D_k), C(D'_k); C must keep disks finite."""
        ci = inverse(c)
        gens = [compose(compose(c, g), ci) for g in self.generators]
        disks = []
        for pair in self.disks:
            out = []
            for dk in (pair.D, pair.Dprime):
                img = image_of_circle(c, dk.center, dk.radius)
                if not isinstance(img.image, Circle) or not img.interior_to_interior:
                    raise MoebiusError("conjugation sends a disk through or around infinity")
                out.append(Disk(img.image.center, img.image.radius))
            disks.append(DiskPair(*out))
        return SchottkyGroup(tuple(gens), tuple(disks))

    # -- geometry -------------------------------------------------------------

    def all_disks(self) -> list[tuple[str, Disk]]:
        out = []
        for k, pair in enumerate(self.disks):
            out.append((f"D{k + 1}", pair.D))
            out.append((f"D'{k + 1}", pair.Dprime))
        return out

    def validate(self) -> ValidationReport:
        return validate(self)

    def require_valid(self) -> "SchottkyGroup":
        rep = validate(self)
        if not rep.usable:
            raise GroupValidationError(rep)
        return self

    def in_fundamental_domain(self, p) -> bool:
        return in_fundamental_domain(self, p)[0]

    def fixed_points(self, k: int):
        return fixed_points(self.generators[k])

    # -- words ----------------------------------------------------------------

    def letter_matrix(self, letter: int) -> MoebiusMap:
        g = self.generators[letter // 2]
        return inverse(g) if letter & 1 else g

    def word_layers(self, max_len: int) -> WordLayers:
        cache = self._layer_cache
        if max_len in cache:
            return cache[max_len]
        g = self.genus
        letter_mats = np.array(
            [self.letter_matrix(l).normalized().as_array() for l in range(2 * g)]
        )
        mats = [np.eye(2, dtype=complex)[None, :, :]]
        letters = [np.zeros((1, 0), dtype=np.int8)]
        for length in range(1, max_len + 1):
            prev_m, prev_l = mats[-1], letters[-1]
            n = len(prev_m)
            # new word = prefix * letter; rows ordered (prefix, letter) -> lexicographic
            cand = np.einsum("pij,ljk->plik", prev_m, letter_mats)
            cand = cand.reshape(n * 2 * g, 2, 2)
            cl = np.repeat(np.arange(2 * g, dtype=np.int8)[None, :], n, axis=0).reshape(-1)
            pre = np.repeat(np.arange(n), 2 * g)
            if length == 1:
                keep = np.ones(len(cl), dtype=bool)
            else:
                keep = cl != (prev_l[pre, -1] ^ 1)
            nm = _normalise_rows(cand[keep])
            nl = np.concatenate([prev_l[pre[keep]], cl[keep, None]], axis=1)
            mats.append(nm)
            letters.append(nl)
        layers = WordLayers(mats, letters)
        cache[max_len] = layers
        return layers


def apollonius_disks(attracting: complex, repelling: complex, multiplier: complex) -> DiskPair:
    a, b = complex(attracting), complex(repelling)
    rho2 = abs(complex(multiplier))
    rho = np.sqrt(rho2)
    if not 0 < rho2 < 1:
        raise StructuralError("multiplier modulus must lie in (0, 1)")
    center_d = (a - rho2 * b) / (1 - rho2)
    center_dp = (b - rho2 * a) / (1 - rho2)
    radius = rho * abs(a - b) / (1 - rho2)
    return DiskPair(Disk(center_d, radius), Disk(center_dp, radius))


def disks_from_source(gen: MoebiusMap, source: Disk) -> DiskPair:
    """D' = source and D = gen(exterior of D')."""
    img = image_of_circle(gen, source.center, source.radius)
    if not isinstance(img.image, Circle):
        raise StructuralError("generator sends the source circle to a line")
    return DiskPair(Disk(img.image.center, img.image.radius), source)


def validate(group: SchottkyGroup) -> ValidationReport:
    rep = ValidationReport()
    g = len(group.generators)
    if g < 1:
        rep.structural_errors.append("genus must be at least 1")
    if len(group.disks) != g:
        rep.structural_errors.append(
            f"{g} generators but {len(group.disks)} disk pairs"
        )
    if not rep.structural_ok:
        return rep

    named = group.all_disks()
    for (n1, d1), (n2, d2) in itertools.combinations(named, 2):
        gap = abs(d1.center - d2.center) - (d1.radius + d2.radius)
        rep.checks.append(
            Check(
                f"disjoint:{n1}/{n2}",
                gap > DISJOINT_TOL,
                float(gap),
                "" if gap > DISJOINT_TOL else f"disks {n1} and {n2} overlap",
            )
        )

    for k, (gen, pair) in enumerate(zip(group.generators, group.disks)):
        tag = k + 1
        img = image_of_circle(gen, pair.Dprime.center, pair.Dprime.radius)
        if isinstance(img.image, Circle):
            scale = max(1.0, abs(pair.D.center) + pair.D.radius)
            resid = max(
                abs(img.image.center - pair.D.center), abs(img.image.radius - pair.D.radius)
            ) / scale
            ok = resid <= BOUNDARY_TOL
            rep.checks.append(
                Check(f"boundary:S{tag}", ok, float(resid),
                      "" if ok else f"S{tag}(dD'{tag}) differs from dD{tag} by {resid:.3e}")
            )
        else:
            rep.checks.append(
                Check(f"boundary:S{tag}", False, float("inf"), f"S{tag}(dD'{tag}) is a line")
            )
        ok = not img.interior_to_interior
        rep.checks.append(
            Check(f"orientation:S{tag}", ok, 0.0,
                  "" if ok else f"S{tag} maps inside of D'{tag} to the inside of its image")
        )
        try:
            fp = fixed_points(gen)
        except MoebiusError as exc:
            rep.checks.append(Check(f"loxodromic:S{tag}", False, 0.0, str(exc)))
            continue
        lox = fp.kind == FixedPointKind.LOXODROMIC
        rep.checks.append(
            Check(f"loxodromic:S{tag}", lox, float(1 - abs(fp.multiplier)),
                  "" if lox else f"S{tag} is {fp.kind.value}")
        )
        if not lox:
            continue
        for which, pt, disk, dname in (
            ("attracting", fp.attracting, pair.D, f"D{tag}"),
            ("repelling", fp.repelling, pair.Dprime, f"D'{tag}"),
        ):
            if pt is INF:
                m, ok = float("-inf"), False
            else:
                m = disk.radius - abs(pt - disk.center)
                ok = m > 0
            rep.checks.append(
                Check(f"{which}:S{tag}", ok, float(m),
                      "" if ok else f"{which} fixed point of S{tag} outside {dname}")
            )
    return rep


def words_up_to(group: SchottkyGroup, max_len: int) -> Iterator[GroupWord]:
    """Every reduced word of length <= max_len, depth first, one compose each."""
    if max_len < 0:
        raise ValueError("max_len must be nonnegative")
    g = group.genus
    letter_maps = [group.letter_matrix(l) for l in range(2 * g)]

    def walk(letters: tuple[int, ...], mat: MoebiusMap) -> Iterator[GroupWord]:
        yield GroupWord(letters, mat)
        if len(letters) == max_len:
            return
        for l in range(2 * g):
            if letters and l == letters[-1] ^ 1:
                continue
            yield from walk(letters + (l,), compose(mat, letter_maps[l]).normalized())

    yield from walk((), MoebiusMap.identity())


def is_coset_representative(letters: Sequence[int], k: int) -> bool:
    return not letters or letters[-1] // 2 != k


def cosets_mod_cyclic(group: SchottkyGroup, k: int, max_len: int) -> Iterator[GroupWord]:
    """One representative per left coset T<S_k>: reduced words not ending in S_k^{+-1}."""
    if not 0 <= k < group.genus:
        raise IndexError(f"generator index {k} out of range for genus {group.genus}")
    for w in words_up_to(group, max_len):
        if is_coset_representative(w.letters, k):
            yield w


def in_fundamental_domain(group: SchottkyGroup, p, tol: float = 1e-12) -> tuple[bool, bool]:
    """(inside, on_boundary): outside every open disk; boundary points count as inside."""
    if p is INF:
        return True, False
    p = complex(p)
    on_boundary = False
    for _, d in group.all_disks():
        dist = abs(p - d.center)
        if dist < d.radius - tol * max(1.0, d.radius):
            return False, False
        if dist <= d.radius + tol * max(1.0, d.radius):
            on_boundary = True
    return True, on_boundary


def word_matrix(group: SchottkyGroup, letters: Sequence[int]) -> MoebiusMap:
    m = MoebiusMap.identity()
    for l in letters:
        m = compose(m, group.letter_matrix(l))
    return m


def apply_word(group: SchottkyGroup, letters: Sequence[int], p):
    return apply(word_matrix(group, letters), p)
