"""Reference configurations shared by the tests, benchmarks and example configs.

GENUS2 is real-centred (all disk centres on the real axis), which is a
sufficient condition for absolute convergence of the series; its multipliers
are complex, so the generators are loxodromic rather than hyperbolic.
"""

from __future__ import annotations

import numpy as np

from .group import SchottkyGroup

GENUS1_SOURCE_RADIUS = 0.35

GENUS2_ATTRACTING = (-0.5 + 0j, 2.6 + 0j)
GENUS2_REPELLING = (-2.5 + 0j, 0.8 + 0j)
GENUS2_MULTIPLIERS = (0.03 * np.exp(0.4j), 0.02 * np.exp(-0.7j))
GENUS2_WORD_LEN = 8


def genus1(multiplier: complex = 0.04) -> SchottkyGroup:
    """S with attracting fixed point +1, repelling -1; D' = disk(-1, 0.35), D its image."""
    return SchottkyGroup.from_fixed_points([1.0], [-1.0], [multiplier],
                                           source_radii=[GENUS1_SOURCE_RADIUS])


def genus2() -> SchottkyGroup:
    return SchottkyGroup.from_fixed_points(GENUS2_ATTRACTING, GENUS2_REPELLING, GENUS2_MULTIPLIERS)


def genus1_period(multiplier: complex) -> complex:
    """Closed form b_11 = -log(mu) / (2 pi i) under clockwise normalisation."""
    return -np.log(complex(multiplier)) / (2j * np.pi)
