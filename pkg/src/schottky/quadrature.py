"""Trapezoidal quadrature on boundary circles and the global orientation."""

from __future__ import annotations

import numpy as np

#: -1 integrates every boundary circle clockwise, +1 counterclockwise.  Read
#: at call time everywhere, so flipping it flips every contour integral.
ORIENTATION = -1

DEFAULT_NODES = 256


def circle_rule(center: complex, radius: float, n: int = DEFAULT_NODES):
    """Nodes u_k and weights w_k with sum f(u_k) w_k ~ contour integral of f du.

    Equispaced in angle; spectrally accurate for integrands analytic in an
    annulus around the circle.
    """
    theta = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * ORIENTATION * theta)
    u = center + radius * e
    w = (2 * np.pi / n) * 1j * ORIENTATION * radius * e
    return u, w
