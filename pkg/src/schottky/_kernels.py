"""Hot loops: pole sums over orbit points and branch-tracked log increments.

Each kernel has a numba version and a pure-numpy version with the same
signature.  The numba path is used when numba imports and the environment
variable ``SCHOTTKY_DISABLE_NUMBA`` is unset (or "0").  Both accumulate with
Neumaier compensation in a fixed order, so results are deterministic for a
given backend; the two backends agree to rounding but not bitwise.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("SCHOTTKY_DISABLE_NUMBA", "0") not in ("", "0", "false", "False")

try:
    if _DISABLED:
        raise ImportError
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the TBB layer shipped here is too old and only produces a warning
        numba.config.THREADING_LAYER = "omp"
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised with the env flag
    HAVE_NUMBA = False

HALF_PI = np.pi / 2
_CHUNK = 1 << 21  # max terms materialised at once by the numpy path


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def set_threads(n: int) -> None:
    if HAVE_NUMBA and n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# numpy implementations


def _neumaier_add(s, c, x):
    """Vectorised Neumaier step on real arrays; returns (s, c)."""
    t = s + x
    big = np.abs(s) >= np.abs(x)
    c = c + np.where(big, (s - t) + x, (x - t) + s)
    return t, c


def _csum_add(acc, x):
    sr, cr, si, ci = acc
    sr, cr = _neumaier_add(sr, cr, x.real)
    si, ci = _neumaier_add(si, ci, x.imag)
    return sr, cr, si, ci


def pole_layer_sums_numpy(points, poles, weights, offsets):
    npts = points.shape[0]
    nl = offsets.shape[0] - 1
    out = np.zeros((npts, nl), dtype=np.complex128)
    mind = np.full(npts, np.inf)
    step = max(1, _CHUNK // max(npts, 1))
    for l in range(nl):
        z = np.zeros(npts)
        acc = (z, z.copy(), z.copy(), z.copy())
        for j0 in range(offsets[l], offsets[l + 1], step):
            j1 = min(j0 + step, offsets[l + 1])
            d = points[:, None] - poles[None, j0:j1]
            ad = np.abs(d)
            mind = np.minimum(mind, ad.min(axis=1))
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(ad > 0, weights[None, j0:j1] / d, 0)
            acc = _csum_add(acc, terms.sum(axis=1))
        sr, cr, si, ci = acc
        out[:, l] = (sr + cr) + 1j * (si + ci)
    return out, mind


def log_increments_numpy(x0, x1, poles, weights):
    """sum_j w_j Log((x1 - p_j)/(x0 - p_j)) over poles with |arg| < pi/2.

    Returns (sum, bad) where ``bad`` flags poles whose argument change is too
    large to trust the principal branch; callers subdivide for those.
    """
    r = (x1 - poles) / (x0 - poles)
    lg = np.log(r)
    bad = ~(np.abs(lg.imag) < HALF_PI) | ~np.isfinite(lg)
    terms = np.where(bad, 0.0, weights * np.where(bad, 0.0, lg))
    z = np.zeros(1)
    acc = (z, z.copy(), z.copy(), z.copy())
    for j0 in range(0, len(terms), _CHUNK):
        acc = _csum_add(acc, np.atleast_1d(terms[j0:j0 + _CHUNK].sum()))
    sr, cr, si, ci = acc
    return complex((sr + cr)[0] + 1j * (si + ci)[0]), bad


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _pole_layer_sums_nb(points, poles, weights, offsets):  # pragma: no cover
        npts = points.shape[0]
        nl = offsets.shape[0] - 1
        out = np.zeros((npts, nl), dtype=np.complex128)
        mind = np.full(npts, np.inf)
        for i in prange(npts):
            u = points[i]
            md = np.inf
            for l in range(nl):
                sr = 0.0
                cr = 0.0
                si = 0.0
                ci = 0.0
                for j in range(offsets[l], offsets[l + 1]):
                    d = u - poles[j]
                    ad = abs(d)
                    if ad < md:
                        md = ad
                    if ad == 0.0:
                        continue  # caller raises on md == 0
                    t = weights[j] / d
                    x = t.real
                    s = sr + x
                    if abs(sr) >= abs(x):
                        cr += (sr - s) + x
                    else:
                        cr += (x - s) + sr
                    sr = s
                    x = t.imag
                    s = si + x
                    if abs(si) >= abs(x):
                        ci += (si - s) + x
                    else:
                        ci += (x - s) + si
                    si = s
                out[i, l] = complex(sr + cr, si + ci)
            mind[i] = md
        return out, mind

    @njit(cache=True)
    def _log_increments_nb(x0, x1, poles, weights):  # pragma: no cover
        n = poles.shape[0]
        bad = np.zeros(n, dtype=np.bool_)
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        for j in range(n):
            den = x0 - poles[j]
            num = x1 - poles[j]
            if den == 0 or num == 0:
                bad[j] = True
                continue
            lg = np.log(num / den)
            if not (abs(lg.imag) < HALF_PI):
                bad[j] = True
                continue
            t = weights[j] * lg
            x = t.real
            s = sr + x
            if abs(sr) >= abs(x):
                cr += (sr - s) + x
            else:
                cr += (x - s) + sr
            sr = s
            x = t.imag
            s = si + x
            if abs(si) >= abs(x):
                ci += (si - s) + x
            else:
                ci += (x - s) + si
            si = s
        return complex(sr + cr, si + ci), bad


def _prep(points, poles, weights, offsets=None):
    points = np.ascontiguousarray(points, dtype=np.complex128)
    poles = np.ascontiguousarray(poles, dtype=np.complex128)
    weights = np.ascontiguousarray(weights, dtype=np.complex128)
    if offsets is None:
        return points, poles, weights
    return points, poles, weights, np.ascontiguousarray(offsets, dtype=np.int64)


def pole_layer_sums(points, poles, weights, offsets, use_numba: bool | None = None):
    """Per-layer sums of w_j / (u_i - p_j).

    ``offsets`` delimits layers: poles[offsets[l]:offsets[l+1]] form layer l.
    Returns (sums of shape (npts, nlayers), min |u_i - p_j| per point).
    """
    args = _prep(points, poles, weights, offsets)
    if (HAVE_NUMBA if use_numba is None else use_numba) and len(args[0]):
        return _pole_layer_sums_nb(*args)
    return pole_layer_sums_numpy(*args)


def log_increments(x0: complex, x1: complex, poles, weights, use_numba: bool | None = None):
    _, poles, weights = _prep(np.empty(0), poles, weights)
    if (HAVE_NUMBA if use_numba is None else use_numba) and len(poles):
        return _log_increments_nb(complex(x0), complex(x1), poles, weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        return log_increments_numpy(complex(x0), complex(x1), poles, weights)


def compensated_sum(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Neumaier sum of a complex array along ``axis`` in index order."""
    v = np.moveaxis(np.asarray(values, dtype=np.complex128), axis, 0)
    z = np.zeros(v.shape[1:])
    acc = (z, z.copy(), z.copy(), z.copy())
    for row in v:
        acc = _csum_add(acc, row)
    sr, cr, si, ci = acc
    return (sr + cr) + 1j * (si + ci)
