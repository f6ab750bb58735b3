import numpy as np
import pytest

from schottky.fd import FDConfig, FDError, fd_directional
from schottky.group import Disk, SchottkyGroup, disks_from_source
from schottky.variational import PerturbationDirection


def unit(genus, k, i, j):
    ds = [np.zeros((2, 2), dtype=complex) for _ in range(genus)]
    ds[k][i, j] = 1
    return PerturbationDirection(tuple(ds))


def test_constant_function(g2):
    res = fd_directional(lambda g: 3.0 + 1j, g2, unit(2, 0, 0, 0))
    assert res.value == 0
    assert res.error < 1e-12


def test_linear_entry(g2):
    res = fd_directional(lambda g: g.generators[0].c11, g2, unit(2, 0, 0, 0))
    assert res.value == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("levels", [0, 1, 2])
def test_polynomial_exact_at_matching_level(g2, levels):
    # central differences are exact for degree 2; each Richardson level adds two degrees
    deg = 2 * levels + 2
    d = unit(2, 1, 0, 1)
    c = g2.generators[1].c12
    res = fd_directional(lambda g: g.generators[1].c12 ** deg, g2, d, FDConfig(richardson_levels=levels))
    assert abs(res.value - deg * c ** (deg - 1)) < 1e-9 * abs(deg * c ** (deg - 1))


def test_error_decreases_with_levels(g2):
    d = unit(2, 1, 0, 1)
    exact = np.exp(g2.generators[1].c12)
    errs = [abs(fd_directional(lambda g: np.exp(g.generators[1].c12), g2, d,
                               FDConfig(base_step=1e-2, richardson_levels=n)).value - exact)
            for n in range(3)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-12


def test_linear_in_direction(g2, rng):
    f = lambda g: g.generators[0].c11 * g.generators[1].c21 + g.generators[1].c22 ** 2
    d1, d2 = PerturbationDirection.random(g2, rng), PerturbationDirection.random(g2, rng)
    a = fd_directional(f, g2, d1 + d2)
    b = fd_directional(f, g2, d1).value + fd_directional(f, g2, d2).value
    assert abs(a.value - b) < 1e-8 * abs(b)


def test_array_valued(g2):
    res = fd_directional(lambda g: g.generators[0].as_array(), g2, unit(2, 0, 1, 0))
    assert np.allclose(res.value, [[0, 0], [1, 0]], atol=1e-10)


def test_step_scales_with_direction(g2):
    small = fd_directional(lambda g: 0.0, g2, unit(2, 0, 0, 0) * 1e-3)
    big = fd_directional(lambda g: 0.0, g2, unit(2, 0, 0, 0))
    assert small.step == pytest.approx(1e3 * big.step)


def test_invalid_step_rejected():
    with pytest.raises(ValueError):
        FDConfig(base_step=1e-10)
    with pytest.raises(ValueError):
        FDConfig(scheme="forward")


def test_unrecoverable_group_raises(g2):
    # perturbations keep every D' fixed, so overlapping source disks never heal
    pair = g2.disks[0]
    moved = Disk(g2.disks[1].Dprime.center, 0.5 * abs(pair.Dprime.center - g2.disks[1].Dprime.center) + 0.2)
    bad = SchottkyGroup(g2.generators, (pair, disks_from_source(g2.generators[1], moved)))
    assert not bad.validate().usable
    with pytest.raises(FDError):
        fd_directional(lambda grp: 0.0, bad, unit(2, 0, 0, 0))


def test_non_smooth_function_warns(g2):
    c0 = g2.generators[0].c11.real

    def f(g):
        t = g.generators[0].c11.real - c0
        return np.sign(t) * np.sqrt(abs(t))

    with pytest.warns(RuntimeWarning):
        res = fd_directional(f, g2, unit(2, 0, 0, 0))
    assert res.warning
