import numpy as np
import pytest

from schottky import fixtures
from schottky.group import Disk, GroupValidationError
from schottky.solver import (
    FixedPointParameterization,
    FreeParameter,
    IntegralTarget,
    ModuliProblem,
    PeriodTarget,
    RankDeficientJacobian,
    convergence_exponent,
    jacobian,
    newton_solve,
    realify,
)

A, B, MU = fixtures.GENUS2_ATTRACTING, fixtures.GENUS2_REPELLING, fixtures.GENUS2_MULTIPLIERS
MODULI = [FreeParameter(k, w, p) for k, w in ((0, "multiplier"), (1, "multiplier"), (1, "attracting"))
          for p in ("re", "im")]


def sources(group):
    return [Disk(p.Dprime.center, p.Dprime.radius) for p in group.disks]


def period_targets(pm):
    return [PeriodTarget(j, s, pm[j, s]) for j in range(2) for s in range(j, 2)]


def perturbed_problem(g2, pm2, seed, free=MODULI):
    rng = np.random.default_rng(seed)
    jitter = lambda v: [complex(x) * (1 + 0.01 * (2 * rng.random() - 1)) for x in v]
    param = FixedPointParameterization(jitter(A), jitter(B), jitter(MU), list(free), sources(g2))
    return ModuliProblem(param, period_targets(pm2.entries))


def test_realify_layout():
    out = realify(np.array([[1 + 2j, 3j], [4, 5 - 1j]]))
    assert out.tolist() == [[1, 0], [2, 3], [4, 5], [0, -1]]


def test_free_parameter_validation():
    with pytest.raises(ValueError):
        FreeParameter(0, "centre")
    with pytest.raises(ValueError):
        FreeParameter(0, "multiplier", "abs")


def test_underdetermined_problem_rejected(g2, pm2):
    param = FixedPointParameterization(list(A), list(B), list(MU), MODULI[:2], sources(g2))
    with pytest.raises(ValueError):
        ModuliProblem(param, period_targets(pm2.entries))


def test_parameterization_reproduces_fixture(g2):
    param = FixedPointParameterization(list(A), list(B), list(MU), MODULI, sources(g2))
    grp = param.group(param.vector())
    for a, b in zip(grp.generators, g2.generators):
        assert np.allclose(a.as_array(), b.as_array(), atol=1e-14)


def test_zero_iterations_at_solution(g2, pm2):
    param = FixedPointParameterization(list(A), list(B), list(MU), MODULI, sources(g2))
    _, trace = newton_solve(ModuliProblem(param, period_targets(pm2.entries)))
    assert trace.converged and trace.iterations == 0


def test_round_trip_from_one_percent(g2, pm2):
    group, trace = newton_solve(perturbed_problem(g2, pm2, 0), max_iter=8)
    assert trace.converged
    assert trace.residual_norms[-1] < 1e-8
    # pinned at 2 iterations for this seed; allow +-2
    assert 1 <= trace.iterations <= 4
    for k in range(2):
        assert abs(group.fixed_points(k).multiplier - MU[k]) < 1e-8


def test_genus1_recovers_multiplier(g1):
    target = fixtures.genus1_period(0.04)  # -0.5123i under the frozen sign
    param = FixedPointParameterization([1.0], [-1.0], [0.05], [FreeParameter(0, "multiplier", "re"),
                                                              FreeParameter(0, "multiplier", "im")],
                                       sources(g1))
    group, trace = newton_solve(ModuliProblem(param, [PeriodTarget(0, 0, target)], max_word_len=0))
    assert trace.converged
    assert abs(group.fixed_points(0).multiplier - 0.04) < 1e-9


def test_integral_target_round_trip(g2, basis2):
    from schottky.integrals import integrate, plan_path
    z, zp = 0.1 + 1.8j, 4.0 - 1.0j
    value = integrate(basis2[0], plan_path(g2, z, zp))
    param = FixedPointParameterization(list(A), list(B), [MU[0] * 1.01, MU[1]],
                                       MODULI[:2], sources(g2))
    _, trace = newton_solve(ModuliProblem(param, [IntegralTarget(0, z, zp, value)]))
    assert trace.converged


def test_jacobian_is_negated_variation(g2, pm2):
    problem = perturbed_problem(g2, pm2, 0)
    x = problem.parameterization.vector()
    group = problem.parameterization.group(x)
    var = problem.variations(group, problem.parameterization.directions(x))
    assert np.array_equal(jacobian(problem, group), -realify(var))


def test_duplicate_columns_identical(g2, pm2):
    free = MODULI + [MODULI[0]]
    problem = perturbed_problem(g2, pm2, 0, free)
    jac = jacobian(problem, problem.parameterization.group(problem.parameterization.vector()))
    assert np.array_equal(jac[:, 0], jac[:, -1])


def test_jacobian_cross_check(g2, pm2):
    problem = perturbed_problem(g2, pm2, 0)
    _, _, disc = jacobian(problem, g2, cross_check=True)
    assert disc < 1e-5


def test_gauge_parameters_detected_genus1(g1):
    # moving the attracting point alone is a conjugation: b11 does not change
    param = FixedPointParameterization([1.0], [-1.0], [0.04], [FreeParameter(0, "attracting", "re"),
                                                              FreeParameter(0, "attracting", "im")],
                                       sources(g1))
    problem = ModuliProblem(param, [PeriodTarget(0, 0, 0.1 - 0.5j)], max_word_len=0)
    with pytest.raises(RankDeficientJacobian) as info:
        newton_solve(problem)
    assert info.value.trace.records[0].condition > 1e12


def test_gauge_parameters_detected_genus2(g2, pm2):
    # A1, B1, B2 free with A2 pinned: up to conjugation only one cross-ratio moves
    free = [FreeParameter(k, w, p) for k, w in ((0, "attracting"), (0, "repelling"), (1, "repelling"))
            for p in ("re", "im")]
    param = FixedPointParameterization(list(A), list(B), list(MU), free, sources(g2))
    target = pm2.entries + 0.01j
    with pytest.raises(RankDeficientJacobian):
        newton_solve(ModuliProblem(param, period_targets(target)))


def test_invalid_start_rejected(g2, pm2):
    param = FixedPointParameterization([0.0, 0.1], list(B), list(MU), MODULI, sources(g2))
    with pytest.raises(GroupValidationError):
        newton_solve(ModuliProblem(param, period_targets(pm2.entries)))


def test_convergence_exponent_quadratic():
    norms = [1e-1, 1e-2, 1e-4, 1e-8, 3e-13]
    assert convergence_exponent(norms) == pytest.approx(2.0, abs=1e-9)


def test_convergence_exponent_linear():
    assert convergence_exponent([1e-3 * 0.1**k for k in range(6)]) < 1.2


def test_convergence_exponent_needs_data():
    assert np.isnan(convergence_exponent([1.0, 0.5]))


def test_condition_treats_noise_as_zero():
    from schottky.solver import jacobian_condition
    assert jacobian_condition(np.diag([1.0, 1e-3])) == pytest.approx(1e3)
    assert jacobian_condition(np.full((2, 2), 1e-16)) == np.inf
    assert jacobian_condition(np.diag([1.0, 1e-13])) == np.inf
