"""Acceptance criteria, one test each; the terminal summary prints a PASS/FAIL line per criterion."""

import json
import subprocess
import sys

import numpy as np
import pytest

from schottky import fixtures
from schottky.fd import fd_directional
from schottky.group import Disk
from schottky.integrals import a_periods, circle_integral, period_matrix
from schottky.series import (
    HolomorphicDifferential,
    ThirdKindDifferential,
    automorphy_defect,
    default_probes,
    holomorphic_basis,
)
from schottky.solver import (
    FixedPointParameterization,
    FreeParameter,
    ModuliProblem,
    PeriodTarget,
    convergence_exponent,
    newton_solve,
)
from schottky.variational import (
    BoundaryCache,
    PeriodVariation,
    PerturbationDirection,
    gauge_conjugation_direction,
    integrand_samples,
    vary_period_matrix,
)

SEED = 20240611


@pytest.fixture
def detail(record_property):
    return lambda text: record_property("detail", text)


@pytest.mark.criterion(1, "genus-1 period matches -log(mu)/(2 pi i) to 1e-8 for mu = 0.04, 0.05, 0.09")
def test_genus1_closed_form(detail):
    errs = []
    for mu in (0.04, 0.05, 0.09):
        g = fixtures.genus1(mu)
        b11 = period_matrix(g, holomorphic_basis(g, 12)).entries[0, 0]
        errs.append(abs(b11 - (-np.log(mu) / (2j * np.pi))))
    detail(f"max error {max(errs):.2e}")
    assert max(errs) < 1e-8


@pytest.mark.criterion(2, "period variation vs Richardson FD, 20 random genus-2 directions, rel < 1e-5")
def test_variation_vs_fd(g2, basis2, detail):
    rng = np.random.default_rng(SEED)
    pv = PeriodVariation(g2, basis2)

    def periods(grp):
        return period_matrix(grp, holomorphic_basis(grp, fixtures.GENUS2_WORD_LEN)).entries

    worst = 0.0
    for _ in range(20):
        d = PerturbationDirection.random(g2, rng)
        analytic = pv(d)
        fd = fd_directional(periods, g2, d).value
        # every entry, relative to its own size
        worst = max(worst, float(np.max(np.abs(analytic - fd) / np.abs(fd))))
    detail(f"max entrywise relative error {worst:.2e}")
    assert worst < 1e-5


@pytest.mark.criterion(3, "scaling direction: integrand < 1e-13 at every node, variation 0")
def test_scaling_gauge(g2, basis2, detail):
    cache = BoundaryCache(g2, basis2)
    worst_node, worst_var = 0.0, 0.0
    for l in range(2):
        d = PerturbationDirection.scaling(g2, l, 1.0)
        for i in range(2):
            for j in range(2):
                samples = np.concatenate(integrand_samples(cache, i, j, d, 256))
                worst_node = max(worst_node, float(np.max(np.abs(samples))))
        worst_var = max(worst_var, float(np.max(np.abs(vary_period_matrix(g2, basis2, d)))))
    detail(f"integrand {worst_node:.1e}, variation {worst_var:.1e}")
    assert worst_node < 1e-13 and worst_var < 1e-13


@pytest.mark.criterion(4, "conjugation directions for 10 random X: |delta B| < 1e-7")
def test_conjugation_gauge(g2, basis2, detail):
    rng = np.random.default_rng(SEED)
    pv = PeriodVariation(g2, basis2)
    worst = 0.0
    for _ in range(10):
        x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        worst = max(worst, float(np.max(np.abs(pv(gauge_conjugation_direction(g2, x))))))
    detail(f"max |delta B| {worst:.1e}")
    assert worst < 1e-7


@pytest.mark.criterion(5, "a-period matrix of the holomorphic basis is the identity to 1e-8")
def test_normalization(g1, g2, basis2, detail):
    res2 = np.max(np.abs(np.array([a_periods(h, g2) for h in basis2]) - np.eye(2)))
    res1 = abs(a_periods(holomorphic_basis(g1, 12)[0], g1)[0] - 1)
    detail(f"genus 2 {res2:.1e}, genus 1 {res1:.1e}")
    assert max(res1, res2) < 1e-8


@pytest.mark.criterion(6, "period matrix and its variation symmetric to 1e-7")
def test_symmetry(g2, basis2, pm2, detail):
    rng = np.random.default_rng(SEED)
    pv = PeriodVariation(g2, basis2)
    var_res = max(float(np.max(np.abs(full - full.T)))
                  for full in (pv.unsymmetrised(PerturbationDirection.random(g2, rng)) for _ in range(5)))
    detail(f"|b - b^T| {pm2.symmetry_residual:.1e}, |db - db^T| {var_res:.1e}")
    assert pm2.symmetry_residual < 1e-7 and var_res < 1e-7


@pytest.mark.criterion(7, "layer ratio within 2x of |mu|; error(512) < error(256)^1.5 once below 1e-3")
def test_convergence_diagnostics(g1, detail):
    mu = 0.04
    d = ThirdKindDifferential.build(g1, 0.2 + 1.5j, -0.1 - 1.4j, 8)
    norms = d.layer_norms(default_probes(g1))
    # layer 0 is the bare rational term; geometric decay is measured from layer 1
    ratios = norms[2:] / norms[1:-1]
    ratio_ok = bool(np.all((ratios > mu / 2) & (ratios < 2 * mu)))
    # a pole just outside D'_1 keeps the 256-node error above rounding
    near = ThirdKindDifferential.build(g1, -1 + 0.37j, 0.2 - 1.5j, 8)
    disk = g1.disks[0].Dprime
    ref = circle_integral(near, disk, 8192)
    e256, e512 = (abs(circle_integral(near, disk, n) - ref) for n in (256, 512))
    detail(f"ratios {ratios.min():.4f}..{ratios.max():.4f}, err256 {e256:.1e}, err512 {e512:.1e}")
    assert ratio_ok
    assert e256 < 1e-3 and e512 < e256**1.5


@pytest.mark.criterion(8, "Newton round trip from 1% perturbation: residual < 1e-8, <= 8 iterations, exponent >= 1.8")
def test_newton_round_trip(g2, pm2, detail):
    targets = [PeriodTarget(j, s, pm2.entries[j, s]) for j in range(2) for s in range(j, 2)]
    free = [FreeParameter(k, w, p) for k, w in ((0, "multiplier"), (1, "multiplier"), (1, "attracting"))
            for p in ("re", "im")]
    sources = [Disk(p.Dprime.center, p.Dprime.radius) for p in g2.disks]
    rng = np.random.default_rng(SEED)
    summary = []
    for _ in range(3):
        jitter = lambda v: [complex(x) * (1 + 0.01 * (2 * rng.random() - 1)) for x in v]
        param = FixedPointParameterization(jitter(fixtures.GENUS2_ATTRACTING), jitter(fixtures.GENUS2_REPELLING),
                                           jitter(fixtures.GENUS2_MULTIPLIERS), free, sources)
        _, trace = newton_solve(ModuliProblem(param, targets), max_iter=8)
        summary.append((trace.iterations, trace.residual_norms[-1], convergence_exponent(trace.residual_norms)))
    detail(", ".join(f"{it} it / {r:.1e} / p={p:.2f}" for it, r, p in summary))
    for it, r, p in summary:
        assert it <= 8 and r < 1e-8 and p >= 1.8


@pytest.mark.criterion(9, "byte-identical reports across two --threads 1 runs")
def test_determinism(configs_dir, tmp_path, detail):
    outputs = []
    for i in range(2):
        out = tmp_path / f"run{i}.json"
        subprocess.run([sys.executable, "-m", "schottky", "periods", str(configs_dir / "genus2.json"),
                        "--threads", "1", "--out", str(out)], check=True)
        outputs.append(out.read_bytes())
    detail(f"{len(outputs[0])} bytes, backend {json.loads(outputs[0])['backend']}")
    assert outputs[0] == outputs[1]


@pytest.mark.criterion(10, "automorphy defect decreases over word lengths 3, 5, 7 on genus 2")
def test_automorphy(g2, detail):
    rows = []
    for k in range(2):
        rows.append([automorphy_defect(HolomorphicDifferential.build(g2, k, L), g2, k) for L in (3, 5, 7)])
    detail("; ".join(" > ".join(f"{x:.1e}" for x in r) for r in rows))
    for r in rows:
        assert r[0] > r[1] > r[2]
