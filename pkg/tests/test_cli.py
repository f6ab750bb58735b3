import json
import subprocess
import sys

import numpy as np
import pytest

from schottky import fixtures
from schottky.cli import default_pole_pair, main
from schottky.config import parse_config


def run(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def c(pair):
    return complex(*pair)


def test_validate_pass(configs_dir, tmp_path):
    code, rep = run(["validate", str(configs_dir / "genus1.json")], tmp_path)
    assert code == 0 and rep["validation"]["usable"]


def test_validate_overlap_names_pair(configs_dir, tmp_path):
    code, rep = run(["validate", str(configs_dir / "genus2_overlapping.json")], tmp_path)
    assert code == 1
    assert rep["validation"]["offending"]
    assert "disjoint:D'1/D2" in rep["validation"]["offending"]


def test_malformed_exit_2(configs_dir, capsys):
    assert main(["validate", str(configs_dir / "malformed_complex.json")]) == 2
    assert "generators[0].attracting" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert main(["validate", str(tmp_path / "absent.json")]) == 2


def test_usage_error_exit_2(configs_dir):
    with pytest.raises(SystemExit) as info:
        main(["periods", str(configs_dir / "genus1.json"), "--len", "3", "--tol", "1e-9"])
    assert info.value.code == 2


def test_echoed_config_reparses(configs_dir, tmp_path):
    code, rep = run(["periods", str(configs_dir / "genus1.json"), "--nodes", "128"], tmp_path)
    cfg = parse_config(rep["config"])
    assert cfg.settings.nodes == 128
    assert parse_config(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_periods_genus1(configs_dir, tmp_path):
    code, rep = run(["periods", str(configs_dir / "genus1.json")], tmp_path)
    assert code == 0
    b11 = c(rep["results"]["period_matrix"][0][0])
    assert abs(b11 - fixtures.genus1_period(0.04)) < 1e-8
    assert rep["results"]["a_period_identity_residual"] < 1e-8
    assert "timings" not in rep


def test_periods_node_doubling(configs_dir, tmp_path):
    _, a = run(["periods", str(configs_dir / "genus2.json"), "--nodes", "256"], tmp_path, "a.json")
    _, b = run(["periods", str(configs_dir / "genus2.json"), "--nodes", "512"], tmp_path, "b.json")
    pa = np.array([[c(x) for x in row] for row in a["results"]["period_matrix"]])
    pb = np.array([[c(x) for x in row] for row in b["results"]["period_matrix"]])
    assert np.max(np.abs(pa - pb)) < 1e-10
    assert a["results"]["symmetry_residual"] < 1e-7


def test_timings_flag(configs_dir, tmp_path):
    _, rep = run(["periods", str(configs_dir / "genus1.json"), "--timings"], tmp_path)
    assert rep["timings"]["series"] >= 0


def test_integrate_matches_library(configs_dir, tmp_path, g2, basis2):
    from schottky.integrals import integrate, plan_path
    z, zp = default_pole_pair(g2)
    code, rep = run(["integrate", str(configs_dir / "genus2.json"), "--index", "2",
                     f"--from={z.real},{z.imag}", f"--to={zp.real},{zp.imag}"], tmp_path)
    assert code == 0
    assert abs(c(rep["results"]["value"]) - integrate(basis2[1], plan_path(g2, z, zp))) < 1e-12


def test_vary_scaling_zero(configs_dir, tmp_path):
    code, rep = run(["vary", str(configs_dir / "genus2.json"),
                     str(configs_dir / "direction_scaling.json")], tmp_path)
    assert code == 0
    assert rep["results"]["integrand_max"] < 1e-13
    assert np.max(np.abs(np.array(rep["results"]["variation"]))) < 1e-13


def test_vary_conjugation_near_zero(configs_dir, tmp_path):
    _, rep = run(["vary", str(configs_dir / "genus2.json"),
                  str(configs_dir / "direction_conjugation.json")], tmp_path)
    assert np.max(np.abs(np.array(rep["results"]["variation"]))) < 1e-7


@pytest.mark.slow
def test_vary_random_check_fd(configs_dir, tmp_path):
    code, rep = run(["vary", str(configs_dir / "genus2.json"),
                     str(configs_dir / "direction_random.json"), "--check-fd", "--seed", "3"], tmp_path)
    assert code == 0
    assert rep["results"]["fd"]["relative_discrepancy"] < 1e-5


def test_vary_integral_needs_endpoints(configs_dir):
    assert main(["vary", str(configs_dir / "genus2.json"), str(configs_dir / "direction_random.json"),
                 "--target", "integral"]) == 2


@pytest.mark.slow
def test_solve_from_perturbed(configs_dir, tmp_path):
    code, rep = run(["solve", str(configs_dir / "genus2_perturbed.json"),
                     str(configs_dir / "targets_genus2.json")], tmp_path)
    assert code == 0
    res = rep["results"]
    assert res["trace"]["converged"] and res["trace"]["iterations"] <= 8
    assert res["trace"]["records"][-1]["residual_norm"] < 1e-8
    assert res["convergence_exponent"] >= 1.8


def test_solve_gauge_only_exit_1(configs_dir, tmp_path):
    targets = tmp_path / "t.json"
    targets.write_text(json.dumps({
        "free": [{"generator": 1, "which": "attracting", "part": p} for p in ("re", "im")],
        "targets": [{"type": "period", "j": 1, "s": 1, "value": [0.0, -0.5]}],
    }))
    code, rep = run(["solve", str(configs_dir / "genus1.json"), str(targets)], tmp_path)
    assert code == 1
    assert "condition" in rep["results"]["error"]


def test_solve_bad_targets_exit_2(configs_dir, tmp_path):
    targets = tmp_path / "t.json"
    targets.write_text(json.dumps({"free": [{"generator": 1, "which": "centre"}],
                                   "targets": [{"type": "period", "j": 1, "s": 1, "value": [0, 1]}]}))
    assert main(["solve", str(configs_dir / "genus1.json"), str(targets)]) == 2


def test_converge_report(configs_dir, tmp_path):
    code, rep = run(["converge", str(configs_dir / "genus1.json")], tmp_path)
    assert code == 0
    third = rep["results"]["layers"][-1]
    assert third["differential"].startswith("third")
    assert third["monotone"]
    ratios = [r for r in third["ratios"][1:4]]
    assert all(0.02 < r < 0.08 for r in ratios)


def test_deterministic_reports(configs_dir, tmp_path):
    args = ["periods", str(configs_dir / "genus2.json"), "--threads", "1"]
    run(args, tmp_path, "a.json")
    run(args, tmp_path, "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_module_entry_point(configs_dir):
    out = subprocess.run([sys.executable, "-m", "schottky", "validate", str(configs_dir / "genus1.json")],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0
    assert json.loads(out.stdout)["command"] == "validate"
