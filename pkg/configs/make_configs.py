"""Regenerate the example configuration files from the reference fixtures.

    python3 configs/make_configs.py
"""

import json
from pathlib import Path

import numpy as np

from schottky import fixtures
from schottky.group import disks_from_source
from schottky.moebius import from_fixed_points
from schottky.config import GeneratorSpec, GroupConfig, Settings, cjson, to_jsonable

HERE = Path(__file__).parent


def fixed_point_config(a, b, mu, disks, settings):
    gens = tuple(GeneratorSpec(attracting=complex(x), repelling=complex(y), multiplier=complex(m))
                 for x, y, m in zip(a, b, mu))
    return GroupConfig(gens, tuple(disks), settings).to_dict()


def write(name, doc):
    (HERE / name).write_text(json.dumps(to_jsonable(doc), indent=2) + "\n")


def main():
    g1 = fixtures.genus1()
    write("genus1.json", fixed_point_config([1.0], [-1.0], [0.04], g1.disks, Settings(max_word_len=12)))

    g2 = fixtures.genus2()
    s2 = Settings(max_word_len=fixtures.GENUS2_WORD_LEN)
    a, b, mu = fixtures.GENUS2_ATTRACTING, fixtures.GENUS2_REPELLING, fixtures.GENUS2_MULTIPLIERS
    write("genus2.json", fixed_point_config(a, b, mu, g2.disks, s2))

    # 1% perturbation of every fixed point and multiplier, source disks kept
    rng = np.random.default_rng(7)
    jitter = lambda v: [complex(x) * (1 + 0.01 * (rng.random() - 0.5) * 2) for x in v]
    pa, pb, pmu = jitter(a), jitter(b), jitter(mu)
    disks = [disks_from_source(from_fixed_points(x, y, m), p.Dprime) for x, y, m, p in zip(pa, pb, pmu, g2.disks)]
    write("genus2_perturbed.json", fixed_point_config(pa, pb, pmu, disks, s2))

    overlap = fixed_point_config(a, b, mu, g2.disks, s2)
    overlap["disks"][1]["D"]["center"] = cjson(g2.disks[0].Dprime.center + 0.5 * g2.disks[0].Dprime.radius)
    write("genus2_overlapping.json", overlap)

    write("direction_random.json", {"schema": "schottky-direction/1", "kind": "random", "scale": 1.0})
    write("direction_scaling.json", {"schema": "schottky-direction/1", "kind": "scaling",
                                     "generator": 1, "epsilon": [1.0, 0.0]})
    write("direction_conjugation.json", {"schema": "schottky-direction/1", "kind": "conjugation",
                                         "X": [[[0.3, 0.1], [-0.2, 0.4]], [[0.5, -0.1], [-0.3, 0.2]]]})
    # three fixed points pinned (the conjugation gauge); mu_1, mu_2 and A_2 free
    free = [{"generator": k, "which": w, "part": p}
            for k, w in ((1, "multiplier"), (2, "multiplier"), (2, "attracting")) for p in ("re", "im")]
    write("targets_genus2.json", {"schema": "schottky-targets/1", "free": free,
                                  "targets": [{"type": "period_matrix_of", "config": "genus2.json"}],
                                  "max_iter": 8, "tol": 1e-10})


if __name__ == "__main__":
    main()
